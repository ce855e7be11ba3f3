#include "lobsurv/preprocess.hpp"

#include "json_io.hpp"
#include "lobsurv/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>

namespace lobsurv {

namespace {

// expm1 keeps precision for small lambda * log x; log 0 = -inf gives -1/lambda.
double boxcox_from_log(double log_x, double lambda) { return std::expm1(lambda * log_x) / lambda; }

double log_variance_from_logs(std::span<const double> logs, double lambda) {
    // Two-pass variance for numerical safety.
    double mean = 0.0;
    for (double l : logs) mean += boxcox_from_log(l, lambda);
    mean /= static_cast<double>(logs.size());
    double ss = 0.0;
    for (double l : logs) {
        const double d = boxcox_from_log(l, lambda) - mean;
        ss += d * d;
    }
    return std::log(ss / static_cast<double>(logs.size() - 1));
}

bool has_two_distinct(std::span<const double> xs) {
    return std::any_of(xs.begin(), xs.end(), [&](double v) { return v != xs.front(); });
}

std::string matrix_fingerprint(const RowMatrix& m) {
    // FNV-1a over the raw bytes plus the shape.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    const std::int64_t shape[2] = {m.rows(), m.cols()};
    mix(shape, sizeof shape);
    mix(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

double boxcox(double x, double lambda) { return boxcox_from_log(std::log(x), lambda); }

double boxcox_log_variance(std::span<const double> samples, double lambda) {
    std::vector<double> logs(samples.size());
    std::transform(samples.begin(), samples.end(), logs.begin(), [](double v) { return std::log(v); });
    return log_variance_from_logs(logs, lambda);
}

LambdaFit fit_lambda(std::span<const double> samples) {
    if (samples.size() < 2 || !has_two_distinct(samples)) return {1.0, true};
    std::vector<double> logs(samples.size());
    std::transform(samples.begin(), samples.end(), logs.begin(), [](double v) { return std::log(v); });
    auto objective = [&](double lam) { return log_variance_from_logs(logs, lam); };

    constexpr int kGrid = 200;
    const double log_lo = std::log(kLambdaMin), log_hi = std::log(kLambdaMax);
    auto grid = [&](int i) { return std::exp(log_lo + (log_hi - log_lo) * i / (kGrid - 1)); };
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kGrid; ++i) {
        const double v = objective(grid(i));
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }

    // Golden-section on the bracket formed by the neighbouring grid points.
    double a = grid(std::max(best - 1, 0));
    double b = grid(std::min(best + 1, kGrid - 1));
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c), fd = objective(d);
    while (b - a > 1e-7) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    double lam = 0.5 * (a + b);
    // Keep the grid point if refinement did not improve on it.
    if (!(objective(lam) <= best_val)) lam = grid(best);
    return {lam, false};
}

void FeatureTransform::apply(std::span<const double> x, std::span<double> z) const {
    if (x.size() != features.size() || z.size() != features.size()) {
        throw DimensionError("feature transform expects " + std::to_string(features.size()) + " values, got " +
                             std::to_string(x.size()));
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        z[i] = f.degenerate ? 0.0 : (boxcox(std::max(x[i], 0.0), f.lambda) - f.mean) / f.std;
    }
}

std::vector<double> FeatureTransform::apply(std::span<const double> x) const {
    std::vector<double> z(x.size());
    apply(x, z);
    return z;
}

RowMatrix FeatureTransform::apply(const RowMatrix& x) const {
    RowMatrix z(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        apply(std::span<const double>(x.row(r).data(), static_cast<std::size_t>(x.cols())),
              std::span<double>(z.row(r).data(), static_cast<std::size_t>(z.cols())));
    }
    return z;
}

FeatureTransform fit_transform(const RowMatrix& train, const FitOptions& opts) {
    if (train.rows() == 0) throw ConfigError("cannot fit a feature transform on an empty training set");
    FeatureTransform t;
    t.fitted_on = matrix_fingerprint(train);
    const auto n = static_cast<std::size_t>(train.rows());
    const std::size_t stride = std::max<std::size_t>(1, (n + opts.max_lambda_samples - 1) / opts.max_lambda_samples);
    std::vector<double> column(n), sub;
    for (Eigen::Index j = 0; j < train.cols(); ++j) {
        for (std::size_t i = 0; i < n; ++i) column[i] = std::max(train(static_cast<Eigen::Index>(i), j), 0.0);
        FeatureScaling f;
        if (!has_two_distinct(column)) {
            f.degenerate = true;
            t.features.push_back(f);
            continue;
        }
        sub.clear();
        for (std::size_t i = 0; i < n; i += stride) sub.push_back(column[i]);
        if (!has_two_distinct(sub)) sub = column;
        f.lambda = fit_lambda(sub).lambda;
        double mean = 0.0;
        for (double v : column) mean += boxcox(v, f.lambda);
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double v : column) {
            const double d = boxcox(v, f.lambda) - mean;
            ss += d * d;
        }
        f.mean = mean;
        f.std = std::max(std::sqrt(ss / static_cast<double>(n > 1 ? n - 1 : 1)), kStdFloor);
        t.features.push_back(f);
    }
    return t;
}

std::string transform_to_json(const FeatureTransform& t) { return detail::to_json(t).dump(); }

FeatureTransform transform_from_json(std::string_view text) {
    try {
        return detail::transform_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw ModelLoadError(std::string("invalid feature transform: ") + e.what());
    }
}

}  // namespace lobsurv
