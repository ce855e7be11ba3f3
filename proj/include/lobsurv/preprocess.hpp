#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lobsurv {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kLambdaMin = 0.01;
inline constexpr double kLambdaMax = 2.0;
inline constexpr double kStdFloor = 1e-9;

/// (x^lambda - 1) / lambda for x >= 0, lambda > 0.
double boxcox(double x, double lambda);

/// Log of the unbiased sample variance of the transformed sample, i.e. minus
/// twice the profiled Gaussian log-likelihood per point, up to a constant.
double boxcox_log_variance(std::span<const double> samples, double lambda);

struct LambdaFit {
    double lambda = 1.0;
    bool degenerate = false;
};

/// Minimizes boxcox_log_variance over [kLambdaMin, kLambdaMax]: 200-point
/// log-spaced grid, then golden-section search around the best grid point.
/// Fewer than two distinct values give lambda = 1 and the degenerate flag.
LambdaFit fit_lambda(std::span<const double> samples);

struct FeatureScaling {
    double lambda = 1.0;
    double mean = 0.0;
    double std = 1.0;
    bool degenerate = false;
};

struct FeatureTransform {
    std::vector<FeatureScaling> features;
    std::string fitted_on;  // fingerprint of the training matrix

    std::size_t size() const { return features.size(); }

    /// z = (T_lambda(x) - mean) / std per feature; degenerate features map
    /// to 0. Negative inputs are clamped to 0 before the power transform.
    void apply(std::span<const double> x, std::span<double> z) const;
    std::vector<double> apply(std::span<const double> x) const;
    RowMatrix apply(const RowMatrix& x) const;
};

struct FitOptions {
    /// Lambda is fitted on at most this many evenly strided rows; mean and
    /// std always use every row.
    std::size_t max_lambda_samples = 50'000;
};

FeatureTransform fit_transform(const RowMatrix& train, const FitOptions& opts = {});

std::string transform_to_json(const FeatureTransform& t);
FeatureTransform transform_from_json(std::string_view text);

}  // namespace lobsurv
