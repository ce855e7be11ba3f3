#include "lobsurv/analytics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

namespace lobsurv {

Dataset make_dataset(const ObservationSet& set, HeadKind head) {
    const std::size_t n = set.observations.size();
    if (n == 0) throw ConfigError("no observations to build a dataset from");
    const std::size_t d = set.observations.front().features.size();
    const std::size_t k = static_cast<std::size_t>(head_targets(head));
    if (set.observations.front().targets.size() < k) {
        throw ConfigError("the " + to_string(head) + " head needs " + std::to_string(k) + " target assets");
    }
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    out.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& obs = set.observations[i];
        const auto r = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < d; ++j) out.x(r, static_cast<Eigen::Index>(j)) = obs.features[j];
        for (std::size_t j = 0; j < k; ++j) out.y(r, static_cast<Eigen::Index>(j)) = obs.targets[j];
    }
    return out;
}

LatencySummary summarize_latency(std::vector<std::int64_t> ns) {
    LatencySummary s;
    s.count = ns.size();
    if (ns.empty()) return s;
    std::sort(ns.begin(), ns.end());
    auto rank = [&](double p) {
        const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(ns.size())));
        return static_cast<double>(ns[std::min(ns.size(), std::max<std::size_t>(idx, 1)) - 1]) * 1e-3;
    };
    s.p50_us = rank(0.50);
    s.p95_us = rank(0.95);
    s.p99_us = rank(0.99);
    s.max_us = static_cast<double>(ns.back()) * 1e-3;
    s.mean_us = std::accumulate(ns.begin(), ns.end(), 0.0) / static_cast<double>(ns.size()) * 1e-3;
    return s;
}

Detector::Detector(const MlpModel& model, DetectOptions opts) : model_(model), opts_(opts) {
    if (model.net.head == HeadKind::BivariateGaussian) {
        throw ConfigError("detection needs a univariate model");
    }
    if (model.assets.empty()) throw ModelLoadError("model lists no assets");
    model.check_compatible(model.kernel, model.assets);
    for (const auto& a : model.assets) pipes_.push_back(AssetPipeline{a, BookTop{}, FlowState(model.kernel), MidHistory{}});
    x_plus_.reserve(pipes_.size() * model.kernel.feature_count());
}

std::optional<SpoofVerdict> Detector::on_event(const LobEvent& ev, std::size_t index) {
    const auto start = std::chrono::steady_clock::now();
    ++counts_.events;
    AssetPipeline* pipe = nullptr;
    for (auto& p : pipes_) {
        if (p.asset == ev.asset) pipe = &p;
    }
    if (pipe == nullptr) return std::nullopt;
    const bool scored_asset = pipe == &pipes_.front();

    switch (ev.kind) {
        case EventKind::Bbo:
            pipe->top = track_book(ev, pipe->top);
            return std::nullopt;
        case EventKind::Trade:
            pipe->flows.advance_to(ev.ts_ns);
            pipe->flows.add_market(*ev.side, ev.notional());
            return std::nullopt;
        case EventKind::LimitAdd:
            break;
    }

    if (scored_asset) ++counts_.limit_orders;
    if (!pipe->top.valid()) {
        if (scored_asset) ++counts_.no_quote;
        return std::nullopt;
    }
    const double delta = compute_distance(ev, pipe->top);
    const double notional = ev.notional();
    if (!opts_.filter.passes(notional, delta)) {
        if (scored_asset) ++counts_.filtered_out;
        return std::nullopt;
    }
    pipe->flows.advance_to(ev.ts_ns);
    pipe->flows.add_limit(*ev.side, notional, delta);
    if (!scored_asset) return std::nullopt;
    for (const auto& p : pipes_) {
        if (!p.top.valid()) {
            ++counts_.no_quote;
            return std::nullopt;
        }
    }

    x_plus_.clear();
    for (const auto& p : pipes_) {
        x_plus_.push_back(p.top.spread_bps());
        if (&p == pipe || !p.flows.started()) {
            auto cells = p.flows.cells();
            x_plus_.insert(x_plus_.end(), cells.begin(), cells.end());
        } else {
            const FlowState other = p.flows.at(std::max(ev.ts_ns, p.flows.last_update()));
            auto cells = other.cells();
            x_plus_.insert(x_plus_.end(), cells.begin(), cells.end());
        }
    }
    // x0: the order's own contribution removed, floored at zero.
    x_zero_ = x_plus_;
    const KernelConfig& cfg = model_.kernel;
    const FeatureLayout layout(cfg);
    const double v = volume_map(notional);
    for (std::size_t e = 0; e < cfg.etas.size(); ++e) {
        const double contribution = v * std::exp(-cfg.etas[e] * delta);
        for (std::size_t b = 0; b < cfg.betas.size(); ++b) {
            double& cell = x_zero_[layout.limit(*ev.side, b, e)];
            cell = std::max(0.0, cell - contribution);
        }
    }

    const GainResult gain = expected_gain(model_, x_plus_, x_zero_, *ev.side, pipe->top, notional, delta, opts_.params);
    SpoofVerdict verdict = judge(ev, index, delta, gain, opts_.params.large_threshold);
    verdict.latency_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    ++counts_.scored;
    if (verdict.large) ++counts_.large;
    if (verdict.suspicious) ++counts_.suspicious;
    if (opts_.record_latency) latencies_.push_back(verdict.latency_ns);
    return verdict;
}

DetectSummary Detector::summary() const {
    DetectSummary s = counts_;
    s.latency = summarize_latency(latencies_);
    return s;
}

DetectSummary run_detection(const MlpModel& model, const std::vector<LobEvent>& events, const DetectOptions& opts,
                            const VerdictSink& sink) {
    Detector det(model, opts);
    for (std::size_t i = 0; i < events.size(); ++i) {
        auto v = det.on_event(events[i], i);
        if (v && sink) sink(*v);
    }
    return det.summary();
}

EfficacyReport score_against_labels(const std::vector<SpoofVerdict>& verdicts, const std::vector<SpoofLabel>& labels) {
    using Key = std::tuple<Nanos, std::string, Side>;
    std::map<Key, std::vector<std::pair<double, bool>>> truth;  // notional, matched
    for (const auto& l : labels) truth[{l.ts_ns, l.asset, l.side}].push_back({l.notional, false});

    EfficacyReport r;
    r.labeled = labels.size();
    for (const auto& v : verdicts) {
        if (v.suspicious) ++r.flagged;
        bool is_spoof = false;
        auto it = truth.find({v.ts_ns, v.asset, v.side});
        if (it != truth.end()) {
            for (auto& [notional, matched] : it->second) {
                if (!matched && std::abs(notional - v.notional) <= 1e-6 * std::max(1.0, notional)) {
                    matched = true;
                    is_spoof = true;
                    break;
                }
            }
        }
        if (is_spoof) {
            ++r.labeled_scored;
            if (v.suspicious) ++r.labeled_flagged;
        } else if (v.large) {
            ++r.normal_large;
            if (v.suspicious) ++r.normal_large_flagged;
        } else {
            ++r.normal_small;
            if (v.suspicious) ++r.normal_small_flagged;
        }
    }
    return r;
}

Moments predicted_moments(const Theta& theta, int target) {
    Moments m;
    switch (theta.kind) {
        case HeadKind::Gaussian:
            m.mean = theta.mu;
            m.std = theta.sigma;
            break;
        case HeadKind::SkewGaussian: {
            const auto mv = dist::sn_mean_var(theta.skew());
            m.mean = mv.mean;
            m.std = std::sqrt(mv.variance);
            break;
        }
        case HeadKind::BivariateGaussian:
            m.mean = target == 0 ? theta.mu : theta.mu2;
            m.std = target == 0 ? theta.sigma : theta.sigma2;
            break;
    }
    m.sharpe = m.mean / m.std;
    return m;
}

std::string to_string(PdVariable v) {
    switch (v) {
        case PdVariable::Spread: return "spread";
        case PdVariable::ImbalanceLo: return "imbalance_lo";
        case PdVariable::ImbalanceMo: return "imbalance_mo";
    }
    return "spread";
}

PdVariable pd_variable_from_string(std::string_view s) {
    if (s == "spread") return PdVariable::Spread;
    if (s == "imbalance_lo") return PdVariable::ImbalanceLo;
    if (s == "imbalance_mo") return PdVariable::ImbalanceMo;
    throw ConfigError("unknown partial dependence variable '" + std::string(s) + "'");
}

std::vector<double> log_edges(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > lo) || n == 0) throw ConfigError("log bins need 0 < lo < hi and n > 0");
    std::vector<double> e(n + 1);
    for (std::size_t i = 0; i <= n; ++i) e[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n));
    e.back() = hi;
    return e;
}

std::vector<double> linear_edges(double lo, double hi, std::size_t n) {
    if (!(hi > lo) || n == 0) throw ConfigError("linear bins need lo < hi and n > 0");
    std::vector<double> e(n + 1);
    for (std::size_t i = 0; i <= n; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    e.back() = hi;
    return e;
}

double pd_value(PdVariable v, std::span<const double> raw, const KernelConfig& kernel) {
    if (v == PdVariable::Spread) return raw[0];
    FeatureVector fv;
    fv.values.assign(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(kernel.feature_count()));
    return v == PdVariable::ImbalanceLo ? imbalance_lo(fv, kernel) : imbalance_mo(fv, kernel);
}

PartialDependenceReport partial_dependence(const MlpModel& model, const RowMatrix& rows, PdVariable variable,
                                           const std::vector<double>& edges, int target) {
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end())) {
        throw ConfigError("bin edges must be increasing with at least two entries");
    }
    PartialDependenceReport rep;
    rep.variable = variable;
    const std::size_t nb = edges.size() - 1;
    rep.bins.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        rep.bins[b].lo = edges[b];
        rep.bins[b].hi = edges[b + 1];
    }
    std::size_t in_range = 0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        std::span<const double> raw(rows.row(i).data(), static_cast<std::size_t>(rows.cols()));
        const double x = pd_value(variable, raw, model.kernel);
        if (!(x >= edges.front() && x <= edges.back())) {
            ++rep.out_of_range;
            continue;
        }
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        std::size_t b = static_cast<std::size_t>(it - edges.begin());
        b = std::min(b == 0 ? 0 : b - 1, nb - 1);
        const Moments m = predicted_moments(model.predict(raw), target);
        PdBin& bin = rep.bins[b];
        ++bin.count;
        bin.mean += m.mean;
        bin.std += m.std;
        bin.sharpe += m.sharpe;
        ++in_range;
    }
    for (auto& bin : rep.bins) {
        if (bin.count == 0) continue;
        const double c = static_cast<double>(bin.count);
        bin.mean /= c;
        bin.std /= c;
        bin.sharpe /= c;
        bin.weight = c / static_cast<double>(in_range);
    }
    return rep;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw DimensionError("spearman needs two equal samples of size >= 2");
    const auto ra = average_ranks(a), rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

ResponseCell response_statistics(std::span<const double> diffs) {
    ResponseCell c;
    c.n = diffs.size();
    if (c.n == 0) return c;
    const double n = static_cast<double>(c.n);
    c.mean_diff = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
    if (c.n < 2) return c;
    double ss = 0.0;
    for (double d : diffs) ss += (d - c.mean_diff) * (d - c.mean_diff);
    c.var = ss / (n - 1.0);
    if (c.var > 0.0) {
        const double t = std::sqrt(n) * c.mean_diff / std::sqrt(c.var);
        c.t_stat = t;
        boost::math::students_t dist(n - 1.0);
        c.p_value = std::clamp(2.0 * boost::math::cdf(dist, -std::abs(t)), 0.0, 1.0);
    }
    return c;
}

void add_hypothetical_order(std::span<double> raw, const KernelConfig& kernel, int block, Side side, double size,
                            double distance_bps) {
    const FeatureLayout layout(kernel);
    const std::size_t offset = static_cast<std::size_t>(block) * layout.size();
    if (offset + layout.size() > raw.size()) throw DimensionError("feature row has no block " + std::to_string(block));
    const double v = volume_map(size);
    for (std::size_t e = 0; e < kernel.etas.size(); ++e) {
        const double contribution = v * std::exp(-kernel.etas[e] * distance_bps);
        for (std::size_t b = 0; b < kernel.betas.size(); ++b) raw[offset + layout.limit(side, b, e)] += contribution;
    }
}

PriceResponseReport price_response(const MlpModel& model, const RowMatrix& rows, const ResponseOptions& opts) {
    if (opts.n_samples < 2) throw ConfigError("price response needs at least two samples");
    const auto n_rows = static_cast<std::size_t>(rows.rows());
    if (n_rows < opts.n_samples) throw ConfigError("fewer evaluation rows than requested samples");
    if (opts.target != 0 && model.net.head != HeadKind::BivariateGaussian) {
        throw ConfigError("only the bivariate head has a second target");
    }

    // Partial Fisher-Yates over row indices.
    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> idx(n_rows);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < opts.n_samples; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n_rows - i));
        std::swap(idx[i], idx[j]);
    }
    PriceResponseReport rep;
    rep.sample_rows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(opts.n_samples));

    const std::size_t d = static_cast<std::size_t>(rows.cols());
    std::vector<double> base_sharpe(opts.n_samples);
    for (std::size_t s = 0; s < opts.n_samples; ++s) {
        std::span<const double> raw(rows.row(static_cast<Eigen::Index>(rep.sample_rows[s])).data(), d);
        base_sharpe[s] = predicted_moments(model.predict(raw), opts.target).sharpe;
    }

    std::vector<double> x(d), diffs(opts.n_samples);
    for (Side side : {Side::Bid, Side::Ask}) {
        for (double q : opts.sizes) {
            for (double delta : opts.distances) {
                for (std::size_t s = 0; s < opts.n_samples; ++s) {
                    const double* src = rows.row(static_cast<Eigen::Index>(rep.sample_rows[s])).data();
                    std::copy(src, src + d, x.begin());
                    add_hypothetical_order(x, model.kernel, opts.insert_asset, side, q, delta);
                    diffs[s] = predicted_moments(model.predict(x), opts.target).sharpe - base_sharpe[s];
                }
                ResponseCell c = response_statistics(diffs);
                c.side = side;
                c.size = q;
                c.distance = delta;
                rep.cells.push_back(c);
            }
        }
    }
    return rep;
}

BenchReport run_bench(const MlpModel& model, const std::vector<LobEvent>& events, const DetectOptions& opts,
                      std::size_t warmup_events) {
    {
        Detector warm(model, opts);
        const std::size_t n = std::min(warmup_events, events.size());
        for (std::size_t i = 0; i < n; ++i) warm.on_event(events[i], i);
    }
    Detector det(model, opts);
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < events.size(); ++i) det.on_event(events[i], i);
    const auto t1 = std::chrono::steady_clock::now();
    BenchReport r;
    r.summary = det.summary();
    r.seconds = std::chrono::duration<double>(t1 - t0).count();
    r.throughput = r.seconds > 0.0 ? static_cast<double>(r.summary.scored) / r.seconds : 0.0;
    return r;
}

}  // namespace lobsurv
