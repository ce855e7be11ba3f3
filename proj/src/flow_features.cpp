#include "lobsurv/flow_features.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace lobsurv {

namespace {

std::string real_repr(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

double weighted_log_ratio(std::span<const double> bid, std::span<const double> ask, std::span<const double> w) {
    const std::size_t k = bid.size();
    if (!w.empty() && w.size() != k) throw DimensionError("imbalance weights must have one entry per cell");
    const double uniform = 1.0 / static_cast<double>(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sum += (w.empty() ? uniform : w[i]) * (std::log1p(bid[i]) - std::log1p(ask[i]));
    }
    return sum;
}

}  // namespace

void KernelConfig::validate() const {
    if (betas.empty() || etas.empty()) throw ConfigError("kernel scales must be non-empty");
    for (double b : betas) {
        if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("betas must be positive");
    }
    for (double e : etas) {
        if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("etas must be positive");
    }
}

double KernelConfig::min_beta() const { return *std::min_element(betas.begin(), betas.end()); }

std::vector<std::string> feature_names(const KernelConfig& cfg, const std::string& asset) {
    const std::string prefix = asset.empty() ? "" : asset + ":";
    std::vector<std::string> names;
    names.reserve(cfg.feature_count());
    names.push_back(prefix + "spread_bps");
    for (Side s : {Side::Bid, Side::Ask}) {
        for (double b : cfg.betas) {
            for (double e : cfg.etas) {
                names.push_back(prefix + "L_" + std::string(to_string(s)) + "_beta" + real_repr(b) + "_eta" + real_repr(e));
            }
        }
    }
    for (Side s : {Side::Bid, Side::Ask}) {
        for (double b : cfg.betas) names.push_back(prefix + "M_" + std::string(to_string(s)) + "_beta" + real_repr(b));
    }
    return names;
}

std::string feature_fingerprint(const KernelConfig& cfg, std::span<const std::string> assets) {
    std::string canon = "layout=v1;f=identity;betas=";
    for (double b : cfg.betas) canon += real_repr(b) + ",";
    canon += ";etas=";
    for (double e : cfg.etas) canon += real_repr(e) + ",";
    canon += ";order=spread,L_BID,L_ASK,M_BID,M_ASK;blocks=";
    canon += std::to_string(assets.size());
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
    return hex;
}

FlowState::FlowState(KernelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    cells_.assign(2 * cfg_.limit_cells() + 2 * cfg_.market_cells(), 0.0);
    eta_weights_.resize(cfg_.etas.size());
}

void FlowState::advance_to(Nanos t) {
    if (!started_) {
        started_ = true;
        last_update_ = t;
        return;
    }
    if (t < last_update_) {
        throw ClockSkewError("flow update at " + std::to_string(t) + " precedes last update " +
                             std::to_string(last_update_));
    }
    if (t == last_update_) return;
    decay(static_cast<double>(t - last_update_) / kNanosPerSecond);
    last_update_ = t;
}

void FlowState::decay(double dt_s) {
    if (dt_s < 0.0) throw ClockSkewError("negative elapsed time");
    if (dt_s == 0.0) return;
    const std::size_t nb = cfg_.betas.size();
    const std::size_t ne = cfg_.etas.size();
    const std::size_t limit_block = nb * ne;
    for (std::size_t b = 0; b < nb; ++b) {
        const double f = std::exp(-cfg_.betas[b] * dt_s);
        for (std::size_t side = 0; side < 2; ++side) {
            double* row = cells_.data() + side * limit_block + b * ne;
            for (std::size_t e = 0; e < ne; ++e) row[e] *= f;
            cells_[2 * limit_block + side * nb + b] *= f;
        }
    }
}

void FlowState::add_limit(Side side, double notional, double distance_bps) {
    const double v = volume_map(notional);
    const std::size_t nb = cfg_.betas.size();
    const std::size_t ne = cfg_.etas.size();
    for (std::size_t e = 0; e < ne; ++e) eta_weights_[e] = v * std::exp(-cfg_.etas[e] * distance_bps);
    double* block = cells_.data() + static_cast<std::size_t>(index(side)) * nb * ne;
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t e = 0; e < ne; ++e) block[b * ne + e] += eta_weights_[e];
    }
}

void FlowState::add_market(Side side, double notional) {
    const double v = volume_map(notional);
    const std::size_t nb = cfg_.betas.size();
    double* block = cells_.data() + 2 * cfg_.limit_cells() + static_cast<std::size_t>(index(side)) * nb;
    for (std::size_t b = 0; b < nb; ++b) block[b] += v;
}

double FlowState::limit(Side s, std::size_t b, std::size_t e) const {
    return cells_[static_cast<std::size_t>(index(s)) * cfg_.limit_cells() + b * cfg_.etas.size() + e];
}

double FlowState::market(Side s, std::size_t b) const {
    return cells_[2 * cfg_.limit_cells() + static_cast<std::size_t>(index(s)) * cfg_.betas.size() + b];
}

FlowState FlowState::at(Nanos t) const {
    FlowState copy = *this;
    copy.advance_to(t);
    return copy;
}

FlowState decay_and_add_limit(FlowState state, Side side, double dt_s, double notional, double distance_bps) {
    if (dt_s < 0.0) throw ClockSkewError("negative elapsed time");
    state.decay(dt_s);
    state.add_limit(side, notional, distance_bps);
    return state;
}

FlowState decay_and_add_market(FlowState state, Side side, double dt_s, double notional) {
    if (dt_s < 0.0) throw ClockSkewError("negative elapsed time");
    state.decay(dt_s);
    state.add_market(side, notional);
    return state;
}

FeatureVector snapshot(const FlowState& state, const BookTop& top, const std::string& asset) {
    FeatureVector fv;
    fv.asset = asset;
    fv.sample_time = state.last_update();
    auto cells = state.cells();
    fv.values.reserve(cells.size() + 1);
    fv.values.push_back(top.spread_bps());
    fv.values.insert(fv.values.end(), cells.begin(), cells.end());
    return fv;
}

FeatureVector concat(std::span<const FeatureVector> parts) {
    FeatureVector out;
    std::size_t n = 0;
    for (const auto& p : parts) n += p.size();
    out.values.reserve(n);
    for (const auto& p : parts) {
        if (!out.asset.empty()) out.asset += "+";
        out.asset += p.asset;
        out.sample_time = std::max(out.sample_time, p.sample_time);
        out.values.insert(out.values.end(), p.values.begin(), p.values.end());
    }
    return out;
}

std::pair<FeatureVector, FeatureVector> counterfactual_pair(const FlowState& state_after_insert, const BookTop& top,
                                                            const OrderSpec& order, const std::string& asset) {
    FeatureVector plus = snapshot(state_after_insert, top, asset);
    FeatureVector zero = plus;
    const KernelConfig& cfg = state_after_insert.config();
    const FeatureLayout layout(cfg);
    const double v = volume_map(order.notional);
    for (std::size_t e = 0; e < cfg.etas.size(); ++e) {
        const double contribution = v * std::exp(-cfg.etas[e] * order.distance_bps);
        for (std::size_t b = 0; b < cfg.betas.size(); ++b) {
            double& cell = zero.values[layout.limit(order.side, b, e)];
            cell = std::max(0.0, cell - contribution);
        }
    }
    return {std::move(plus), std::move(zero)};
}

std::vector<FeatureVector> hypothetical_insert(const FlowState& state, const BookTop& top, Side side,
                                               std::span<const double> sizes, std::span<const double> distances,
                                               const std::string& asset) {
    const FeatureVector base = snapshot(state, top, asset);
    const KernelConfig& cfg = state.config();
    const FeatureLayout layout(cfg);
    std::vector<FeatureVector> out;
    out.reserve(sizes.size() * distances.size());
    for (double q : sizes) {
        const double v = volume_map(q);
        for (double d : distances) {
            FeatureVector fv = base;
            for (std::size_t e = 0; e < cfg.etas.size(); ++e) {
                const double contribution = v * std::exp(-cfg.etas[e] * d);
                for (std::size_t b = 0; b < cfg.betas.size(); ++b) fv.values[layout.limit(side, b, e)] += contribution;
            }
            out.push_back(std::move(fv));
        }
    }
    return out;
}

std::vector<double> uniform_weights(std::size_t k) { return std::vector<double>(k, 1.0 / static_cast<double>(k)); }

double imbalance_lo(const FeatureVector& x, const KernelConfig& cfg, std::span<const double> weights) {
    const FeatureLayout layout(cfg);
    if (x.size() < layout.size()) throw DimensionError("feature vector shorter than kernel layout");
    const std::size_t k = cfg.limit_cells();
    std::span<const double> v(x.values);
    return weighted_log_ratio(v.subspan(layout.limit(Side::Bid, 0, 0), k), v.subspan(layout.limit(Side::Ask, 0, 0), k),
                              weights);
}

double imbalance_mo(const FeatureVector& x, const KernelConfig& cfg, std::span<const double> weights) {
    const FeatureLayout layout(cfg);
    if (x.size() < layout.size()) throw DimensionError("feature vector shorter than kernel layout");
    const std::size_t k = cfg.market_cells();
    std::span<const double> v(x.values);
    return weighted_log_ratio(v.subspan(layout.market(Side::Bid, 0), k), v.subspan(layout.market(Side::Ask, 0), k),
                              weights);
}

double imbalance_lo(const FlowState& state, std::span<const double> weights) {
    const std::size_t k = state.config().limit_cells();
    auto cells = state.cells();
    return weighted_log_ratio(cells.subspan(0, k), cells.subspan(k, k), weights);
}

double imbalance_mo(const FlowState& state, std::span<const double> weights) {
    const std::size_t k = state.config().limit_cells();
    const std::size_t m = state.config().market_cells();
    auto cells = state.cells();
    return weighted_log_ratio(cells.subspan(2 * k, m), cells.subspan(2 * k + m, m), weights);
}

}  // namespace lobsurv
