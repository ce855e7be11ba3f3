#pragma once

#include "lobsurv/types.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lobsurv {

/// Time scales (s^-1) and distance scales (bp^-1) of the exponential kernel
/// bank. The volume map is the identity on USD notional.
struct KernelConfig {
    std::vector<double> betas{10.0, 100.0, 1000.0};
    std::vector<double> etas{0.001, 0.1, 1.0, 10.0};

    /// Throws ConfigError on empty sets or non-positive scales.
    void validate() const;

    std::size_t limit_cells() const { return betas.size() * etas.size(); }
    std::size_t market_cells() const { return betas.size(); }
    /// Spread + both sides' limit and market cells (31 with the defaults).
    std::size_t feature_count() const { return 1 + 2 * limit_cells() + 2 * market_cells(); }

    /// Shortest time scale, used for the warm-up window 10 / min(beta).
    double min_beta() const;

    bool operator==(const KernelConfig&) const = default;
};

inline double volume_map(double notional) { return notional; }

/// Feature names in snapshot order for one asset.
std::vector<std::string> feature_names(const KernelConfig& cfg, const std::string& asset);

/// Stable fingerprint of the kernel configuration and the feature ordering.
/// Model files carry it; a mismatch means the inputs are not what the model
/// was trained on.
std::string feature_fingerprint(const KernelConfig& cfg, std::span<const std::string> assets);

/// Index arithmetic for the snapshot layout
/// [spread, L[bid] (beta-major, eta-minor), L[ask], M[bid] by beta, M[ask]].
struct FeatureLayout {
    std::size_t n_beta = 0;
    std::size_t n_eta = 0;

    explicit FeatureLayout(const KernelConfig& cfg) : n_beta(cfg.betas.size()), n_eta(cfg.etas.size()) {}

    std::size_t size() const { return 1 + 2 * n_beta * n_eta + 2 * n_beta; }
    std::size_t limit(Side s, std::size_t b, std::size_t e) const {
        return 1 + static_cast<std::size_t>(index(s)) * n_beta * n_eta + b * n_eta + e;
    }
    std::size_t market(Side s, std::size_t b) const {
        return 1 + 2 * n_beta * n_eta + static_cast<std::size_t>(index(s)) * n_beta + b;
    }
};

/// Exponentially decayed order-flow sums of one asset. Decay is lazy: sums
/// are brought forward to the event time only when touched.
class FlowState {
public:
    FlowState() = default;
    explicit FlowState(KernelConfig cfg);

    const KernelConfig& config() const { return cfg_; }
    Nanos last_update() const { return last_update_; }
    bool started() const { return started_; }

    /// Decays every sum to `t`. Throws ClockSkewError if `t` precedes the
    /// last update.
    void advance_to(Nanos t);
    /// Decays every sum by `dt_s` seconds without touching the clock.
    void decay(double dt_s);

    /// Adds f(v) e^{-eta delta} to every (beta, eta) cell of `side`.
    void add_limit(Side side, double notional, double distance_bps);
    void add_market(Side side, double notional);

    double limit(Side s, std::size_t b, std::size_t e) const;
    double market(Side s, std::size_t b) const;

    /// All sums in snapshot order (without the spread).
    std::span<const double> cells() const { return cells_; }
    std::span<double> cells_mut() { return cells_; }

    /// Copy decayed to `t` (which must not precede the last update).
    FlowState at(Nanos t) const;

private:
    KernelConfig cfg_;
    std::vector<double> cells_;
    std::vector<double> eta_weights_;  // scratch for e^{-eta delta}
    Nanos last_update_ = 0;
    bool started_ = false;
};

FlowState decay_and_add_limit(FlowState state, Side side, double dt_s, double notional, double distance_bps);
FlowState decay_and_add_market(FlowState state, Side side, double dt_s, double notional);

/// Model input of one (or several concatenated) assets.
struct FeatureVector {
    std::string asset;
    Nanos sample_time = 0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double spread() const { return values.front(); }
};

FeatureVector snapshot(const FlowState& state, const BookTop& top, const std::string& asset = {});

/// Concatenates per-asset vectors in the given order (62 values for two assets).
FeatureVector concat(std::span<const FeatureVector> parts);

struct OrderSpec {
    Side side = Side::Bid;
    double notional = 0.0;
    double distance_bps = 0.0;
};

/// (x+, x0): features with and without the order's own contribution. The state
/// must reflect the book immediately after the insertion.
std::pair<FeatureVector, FeatureVector> counterfactual_pair(const FlowState& state_after_insert, const BookTop& top,
                                                            const OrderSpec& order, const std::string& asset = {});

/// x+(Q, delta) for every grid point, sizes outer and distances inner. The
/// input state is not modified.
std::vector<FeatureVector> hypothetical_insert(const FlowState& state, const BookTop& top, Side side,
                                               std::span<const double> sizes, std::span<const double> distances,
                                               const std::string& asset = {});

/// Uniform-weight default for K cells.
std::vector<double> uniform_weights(std::size_t k);

/// sum_k w_k log((1+L_k^b)/(1+L_k^a)) over the limit cells of the first asset
/// block of `x`. Empty weights mean uniform.
double imbalance_lo(const FeatureVector& x, const KernelConfig& cfg, std::span<const double> weights = {});
/// Same over the market cells.
double imbalance_mo(const FeatureVector& x, const KernelConfig& cfg, std::span<const double> weights = {});

double imbalance_lo(const FlowState& state, std::span<const double> weights = {});
double imbalance_mo(const FlowState& state, std::span<const double> weights = {});

}  // namespace lobsurv
