#pragma once

#include "lobsurv/dist_math.hpp"
#include "lobsurv/flow_features.hpp"
#include "lobsurv/lob_stream.hpp"
#include "lobsurv/preprocess.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace lobsurv {

/// Event types of the per-asset point process.
enum class SimEventType : int { LimitBid = 0, LimitAsk = 1, TradeBid = 2, TradeAsk = 3 };

/// Multivariate Hawkes process with a common exponential decay:
/// lambda_i(t) = baseline_i + sum_j excitation[i][j] sum_{t_k^j < t} e^{-decay (t - t_k^j)}.
struct HawkesConfig {
    std::array<double, 4> baseline{40.0, 40.0, 5.0, 5.0};  // events/s
    std::array<std::array<double, 4>, 4> excitation{{
        {15.0, 5.0, 0.0, 0.0},
        {5.0, 15.0, 0.0, 0.0},
        {0.0, 0.0, 15.0, 5.0},
        {0.0, 0.0, 5.0, 15.0},
    }};
    double decay = 50.0;  // s^-1

    /// Spectral radius of excitation / decay (the branching matrix).
    double spectral_radius() const;
};

struct AssetSimConfig {
    std::string name = "BTC-USD";
    double initial_mid = 100000.0;
    HawkesConfig hawkes;
    double notional_log_mean = 7.0;  // log USD
    double notional_log_sd = 1.0;
    double distance_mean_bps = 3.0;
    /// Mid drift in bps/s per unit of the true limit-flow imbalance.
    double kappa = 3.0;
    /// Mid noise in bps per sqrt(s) per bp of spread.
    double noise_per_spread = 0.5;
    /// Log-OU spread: mean level (bps), reversion speed (1/s), log volatility (1/sqrt(s)).
    double spread_mean_bps = 2.0;
    double spread_reversion = 0.5;
    double spread_vol = 0.8;
    double min_spread_bps = 0.05;
};

struct SimConfig {
    std::vector<AssetSimConfig> assets{AssetSimConfig{}};
    /// Off-diagonal drift couplings: cross_kappa[i][j] moves asset i per unit
    /// imbalance of asset j. Empty means none.
    std::vector<std::vector<double>> cross_kappa;
    KernelConfig kernel;
    double grid_dt = 0.01;  // s, mid/spread update and BBO emission step
    Nanos start_ns = 1'700'000'000'000'000'000LL;
    std::uint64_t seed = 1;

    /// Throws ConfigError on unstable excitation or non-positive scales.
    void validate() const;
};

/// Optional per-grid-step record of the true limit-flow imbalance.
struct SimTrace {
    double grid_dt = 0.0;
    std::vector<std::vector<double>> imbalance;  // [asset][step]
    std::vector<std::vector<double>> mid;        // [asset][step]
    std::vector<std::vector<double>> spread_bps;  // [asset][step]
};

/// Ogata thinning for event times, marks from the configured laws, mid and
/// spread on a fixed grid with a BBO per step. Deterministic given the seed.
std::vector<LobEvent> simulate(const SimConfig& cfg, double duration_s, SimTrace* trace = nullptr);

/// Known conditional law of the horizon move given the features:
/// SN(mu = kappa * I_LO(x), sigma = sigma_per_spread * spread, alpha).
struct LabeledLaw {
    double kappa = 2.0;
    double sigma_per_spread = 1.0;
    double alpha = 3.0;
};

struct LabeledSample {
    RowMatrix x;  // raw features of the first asset, time-ordered
    RowMatrix y;  // one target column drawn from the law
    std::vector<dist::SkewNormalParams> truth;
};

/// Streams the simulated order flow of the first asset through the feature
/// engine and draws one target per filter-passing limit order after warm-up.
LabeledSample generate_labeled(const SimConfig& cfg, std::size_t n_obs, const LabeledLaw& law);

struct SpoofLayer {
    double notional = 0.0;  // USD
    double distance_bps = 0.0;
};

struct SpoofEpisode {
    Nanos start_ns = 0;
    std::string asset;
    Side side = Side::Bid;
    std::vector<SpoofLayer> layers;
    double lifetime_s = 1.0;
    /// Price shift over the lifetime, bps; applied upward for bid-side
    /// episodes and downward for ask-side ones.
    double drift_bps = 2.0;
};

struct SpoofLabel {
    Nanos ts_ns = 0;
    std::string asset;
    Side side = Side::Bid;
    double notional = 0.0;
    double distance_bps = 0.0;
    int episode_id = 0;
};

inline constexpr const char* kLabelsCsvHeader = "ts_ns,asset,side,notional,distance_bps,episode_id";

struct InjectionResult {
    std::vector<LobEvent> events;
    std::vector<SpoofLabel> labels;
};

/// Inserts each episode's layers as LIMIT_ADDs sharing one timestamp right
/// after the last event at or before `start_ns`, priced off the prevailing quote, and
/// shifts that asset's later prices by a linear ramp reaching the drift at the
/// end of the lifetime (and held afterwards).
InjectionResult inject_spoofs(const std::vector<LobEvent>& stream, const std::vector<SpoofEpisode>& episodes);

struct EpisodeRecipe {
    std::size_t count = 20;
    int layers = 3;
    double min_notional = 20000.0;
    double max_notional = 60000.0;
    double first_distance_bps = 8.0;
    double layer_step_bps = 4.0;
    double lifetime_s = 1.0;
    double drift_bps = 2.0;
    double min_gap_s = 5.0;
    std::uint64_t seed = 7;
};

/// Episodes at random, well-separated times within the stream's span.
std::vector<SpoofEpisode> random_episodes(const std::vector<LobEvent>& stream, const std::string& asset,
                                          const EpisodeRecipe& recipe);

void write_labels(const std::string& path, const std::vector<SpoofLabel>& labels);
std::vector<SpoofLabel> read_labels(const std::string& path);

}  // namespace lobsurv
