#pragma once

#include "lobsurv/market_sim.hpp"
#include "lobsurv/observations.hpp"
#include "lobsurv/prob_net.hpp"
#include "lobsurv/spoof_econ.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lobsurv {

/// Observations to a training set. Univariate heads regress the move of the
/// first asset; the bivariate head takes both.
Dataset make_dataset(const ObservationSet& set, HeadKind head);

struct LatencySummary {
    std::size_t count = 0;
    double p50_us = 0.0;
    double p95_us = 0.0;
    double p99_us = 0.0;
    double mean_us = 0.0;
    double max_us = 0.0;
};

/// Nearest-rank percentiles of latencies in nanoseconds.
LatencySummary summarize_latency(std::vector<std::int64_t> latencies_ns);

struct DetectOptions {
    OrderFilter filter;
    DetectionParams params;
    bool record_latency = true;
};

struct DetectSummary {
    std::size_t events = 0;
    std::size_t limit_orders = 0;  // LIMIT_ADD on the scored asset
    std::size_t no_quote = 0;
    std::size_t filtered_out = 0;
    std::size_t scored = 0;
    std::size_t large = 0;
    std::size_t suspicious = 0;
    LatencySummary latency;

    double suspicious_share_of_large() const { return large ? static_cast<double>(suspicious) / large : 0.0; }
};

/// Streaming detector. Every model asset feeds the feature engine; LIMIT_ADD
/// events of the first model asset that pass the filter are scored. Events of
/// other assets are ignored.
class Detector {
public:
    Detector(const MlpModel& model, DetectOptions opts = {});

    /// Processes one event; returns the verdict when the event was scored.
    std::optional<SpoofVerdict> on_event(const LobEvent& ev, std::size_t index);

    /// Summary so far, latency percentiles included.
    DetectSummary summary() const;
    const std::vector<std::int64_t>& latencies_ns() const { return latencies_; }

private:
    const MlpModel& model_;
    DetectOptions opts_;
    std::vector<AssetPipeline> pipes_;
    DetectSummary counts_;
    std::vector<std::int64_t> latencies_;
    std::vector<double> x_plus_, x_zero_;
};

using VerdictSink = std::function<void(const SpoofVerdict&)>;

DetectSummary run_detection(const MlpModel& model, const std::vector<LobEvent>& events, const DetectOptions& opts = {},
                            const VerdictSink& sink = {});

/// Verdicts scored against injected ground truth. Matching is on
/// (ts, asset, side, notional).
struct EfficacyReport {
    std::size_t labeled = 0;
    std::size_t labeled_scored = 0;
    std::size_t labeled_flagged = 0;
    std::size_t flagged = 0;
    std::size_t normal_small = 0;  // unlabeled orders below the size threshold
    std::size_t normal_small_flagged = 0;
    std::size_t normal_large = 0;
    std::size_t normal_large_flagged = 0;

    double recall() const { return labeled ? static_cast<double>(labeled_flagged) / labeled : 0.0; }
    double precision() const { return flagged ? static_cast<double>(labeled_flagged) / flagged : 0.0; }
    double false_positive_rate_small() const {
        return normal_small ? static_cast<double>(normal_small_flagged) / normal_small : 0.0;
    }
    double false_positive_rate_large() const {
        return normal_large ? static_cast<double>(normal_large_flagged) / normal_large : 0.0;
    }
};

EfficacyReport score_against_labels(const std::vector<SpoofVerdict>& verdicts, const std::vector<SpoofLabel>& labels);

/// Predicted moments of the move of asset `target` (0 or 1; 1 only for the
/// bivariate head).
struct Moments {
    double mean = 0.0;
    double std = 0.0;
    double sharpe = 0.0;
};

Moments predicted_moments(const Theta& theta, int target = 0);

enum class PdVariable { Spread, ImbalanceLo, ImbalanceMo };

std::string to_string(PdVariable v);
/// Accepts spread, imbalance_lo and imbalance_mo.
PdVariable pd_variable_from_string(std::string_view s);

struct PdBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double weight = 0.0;  // share of in-range observations
    double mean = 0.0;    // averages are meaningful only when count > 0
    double std = 0.0;
    double sharpe = 0.0;
};

struct PartialDependenceReport {
    PdVariable variable = PdVariable::Spread;
    std::vector<PdBin> bins;
    std::size_t out_of_range = 0;
};

/// n log-spaced bins over [lo, hi]; the default spread range is 0.1 to 10 bps.
std::vector<double> log_edges(double lo, double hi, std::size_t n);
std::vector<double> linear_edges(double lo, double hi, std::size_t n);

/// Value of the binned variable for a raw feature row (first asset block).
double pd_value(PdVariable v, std::span<const double> raw, const KernelConfig& kernel);

/// Per-bin averages of the predicted moments over `rows` (raw features).
/// Rows outside the edges are counted but not binned.
PartialDependenceReport partial_dependence(const MlpModel& model, const RowMatrix& rows, PdVariable variable,
                                           const std::vector<double>& edges, int target = 0);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct ResponseCell {
    Side side = Side::Bid;
    double size = 0.0;      // USD
    double distance = 0.0;  // bps
    std::size_t n = 0;
    double mean_diff = 0.0;  // average change of the standardized mean
    double var = 0.0;        // sample variance, N-1 denominator
    std::optional<double> t_stat;
    std::optional<double> p_value;  // two-sided Student, N-1 degrees of freedom
};

struct ResponseOptions {
    std::vector<double> sizes{1e3, 5e3, 1e4, 5e4, 1e5};
    std::vector<double> distances{0.1, 1.0, 5.0, 10.0, 50.0};
    std::size_t n_samples = 10;
    std::uint64_t seed = 42;
    int insert_asset = 0;  // feature block receiving the hypothetical order
    int target = 0;        // asset whose standardized mean is read
};

struct PriceResponseReport {
    std::vector<ResponseCell> cells;  // bid grid then ask grid, sizes outer
    std::vector<std::size_t> sample_rows;
};

/// Statistics of a set of paired differences.
ResponseCell response_statistics(std::span<const double> diffs);

/// Samples n rows of `rows` without replacement and evaluates the change in
/// standardized mean when a hypothetical order of each (size, distance) is
/// added to the flow cells.
PriceResponseReport price_response(const MlpModel& model, const RowMatrix& rows, const ResponseOptions& opts);

/// Adds f(Q) e^{-eta delta} to the limit cells of `side` in asset block
/// `block` of a raw feature row.
void add_hypothetical_order(std::span<double> raw, const KernelConfig& kernel, int block, Side side, double size,
                            double distance_bps);

struct BenchReport {
    DetectSummary summary;
    double seconds = 0.0;
    double throughput = 0.0;  // scored orders per second
};

/// Warm-up pass over a prefix of the stream, then a timed detection pass.
BenchReport run_bench(const MlpModel& model, const std::vector<LobEvent>& events, const DetectOptions& opts = {},
                      std::size_t warmup_events = 20000);

}  // namespace lobsurv
