#pragma once

#include "lobsurv/dist_math.hpp"
#include "lobsurv/prob_net.hpp"
#include "lobsurv/types.hpp"

#include <cstdint>
#include <fstream>
#include <mutex>
#include <span>
#include <string>

namespace lobsurv {

/// Cost-formula inputs in price units. Thresholds and offsets are in bps;
/// `bps_to_price` (mid / 1e4) converts offsets and expected moves into price.
/// Quantities are in base units. No validation: the mirror identity between
/// the two cost functions is exercised with negated prices and fees.
struct CostInputs {
    double bid = 0.0;
    double ask = 0.0;
    double bps_to_price = 0.0;
    double spread_bps = 0.0;
    double q_qty = 0.0;  // bona fide
    double Q_qty = 0.0;  // non bona fide
    double delta_b_bps = 0.0;
    double delta_a_bps = 0.0;
    double maker_fee = 0.0;  // fraction
    double taker_fee = 0.0;  // fraction
};

/// Threshold split of the predicted move: Gaussian formulas when alpha == 0,
/// skew-normal otherwise.
dist::TailMoments move_tails(const dist::SkewNormalParams& p, double x_bps);

/// Spoofer who wants to sell: bona fide ask at p^a + delta^a, non bona fide
/// bid at p^b - delta^b.
double cost_sell_spoofer(const CostInputs& in, const dist::SkewNormalParams& move);
/// Spoofer who wants to buy: bona fide bid at p^b - delta^b, non bona fide
/// ask at p^a + delta^a.
double cost_buy_spoofer(const CostInputs& in, const dist::SkewNormalParams& move);

/// Quote-level scenario with notionals in USD and fees in bps.
struct SpoofScenario {
    double bid = 0.0;
    double ask = 0.0;
    double delta_b_bps = 0.0;
    double delta_a_bps = 0.0;
    double Q_notional = 0.0;
    double q_notional = 100.0;
    double maker_fee_bps = 0.0;
    double taker_fee_bps = 5.0;

    double mid() const { return 0.5 * (bid + ask); }
    double spread_bps() const { return (ask - bid) / mid() * kBps; }
    /// Throws ConfigError on non-positive quotes, negative sizes or offsets,
    /// or fees outside [0, 100) bps.
    void validate() const;
    CostInputs inputs() const;
};

double expected_cost_sell_side_spoof(const SpoofScenario& s, const dist::SkewNormalParams& move);
double expected_cost_buy_side_spoof(const SpoofScenario& s, const dist::SkewNormalParams& move);

/// Asset 1 carries the non bona fide order, asset 2 the bona fide one.
struct CrossScenario {
    double bid1 = 0.0, ask1 = 0.0;
    double bid2 = 0.0, ask2 = 0.0;
    double delta_b_bps = 0.0;
    double delta_a_bps = 0.0;
    double Q_notional = 0.0;
    double q_notional = 100.0;
    double maker_fee_bps = 0.0;
    double taker_fee_bps = 5.0;

    void validate() const;
};

/// Cross-asset costs; only the marginals of (dp1, dp2) enter.
double expected_cost_cross_sell(const CrossScenario& s, const dist::BivariateNormalParams& move);
double expected_cost_cross_buy(const CrossScenario& s, const dist::BivariateNormalParams& move);

struct DetectionParams {
    double q_notional = 100.0;
    double bona_fide_delta_bps = 0.0;  // quoted at touch
    double maker_fee_bps = 0.0;
    double taker_fee_bps = 5.0;
    double large_threshold = 4500.0;  // USD
};

struct GainResult {
    double delta_c = 0.0;
    double cost_zero = 0.0;  // bona fide agent, conditional on x0
    double cost_plus = 0.0;  // spoofer, conditional on x+
    Theta theta_plus;
    Theta theta_zero;
};

/// dC = E[C(no spoof) | x0] - E[C(spoof with Q at delta) | x+]. A bid-side
/// order is scored as a sell spoofer's non bona fide order, an ask-side order
/// as a buy spoofer's.
GainResult expected_gain(const Theta& theta_plus, const Theta& theta_zero, Side order_side, const BookTop& top,
                         double order_notional, double order_distance_bps, const DetectionParams& params = {});

/// Same with the two forward passes; `x_plus`/`x_zero` are raw features.
GainResult expected_gain(const MlpModel& model, std::span<const double> x_plus, std::span<const double> x_zero,
                         Side order_side, const BookTop& top, double order_notional, double order_distance_bps,
                         const DetectionParams& params = {});

struct SpoofVerdict {
    std::size_t event_index = 0;
    Nanos ts_ns = 0;
    std::string asset;
    Side side = Side::Bid;
    double price = 0.0;
    double notional = 0.0;
    double distance_bps = 0.0;
    double delta_c = 0.0;
    bool large = false;
    bool suspicious = false;
    Theta theta_plus;
    Theta theta_zero;
    std::int64_t latency_ns = 0;
};

/// suspicious = notional >= threshold and delta_c > 0.
SpoofVerdict judge(const LobEvent& order, std::size_t event_index, double distance_bps, const GainResult& gain,
                   double large_threshold = 4500.0);

/// UTC timestamp with nanoseconds, e.g. 2024-12-05T00:27:58.123456789Z.
std::string iso8601(Nanos ts);
std::string verdict_to_json(const SpoofVerdict& v);

/// Append-only JSON-lines sink, safe to share between threads.
class AlertLog {
public:
    explicit AlertLog(const std::string& path);
    void append(const SpoofVerdict& v);
    std::size_t written() const { return written_; }

private:
    std::mutex mu_;
    std::ofstream out_;
    std::size_t written_ = 0;
};

}  // namespace lobsurv
