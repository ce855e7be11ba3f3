#include "lobsurv/spoof_econ.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>

namespace lobsurv {

dist::TailMoments move_tails(const dist::SkewNormalParams& p, double x_bps) {
    return p.alpha == 0.0 ? dist::gaussian_tail_moments(p.mu, p.sigma, x_bps) : dist::sn_tail_moments(p, x_bps);
}

double cost_sell_spoofer(const CostInputs& in, const dist::SkewNormalParams& move) {
    const double x_a = in.delta_a_bps + 0.5 * in.spread_bps;
    const double x_b = -(in.delta_b_bps + 0.5 * in.spread_bps);
    const auto ta = move_tails(move, x_a);
    const auto tb = move_tails(move, x_b);
    const double s = in.bps_to_price;
    double c = -ta.p_above * (1.0 - in.maker_fee) * in.q_qty * (in.ask + in.delta_a_bps * s);
    c -= ta.p_below * (1.0 - in.taker_fee) * in.q_qty * (in.bid + ta.mean_below * s);
    if (in.Q_qty != 0.0) {
        c += tb.p_below * (1.0 + in.maker_fee) * in.Q_qty * (in.bid - in.delta_b_bps * s);
        c -= tb.p_below * (1.0 - in.taker_fee) * in.Q_qty * (in.bid + tb.mean_below * s);
    }
    return c;
}

double cost_buy_spoofer(const CostInputs& in, const dist::SkewNormalParams& move) {
    const double x_b = -(in.delta_b_bps + 0.5 * in.spread_bps);
    const double x_a = in.delta_a_bps + 0.5 * in.spread_bps;
    const auto tb = move_tails(move, x_b);
    const auto ta = move_tails(move, x_a);
    const double s = in.bps_to_price;
    double c = tb.p_below * (1.0 + in.maker_fee) * in.q_qty * (in.bid - in.delta_b_bps * s);
    c += tb.p_above * (1.0 + in.taker_fee) * in.q_qty * (in.ask + tb.mean_above * s);
    if (in.Q_qty != 0.0) {
        c -= ta.p_above * (1.0 - in.maker_fee) * in.Q_qty * (in.ask + in.delta_a_bps * s);
        c += ta.p_above * (1.0 + in.taker_fee) * in.Q_qty * (in.ask + ta.mean_above * s);
    }
    return c;
}

namespace {

void check_fees(double maker, double taker) {
    if (!(maker >= 0.0 && maker < 100.0 && taker >= 0.0 && taker < 100.0)) {
        throw ConfigError("fees must be in [0, 100) bps");
    }
}

void check_quote(double bid, double ask) {
    if (!(bid > 0.0 && ask > bid)) throw ConfigError("scenario quotes need 0 < bid < ask");
}

}  // namespace

void SpoofScenario::validate() const {
    check_quote(bid, ask);
    if (!(delta_b_bps >= 0.0 && delta_a_bps >= 0.0)) throw ConfigError("placement distances must be >= 0");
    if (!(Q_notional >= 0.0 && q_notional > 0.0)) throw ConfigError("need Q >= 0 and q > 0");
    check_fees(maker_fee_bps, taker_fee_bps);
}

CostInputs SpoofScenario::inputs() const {
    validate();
    const double m = mid();
    return {bid,        ask,         m / kBps,    spread_bps(),          q_notional / m, Q_notional / m,
            delta_b_bps, delta_a_bps, maker_fee_bps / kBps, taker_fee_bps / kBps};
}

double expected_cost_sell_side_spoof(const SpoofScenario& s, const dist::SkewNormalParams& move) {
    return cost_sell_spoofer(s.inputs(), move);
}

double expected_cost_buy_side_spoof(const SpoofScenario& s, const dist::SkewNormalParams& move) {
    return cost_buy_spoofer(s.inputs(), move);
}

void CrossScenario::validate() const {
    check_quote(bid1, ask1);
    check_quote(bid2, ask2);
    if (!(delta_b_bps >= 0.0 && delta_a_bps >= 0.0)) throw ConfigError("placement distances must be >= 0");
    if (!(Q_notional >= 0.0 && q_notional > 0.0)) throw ConfigError("need Q >= 0 and q > 0");
    check_fees(maker_fee_bps, taker_fee_bps);
}

double expected_cost_cross_sell(const CrossScenario& s, const dist::BivariateNormalParams& move) {
    s.validate();
    const double m1 = 0.5 * (s.bid1 + s.ask1), m2 = 0.5 * (s.bid2 + s.ask2);
    const double psi1 = (s.ask1 - s.bid1) / m1 * kBps, psi2 = (s.ask2 - s.bid2) / m2 * kBps;
    const double s1 = m1 / kBps, s2 = m2 / kBps;
    const double eps_p = s.maker_fee_bps / kBps, eps_m = s.taker_fee_bps / kBps;
    const double q = s.q_notional / m2, Q = s.Q_notional / m1;
    const auto t2 = dist::gaussian_tail_moments(move.mu2, move.sigma2, s.delta_a_bps + 0.5 * psi2);
    const auto t1 = dist::gaussian_tail_moments(move.mu1, move.sigma1, -(s.delta_b_bps + 0.5 * psi1));
    double c = -t2.p_above * (1.0 - eps_p) * q * (s.ask2 + s.delta_a_bps * s2);
    c -= t2.p_below * (1.0 - eps_m) * q * (s.bid2 + t2.mean_below * s2);
    if (Q != 0.0) {
        c += t1.p_below * (1.0 + eps_p) * Q * (s.bid1 - s.delta_b_bps * s1);
        c -= t1.p_below * (1.0 - eps_m) * Q * (s.bid1 + t1.mean_below * s1);
    }
    return c;
}

double expected_cost_cross_buy(const CrossScenario& s, const dist::BivariateNormalParams& move) {
    s.validate();
    const double m1 = 0.5 * (s.bid1 + s.ask1), m2 = 0.5 * (s.bid2 + s.ask2);
    const double psi1 = (s.ask1 - s.bid1) / m1 * kBps, psi2 = (s.ask2 - s.bid2) / m2 * kBps;
    const double s1 = m1 / kBps, s2 = m2 / kBps;
    const double eps_p = s.maker_fee_bps / kBps, eps_m = s.taker_fee_bps / kBps;
    const double q = s.q_notional / m2, Q = s.Q_notional / m1;
    const auto t2 = dist::gaussian_tail_moments(move.mu2, move.sigma2, -(s.delta_b_bps + 0.5 * psi2));
    const auto t1 = dist::gaussian_tail_moments(move.mu1, move.sigma1, s.delta_a_bps + 0.5 * psi1);
    double c = t2.p_below * (1.0 + eps_p) * q * (s.bid2 - s.delta_b_bps * s2);
    c += t2.p_above * (1.0 + eps_m) * q * (s.ask2 + t2.mean_above * s2);
    if (Q != 0.0) {
        c -= t1.p_above * (1.0 - eps_p) * Q * (s.ask1 + s.delta_a_bps * s1);
        c += t1.p_above * (1.0 + eps_m) * Q * (s.ask1 + t1.mean_above * s1);
    }
    return c;
}

GainResult expected_gain(const Theta& theta_plus, const Theta& theta_zero, Side order_side, const BookTop& top,
                         double order_notional, double order_distance_bps, const DetectionParams& p) {
    if (theta_plus.kind == HeadKind::BivariateGaussian || theta_zero.kind == HeadKind::BivariateGaussian) {
        throw ConfigError("single-asset detection needs a univariate head");
    }
    SpoofScenario spoof;
    spoof.bid = top.bid;
    spoof.ask = top.ask;
    spoof.q_notional = p.q_notional;
    spoof.maker_fee_bps = p.maker_fee_bps;
    spoof.taker_fee_bps = p.taker_fee_bps;
    spoof.Q_notional = order_notional;
    SpoofScenario honest = spoof;
    honest.Q_notional = 0.0;

    GainResult r;
    r.theta_plus = theta_plus;
    r.theta_zero = theta_zero;
    if (order_side == Side::Bid) {
        spoof.delta_a_bps = honest.delta_a_bps = p.bona_fide_delta_bps;
        spoof.delta_b_bps = order_distance_bps;
        r.cost_zero = expected_cost_sell_side_spoof(honest, theta_zero.skew());
        r.cost_plus = expected_cost_sell_side_spoof(spoof, theta_plus.skew());
    } else {
        spoof.delta_b_bps = honest.delta_b_bps = p.bona_fide_delta_bps;
        spoof.delta_a_bps = order_distance_bps;
        r.cost_zero = expected_cost_buy_side_spoof(honest, theta_zero.skew());
        r.cost_plus = expected_cost_buy_side_spoof(spoof, theta_plus.skew());
    }
    r.delta_c = r.cost_zero - r.cost_plus;
    return r;
}

GainResult expected_gain(const MlpModel& model, std::span<const double> x_plus, std::span<const double> x_zero,
                         Side order_side, const BookTop& top, double order_notional, double order_distance_bps,
                         const DetectionParams& params) {
    return expected_gain(model.predict(x_plus), model.predict(x_zero), order_side, top, order_notional,
                         order_distance_bps, params);
}

SpoofVerdict judge(const LobEvent& order, std::size_t event_index, double distance_bps, const GainResult& gain,
                   double large_threshold) {
    SpoofVerdict v;
    v.event_index = event_index;
    v.ts_ns = order.ts_ns;
    v.asset = order.asset;
    v.side = order.side.value_or(Side::Bid);
    v.price = order.price;
    v.notional = order.notional();
    v.distance_bps = distance_bps;
    v.delta_c = gain.delta_c;
    v.large = v.notional >= large_threshold;
    v.suspicious = v.large && gain.delta_c > 0.0;
    v.theta_plus = gain.theta_plus;
    v.theta_zero = gain.theta_zero;
    return v;
}

std::string iso8601(Nanos ts) {
    const std::time_t secs = static_cast<std::time_t>(ts >= 0 ? ts / 1'000'000'000 : (ts - 999'999'999) / 1'000'000'000);
    const long long frac = ts - static_cast<long long>(secs) * 1'000'000'000LL;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%09lldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, frac);
    return buf;
}

namespace {

nlohmann::json theta_json(const Theta& t) {
    nlohmann::json j{{"mu", t.mu}, {"sigma", t.sigma}};
    if (t.kind == HeadKind::SkewGaussian) j["alpha"] = t.alpha;
    return j;
}

}  // namespace

std::string verdict_to_json(const SpoofVerdict& v) {
    nlohmann::json j{{"ts", iso8601(v.ts_ns)},
                     {"ts_ns", v.ts_ns},
                     {"event_index", v.event_index},
                     {"asset", v.asset},
                     {"side", to_string(v.side)},
                     {"price", v.price},
                     {"notional", v.notional},
                     {"delta_bps", v.distance_bps},
                     {"delta_c", v.delta_c},
                     {"large", v.large},
                     {"suspicious", v.suspicious},
                     {"theta_plus", theta_json(v.theta_plus)},
                     {"theta_zero", theta_json(v.theta_zero)},
                     {"latency_ns", v.latency_ns}};
    return j.dump();
}

AlertLog::AlertLog(const std::string& path) : out_(path, std::ios::out | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open alert log " + path);
}

void AlertLog::append(const SpoofVerdict& v) {
    const std::string line = verdict_to_json(v);
    std::lock_guard<std::mutex> lock(mu_);
    out_ << line << '\n';
    ++written_;
}

}  // namespace lobsurv
