#include "doctest.h"

#include "lobsurv/spoof_econ.hpp"
#include "oracles.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace lobsurv;

namespace {

oracle::McScenario to_mc(const SpoofScenario& s) {
    return {s.bid, s.ask, s.delta_b_bps, s.delta_a_bps, s.Q_notional, s.q_notional, s.maker_fee_bps, s.taker_fee_bps};
}

SpoofScenario reference_scenario() {
    SpoofScenario s;
    s.bid = 99.99;
    s.ask = 100.01;
    s.delta_b_bps = 1.0;
    s.delta_a_bps = 0.0;
    s.q_notional = 100.0;
    s.Q_notional = 1e4;
    return s;
}

}  // namespace

TEST_CASE("point-mass move: only the terminal liquidation of the bona fide order remains") {
    SpoofScenario s;
    s.bid = 99990.0;
    s.ask = 100010.0;
    s.delta_b_bps = 50.0;
    s.Q_notional = 1e4;
    const dist::SkewNormalParams move{0.0, 1e-6, 0.0};
    const double mid = s.mid();
    const double expected = -(1.0 - 5e-4) * (100.0 / mid) * s.bid;
    CHECK(expected_cost_sell_side_spoof(s, move) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Q = 0 removes the non bona fide terms") {
    SpoofScenario s = reference_scenario();
    s.Q_notional = 0.0;
    const dist::SkewNormalParams move{0.3, 2.0, 1.5};
    const auto in = s.inputs();
    const auto ta = move_tails(move, in.delta_a_bps + 0.5 * in.spread_bps);
    const double sc = s.mid() / 1e4, q = 100.0 / s.mid();
    const double hand = -ta.p_above * q * (s.ask + 0.0) - ta.p_below * (1 - 5e-4) * q * (s.bid + ta.mean_below * sc);
    CHECK(expected_cost_sell_side_spoof(s, move) == doctest::Approx(hand).epsilon(1e-14));
    CHECK(ta.p_above + ta.p_below == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-asset costs agree with the Monte-Carlo payoff oracle") {
    const std::size_t draws = 2'000'000;
    std::mt19937_64 rng(12);
    SUBCASE("reference scenario") {
        const auto s = reference_scenario();
        const dist::SkewNormalParams move{0.0, 2.0, 0.0};
        const auto mc = oracle::monte_carlo(draws, [&] { return oracle::payoff_sell(to_mc(s), oracle::sample_skew_normal(rng, 0.0, 2.0, 0.0)); });
        const double got = expected_cost_sell_side_spoof(s, move);
        CHECK(std::abs(got - mc.mean) <= 1e-3 * std::abs(mc.mean));
        CHECK(std::abs(got - mc.mean) <= 5.0 * mc.stderr_);
    }
    SUBCASE("random skewed scenarios, both sides") {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 6; ++i) {
            SpoofScenario s;
            const double mid = 100.0 + 1e5 * u(rng);
            const double psi = 0.5 + 10.0 * u(rng);
            s.bid = mid * (1 - 0.5 * psi / 1e4);
            s.ask = mid * (1 + 0.5 * psi / 1e4);
            s.delta_b_bps = 10.0 * u(rng);
            s.delta_a_bps = 3.0 * u(rng);
            s.Q_notional = 1e5 * u(rng);
            const double mu = 4.0 * (u(rng) - 0.5), sigma = 0.5 + 6.0 * u(rng), alpha = 8.0 * (u(rng) - 0.5);
            const dist::SkewNormalParams move{mu, sigma, alpha};
            const auto mc_sell = oracle::monte_carlo(draws, [&] { return oracle::payoff_sell(to_mc(s), oracle::sample_skew_normal(rng, mu, sigma, alpha)); });
            const auto mc_buy = oracle::monte_carlo(draws, [&] { return oracle::payoff_buy(to_mc(s), oracle::sample_skew_normal(rng, mu, sigma, alpha)); });
            const double sell = expected_cost_sell_side_spoof(s, move), buy = expected_cost_buy_side_spoof(s, move);
            CAPTURE(i);
            CHECK(std::abs(sell - mc_sell.mean) <= 1e-3 * std::abs(mc_sell.mean));
            CHECK(std::abs(buy - mc_buy.mean) <= 1e-3 * std::abs(mc_buy.mean));
            CHECK(std::abs(sell - mc_sell.mean) <= 5.0 * mc_sell.stderr_ + 1e-9);
            CHECK(std::abs(buy - mc_buy.mean) <= 5.0 * mc_buy.stderr_ + 1e-9);
        }
    }
}

TEST_CASE("buy-side cost is the mirror image of the sell-side cost") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        CostInputs in;
        in.bid = 1000.0 * (1.0 + u(rng));
        in.ask = in.bid * (1.0 + 1e-3 * u(rng));
        in.bps_to_price = 0.5 * (in.bid + in.ask) / 1e4;
        in.spread_bps = (in.ask - in.bid) / (0.5 * (in.bid + in.ask)) * 1e4;
        in.q_qty = u(rng);
        in.Q_qty = 10.0 * u(rng);
        in.delta_b_bps = 20.0 * u(rng);
        in.delta_a_bps = 5.0 * u(rng);
        in.maker_fee = 1e-4 * u(rng);
        in.taker_fee = 5e-4 * u(rng);
        const dist::SkewNormalParams move{3.0 * (u(rng) - 0.5), 0.5 + 5.0 * u(rng), 6.0 * (u(rng) - 0.5)};

        CostInputs mirrored = in;
        mirrored.bid = -in.ask;
        mirrored.ask = -in.bid;
        mirrored.delta_b_bps = in.delta_a_bps;
        mirrored.delta_a_bps = in.delta_b_bps;
        mirrored.maker_fee = -in.maker_fee;
        mirrored.taker_fee = -in.taker_fee;
        const dist::SkewNormalParams flipped{-move.mu, move.sigma, -move.alpha};
        CHECK(cost_buy_spoofer(in, move) == doctest::Approx(cost_sell_spoofer(mirrored, flipped)).epsilon(1e-12));
    }
}

TEST_CASE("cross-asset costs") {
    CrossScenario c;
    c.bid1 = c.bid2 = 99.99;
    c.ask1 = c.ask2 = 100.01;
    c.delta_b_bps = 2.0;
    c.delta_a_bps = 1.0;
    c.Q_notional = 5e4;
    SpoofScenario s;
    s.bid = 99.99;
    s.ask = 100.01;
    s.delta_b_bps = 2.0;
    s.delta_a_bps = 1.0;
    s.Q_notional = 5e4;

    SUBCASE("independent identical marginals reduce to the single-asset cost") {
        const dist::BivariateNormalParams bv{0.4, 0.4, 2.0, 2.0, 0.0};
        const dist::SkewNormalParams g{0.4, 2.0, 0.0};
        CHECK(expected_cost_cross_sell(c, bv) == doctest::Approx(expected_cost_sell_side_spoof(s, g)).epsilon(1e-12));
        CHECK(expected_cost_cross_buy(c, bv) == doctest::Approx(expected_cost_buy_side_spoof(s, g)).epsilon(1e-12));
    }
    SUBCASE("Q = 0 leaves only the asset-2 bona fide terms") {
        c.Q_notional = 0.0;
        const dist::BivariateNormalParams a{5.0, 0.1, 1.0, 3.0, 0.7};
        const dist::BivariateNormalParams b{-5.0, 0.1, 9.0, 3.0, -0.2};
        CHECK(expected_cost_cross_sell(c, a) == expected_cost_cross_sell(c, b));
    }
    SUBCASE("correlated Monte-Carlo oracle") {
        std::mt19937_64 rng(14);
        std::normal_distribution<double> n(0.0, 1.0);
        c.bid2 = 3999.0;
        c.ask2 = 4001.0;
        const dist::BivariateNormalParams bv{0.5, -0.3, 3.0, 2.0, 0.6};
        oracle::McScenario bona{c.bid2, c.ask2, c.delta_b_bps, c.delta_a_bps, 0.0, c.q_notional, 0.0, 5.0};
        oracle::McScenario spoof{c.bid1, c.ask1, c.delta_b_bps, c.delta_a_bps, c.Q_notional, 0.0, 0.0, 5.0};
        auto draw = [&](double& d1, double& d2) {
            const double z1 = n(rng), z2 = n(rng);
            d1 = bv.mu1 + bv.sigma1 * z1;
            d2 = bv.mu2 + bv.sigma2 * (bv.rho * z1 + std::sqrt(1 - bv.rho * bv.rho) * z2);
        };
        const auto sell = oracle::monte_carlo(2'000'000, [&] {
            double d1, d2;
            draw(d1, d2);
            return oracle::payoff_cross_sell(bona, spoof, d1, d2);
        });
        const auto buy = oracle::monte_carlo(2'000'000, [&] {
            double d1, d2;
            draw(d1, d2);
            return oracle::payoff_cross_buy(bona, spoof, d1, d2);
        });
        CHECK(std::abs(expected_cost_cross_sell(c, bv) - sell.mean) <= 5.0 * sell.stderr_);
        CHECK(std::abs(expected_cost_cross_buy(c, bv) - buy.mean) <= 5.0 * buy.stderr_);
        CHECK(std::abs(expected_cost_cross_sell(c, bv) - sell.mean) <= 1e-3 * std::abs(sell.mean));
    }
}

TEST_CASE("scenario validation") {
    SpoofScenario s = reference_scenario();
    s.taker_fee_bps = 100.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = reference_scenario();
    s.delta_b_bps = -1.0;
    CHECK_THROWS_AS(expected_cost_sell_side_spoof(s, {}), ConfigError);
    s = reference_scenario();
    s.ask = s.bid;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("expected gain") {
    const BookTop top{99990.0, 100010.0};
    const Theta th{HeadKind::SkewGaussian, 0.2, 1.5, 2.0};
    SUBCASE("identical inputs and Q = 0 give exactly zero") {
        for (Side side : {Side::Bid, Side::Ask}) {
            CHECK(expected_gain(th, th, side, top, 0.0, 3.0).delta_c == 0.0);
        }
    }
    SUBCASE("constant prediction: gain is minus the non bona fide terms") {
        const double Q = 2e4, delta = 1.0;
        const auto g = expected_gain(th, th, Side::Bid, top, Q, delta);
        const double mid = 1e5, sc = mid / 1e4, psi = 2.0;
        const auto tb = move_tails(th.skew(), -(delta + 0.5 * psi));
        const double q_terms = tb.p_below * (Q / mid) * (top.bid - delta * sc) -
                               tb.p_below * (1 - 5e-4) * (Q / mid) * (top.bid + tb.mean_below * sc);
        CHECK(g.delta_c == doctest::Approx(-q_terms).epsilon(1e-9));
        // Filling a bid that the price sinks through loses money, so the
        // spoofer only pays for the option: gain is negative here.
        CHECK(g.delta_c < 0.0);
    }
    SUBCASE("upward drift induced by a bid order makes spoofing profitable") {
        const Theta zero{HeadKind::Gaussian, 0.0, 1.0};
        const Theta plus{HeadKind::Gaussian, 2.0, 1.0};
        CHECK(expected_gain(plus, zero, Side::Bid, top, 1e4, 10.0).delta_c > 0.0);
        const Theta minus{HeadKind::Gaussian, -2.0, 1.0};
        CHECK(expected_gain(minus, zero, Side::Ask, top, 1e4, 10.0).delta_c > 0.0);
        CHECK(expected_gain(plus, zero, Side::Ask, top, 1e4, 10.0).delta_c < 0.0);
    }
}

TEST_CASE("judge applies the size and sign rules") {
    LobEvent ev;
    ev.ts_ns = 1733356078123456789LL;
    ev.asset = "BTC-USD";
    ev.kind = EventKind::LimitAdd;
    ev.side = Side::Bid;
    ev.price = 1.0;
    GainResult g;
    ev.size = 4499.0;
    g.delta_c = 10.0;
    CHECK_FALSE(judge(ev, 0, 1.0, g).suspicious);
    ev.size = 1e5;
    g.delta_c = -1.0;
    CHECK_FALSE(judge(ev, 0, 1.0, g).suspicious);
    g.delta_c = 1.0;
    CHECK(judge(ev, 0, 1.0, g).suspicious);
    ev.size = 4500.0;
    CHECK(judge(ev, 0, 1.0, g).suspicious);
    g.delta_c = 0.0;
    CHECK_FALSE(judge(ev, 0, 1.0, g).suspicious);
}

TEST_CASE("alert log lines are self-contained JSON") {
    CHECK(iso8601(1733356078123456789LL) == "2024-12-04T23:47:58.123456789Z");
    CHECK(iso8601(0) == "1970-01-01T00:00:00.000000000Z");
    const auto path = std::filesystem::temp_directory_path() / "lobsurv_test_alerts.jsonl";
    {
        AlertLog log(path.string());
        SpoofVerdict v;
        v.asset = "ETH-USD";
        v.side = Side::Ask;
        v.notional = 5000.0;
        v.delta_c = 0.25;
        v.large = v.suspicious = true;
        v.theta_plus = {HeadKind::SkewGaussian, 1.0, 2.0, -0.5};
        log.append(v);
        log.append(v);
        CHECK(log.written() == 2);
    }
    std::ifstream in(path);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("side") == "ASK");
        CHECK(j.at("suspicious") == true);
        CHECK(j.at("theta_plus").at("alpha") == -0.5);
        ++n;
    }
    CHECK(n == 2);
    std::filesystem::remove(path);
}
