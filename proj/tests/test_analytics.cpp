#include "doctest.h"

#include "lobsurv/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace lobsurv;

namespace {

const std::vector<std::string> kAssets{"BTC-USD"};

RowMatrix sim_rows(std::uint64_t seed, double seconds, std::vector<LobEvent>* events = nullptr) {
    SimConfig cfg;
    cfg.seed = seed;
    auto ev = simulate(cfg, seconds);
    ObservationOptions oo;
    oo.assets = kAssets;
    auto set = build_observations(ev, oo);
    if (events) *events = std::move(ev);
    return make_dataset(set, HeadKind::SkewGaussian).x;
}

MlpModel random_model(const RowMatrix& x, HeadKind head, std::uint64_t seed) {
    MlpModel m;
    m.kernel = KernelConfig{};
    m.assets = kAssets;
    m.feature_names = feature_names(m.kernel, kAssets[0]);
    m.fingerprint = feature_fingerprint(m.kernel, kAssets);
    m.transform = fit_transform(x);
    m.net = Mlp(head, static_cast<int>(x.cols()), 16);
    m.net.init(seed);
    return m;
}

MlpModel constant_model(const RowMatrix& x) {
    MlpModel m = random_model(x, HeadKind::SkewGaussian, 1);
    m.net.params.setZero();
    const auto n = m.net.params.size();
    m.net.params[n - 3] = 0.5;   // mu
    m.net.params[n - 2] = 0.3;   // sigma (pre-softplus)
    m.net.params[n - 1] = -1.0;  // alpha
    return m;
}

}  // namespace

TEST_CASE("make_dataset keeps rows in order and checks target count") {
    ObservationSet set;
    for (int i = 0; i < 3; ++i) {
        LabeledObservation o;
        o.features = {1.0 * i, 2.0 * i};
        o.targets = {10.0 * i};
        set.observations.push_back(o);
    }
    const auto d = make_dataset(set, HeadKind::Gaussian);
    CHECK(d.x.rows() == 3);
    CHECK(d.x(2, 1) == 4.0);
    CHECK(d.y(1, 0) == 10.0);
    CHECK_THROWS_AS(make_dataset(set, HeadKind::BivariateGaussian), ConfigError);
    CHECK_THROWS_AS(make_dataset(ObservationSet{}, HeadKind::Gaussian), ConfigError);
}

TEST_CASE("latency percentiles use nearest rank") {
    std::vector<std::int64_t> ns;
    for (int i = 100; i >= 1; --i) ns.push_back(i * 1000);
    const auto s = summarize_latency(ns);
    CHECK(s.count == 100);
    CHECK(s.p50_us == 50.0);
    CHECK(s.p95_us == 95.0);
    CHECK(s.p99_us == 99.0);
    CHECK(s.max_us == 100.0);
    CHECK(s.mean_us == doctest::Approx(50.5));
    CHECK(summarize_latency({}).count == 0);
}

TEST_CASE("spearman handles ties and reversals") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{10, 20, 30, 40, 50};
    const std::vector<double> c{5, 4, 3, 2, 1};
    CHECK(spearman(a, b) == doctest::Approx(1.0));
    CHECK(spearman(a, c) == doctest::Approx(-1.0));
    // Ranks of {1, 2, 2, 3} are {1, 2.5, 2.5, 4}.
    const std::vector<double> t{1, 2, 2, 3}, u{1, 2, 3, 4};
    const double r = (1.5 * 1.5 + 0 + 0 + 1.5 * 1.5) / std::sqrt((1.5 * 1.5 * 2) * (1.5 * 1.5 * 2 + 0.5 * 0.5 * 2));
    CHECK(spearman(t, u) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("response statistics") {
    SUBCASE("hand-computed t statistic") {
        const std::vector<double> d{1.0, 2.0, 3.0, 4.0};
        const auto c = response_statistics(d);
        CHECK(c.n == 4);
        CHECK(c.mean_diff == 2.5);
        CHECK(c.var == doctest::Approx(5.0 / 3.0));
        REQUIRE(c.t_stat.has_value());
        CHECK(*c.t_stat == doctest::Approx(2.0 * 2.5 / std::sqrt(5.0 / 3.0)));
    }
    SUBCASE("two-sided critical values") {
        // t = 2.262157 is the 97.5% quantile of Student t with 9 dof.
        std::vector<double> d(10, 0.0);
        d[0] = 1.0;
        auto c = response_statistics(d);
        // mean 0.1, var 0.1, T = sqrt(10) * 0.1 / sqrt(0.1) = 1
        CHECK(*c.t_stat == doctest::Approx(1.0));
        CHECK(*c.p_value == doctest::Approx(0.343436).epsilon(1e-5));
    }
    SUBCASE("constant differences leave T undefined") {
        const std::vector<double> d(5, 0.25);
        const auto c = response_statistics(d);
        CHECK(c.var == 0.0);
        CHECK_FALSE(c.t_stat.has_value());
        CHECK_FALSE(c.p_value.has_value());
    }
    SUBCASE("symmetric in sample order") {
        std::vector<double> d{0.3, -0.1, 0.7, 0.2, 0.05, 0.4};
        const auto a = response_statistics(d);
        std::reverse(d.begin(), d.end());
        std::rotate(d.begin(), d.begin() + 2, d.end());
        const auto b = response_statistics(d);
        CHECK(*a.p_value == doctest::Approx(*b.p_value).epsilon(1e-14));
        CHECK(*a.p_value >= 0.0);
        CHECK(*a.p_value <= 1.0);
    }
}

TEST_CASE("hypothetical order adds to one block and side") {
    KernelConfig k;
    std::vector<double> x(62, 1.0);
    add_hypothetical_order(x, k, 1, Side::Ask, 1000.0, 2.0);
    const FeatureLayout layout(k);
    CHECK(x[layout.limit(Side::Ask, 0, 0)] == 1.0);
    CHECK(x[31 + layout.limit(Side::Ask, 2, 1)] == doctest::Approx(1.0 + 1000.0 * std::exp(-0.2)));
    CHECK(x[31 + layout.limit(Side::Bid, 2, 1)] == 1.0);
    CHECK(x[31] == 1.0);
    CHECK_THROWS_AS(add_hypothetical_order(std::span<double>(x.data(), 31), k, 1, Side::Bid, 1.0, 0.0),
                    DimensionError);
}

TEST_CASE("bin edges") {
    const auto e = log_edges(0.1, 10.0, 4);
    REQUIRE(e.size() == 5);
    CHECK(e[0] == 0.1);
    CHECK(e[2] == doctest::Approx(1.0));
    CHECK(e[4] == 10.0);
    const auto l = linear_edges(-1.0, 1.0, 4);
    CHECK(l[1] == -0.5);
    CHECK_THROWS_AS(log_edges(0.0, 1.0, 3), ConfigError);
}

TEST_CASE("analysis on a constant predictor") {
    const RowMatrix x = sim_rows(3, 60.0);
    const MlpModel m = constant_model(x);
    const Moments ref = predicted_moments(m.predict(std::span<const double>(x.row(0).data(), 31)));

    for (PdVariable v : {PdVariable::Spread, PdVariable::ImbalanceLo, PdVariable::ImbalanceMo}) {
        const auto edges = v == PdVariable::Spread ? log_edges(0.1, 10.0, 20) : linear_edges(-3.0, 3.0, 12);
        const auto rep = partial_dependence(m, x, v, edges);
        double w = 0.0;
        std::size_t binned = 0;
        for (const auto& b : rep.bins) {
            w += b.weight;
            binned += b.count;
            if (b.count == 0) {
                CHECK(b.weight == 0.0);
                continue;
            }
            CHECK(b.std == doctest::Approx(ref.std).epsilon(1e-12));
            CHECK(b.mean == doctest::Approx(ref.mean).epsilon(1e-12));
        }
        CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(binned + rep.out_of_range == static_cast<std::size_t>(x.rows()));
    }

    ResponseOptions ro;
    ro.sizes = {0.0, 1e4};
    const auto pr = price_response(m, x, ro);
    CHECK(pr.cells.size() == 2 * 2 * 5);
    for (const auto& c : pr.cells) {
        CHECK(c.mean_diff == 0.0);
        CHECK_FALSE(c.t_stat.has_value());
    }
}

TEST_CASE("price response on a random network") {
    const RowMatrix x = sim_rows(4, 60.0);
    const MlpModel m = random_model(x, HeadKind::SkewGaussian, 5);
    ResponseOptions ro;
    ro.sizes = {0.0, 1e3, 5e4};
    const auto a = price_response(m, x, ro);
    const auto b = price_response(m, x, ro);
    REQUIRE(a.cells.size() == 30);
    CHECK(a.sample_rows.size() == 10);
    std::vector<std::size_t> sorted = a.sample_rows;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].mean_diff == b.cells[i].mean_diff);
        if (a.cells[i].size == 0.0) CHECK(a.cells[i].mean_diff == 0.0);
        if (a.cells[i].p_value) {
            CHECK(*a.cells[i].p_value >= 0.0);
            CHECK(*a.cells[i].p_value <= 1.0);
        }
    }
    ro.n_samples = 1;
    CHECK_THROWS_AS(price_response(m, x, ro), ConfigError);
    ro.n_samples = 10;
    ro.target = 1;
    CHECK_THROWS_AS(price_response(m, x, ro), ConfigError);
}

TEST_CASE("detector scores every filter-passing order of the first asset") {
    std::vector<LobEvent> events;
    const RowMatrix x = sim_rows(6, 40.0, &events);
    const MlpModel m = random_model(x, HeadKind::SkewGaussian, 8);

    std::size_t passing = 0;
    BookTop top;
    for (const auto& e : events) {
        if (e.kind == EventKind::LimitAdd && top.valid() && OrderFilter{}.passes(e.notional(), compute_distance(e, top)))
            ++passing;
        top = track_book(e, top);
    }
    std::vector<SpoofVerdict> verdicts;
    const auto sum = run_detection(m, events, {}, [&](const SpoofVerdict& v) { verdicts.push_back(v); });
    CHECK(sum.scored == passing);
    CHECK(verdicts.size() == passing);
    CHECK(sum.latency.count == passing);
    CHECK(sum.latency.p50_us <= sum.latency.p99_us);
    std::size_t large = 0, suspicious = 0;
    for (const auto& v : verdicts) {
        large += v.large;
        suspicious += v.suspicious;
        CHECK(v.large == (v.notional >= 4500.0));
        if (v.suspicious) CHECK(v.delta_c > 0.0);
    }
    CHECK(sum.large == large);
    CHECK(sum.suspicious == suspicious);

    // Inputs match the offline observation builder.
    ObservationOptions oo;
    oo.assets = kAssets;
    oo.drop_warmup = false;
    const auto set = build_observations(events, oo);
    std::size_t j = 0, checked = 0;
    const FeatureLayout layout(m.kernel);
    for (const auto& obs : set.observations) {
        while (j < verdicts.size() && verdicts[j].event_index < obs.event_index) ++j;
        REQUIRE(j < verdicts.size());
        REQUIRE(verdicts[j].event_index == obs.event_index);
        const Theta plus = m.predict(obs.features);
        std::vector<double> zero = obs.features;
        for (std::size_t e = 0; e < m.kernel.etas.size(); ++e)
            for (std::size_t b = 0; b < m.kernel.betas.size(); ++b) {
                double& cell = zero[layout.limit(obs.order_side, b, e)];
                cell = std::max(0.0, cell - obs.order_notional * std::exp(-m.kernel.etas[e] * obs.order_distance_bps));
            }
        const Theta z = m.predict(zero);
        CHECK(verdicts[j].theta_plus.mu == plus.mu);
        CHECK(verdicts[j].theta_zero.mu == z.mu);
        CHECK(verdicts[j].theta_zero.alpha == z.alpha);
        if (++checked == 300) break;
    }
    CHECK(checked == 300);

    // Deterministic given model and events.
    std::vector<SpoofVerdict> again;
    run_detection(m, events, {}, [&](const SpoofVerdict& v) { again.push_back(v); });
    REQUIRE(again.size() == verdicts.size());
    for (std::size_t i = 0; i < again.size(); i += 101) CHECK(again[i].delta_c == verdicts[i].delta_c);
}

TEST_CASE("detector edge cases") {
    std::vector<LobEvent> events;
    const RowMatrix x = sim_rows(7, 20.0, &events);
    const MlpModel m = random_model(x, HeadKind::SkewGaussian, 2);

    std::vector<LobEvent> no_orders;
    for (const auto& e : events)
        if (e.kind != EventKind::LimitAdd) no_orders.push_back(e);
    const auto s = run_detection(m, no_orders);
    CHECK(s.scored == 0);
    CHECK(s.latency.count == 0);

    // Orders before the first quote are not scored.
    std::vector<LobEvent> early{events.begin(), events.end()};
    LobEvent first = *std::find_if(events.begin(), events.end(), [](const LobEvent& e) { return e.kind == EventKind::LimitAdd; });
    first.ts_ns = events.front().ts_ns;
    early.insert(early.begin(), first);
    const auto s2 = run_detection(m, early);
    CHECK(s2.no_quote >= 1);

    const MlpModel bi = random_model(x, HeadKind::BivariateGaussian, 1);
    CHECK_THROWS_AS(Detector{bi}, ConfigError);

    MlpModel wrong = m;
    wrong.fingerprint = "deadbeef";
    CHECK_THROWS_AS(Detector{wrong}, ModelLoadError);

    const auto bench = run_bench(m, events, {}, 1000);
    CHECK(bench.summary.scored > 0);
    CHECK(bench.throughput > 0.0);
}

TEST_CASE("efficacy scoring against labels") {
    auto verdict = [](Nanos ts, Side side, double notional, bool suspicious) {
        SpoofVerdict v;
        v.ts_ns = ts;
        v.asset = "BTC-USD";
        v.side = side;
        v.notional = notional;
        v.large = notional >= 4500.0;
        v.suspicious = suspicious;
        return v;
    };
    const std::vector<SpoofVerdict> vs{verdict(1, Side::Bid, 2e4, true), verdict(1, Side::Bid, 3e4, false),
                                       verdict(2, Side::Ask, 1e4, true), verdict(3, Side::Bid, 100, false),
                                       verdict(4, Side::Bid, 200, false), verdict(5, Side::Bid, 1e4, false)};
    const std::vector<SpoofLabel> labels{{1, "BTC-USD", Side::Bid, 2e4, 8, 0},
                                         {1, "BTC-USD", Side::Bid, 3e4, 12, 0},
                                         {9, "BTC-USD", Side::Bid, 4e4, 16, 0}};
    const auto r = score_against_labels(vs, labels);
    CHECK(r.labeled == 3);
    CHECK(r.labeled_scored == 2);
    CHECK(r.labeled_flagged == 1);
    CHECK(r.flagged == 2);
    CHECK(r.recall() == doctest::Approx(1.0 / 3.0));
    CHECK(r.precision() == doctest::Approx(0.5));
    CHECK(r.normal_small == 2);
    CHECK(r.false_positive_rate_small() == 0.0);
    CHECK(r.normal_large == 2);
    CHECK(r.false_positive_rate_large() == doctest::Approx(0.5));
}
