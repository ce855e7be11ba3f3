// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion numbers as arguments to run a
// subset, e.g. `acceptance 1 2 9`.

#include "lobsurv/analytics.hpp"
#include "lobsurv/dist_math.hpp"
#include "lobsurv/flow_features.hpp"
#include "lobsurv/market_sim.hpp"
#include "lobsurv/prob_net.hpp"
#include "lobsurv/spoof_econ.hpp"

#include "grad_check.hpp"
#include "oracles.hpp"
#include "quad_oracle.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace lobsurv;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Shared between 4 and 5.
struct SyntheticFit {
    MlpModel model;
    RowMatrix x_val;
};
std::optional<SyntheticFit> g_synthetic;

// Shared between 7 and 8.
std::optional<MlpModel> g_realized;
std::vector<LobEvent> g_realized_events;

// ---------------------------------------------------------------- 1

Outcome tail_moments_vs_quadrature() {
    double worst = 0.0;
    std::size_t points = 0, sides = 0, skipped = 0;
    std::string where;
    auto compare = [&](const dist::TailMoments& got, const oracle::RefTail& ref, const std::string& tag) {
        auto upd = [&](double e, const char* what) {
            if (e > worst) {
                worst = e;
                where = tag + " " + what;
            }
        };
        upd(std::abs(got.p_below - ref.p_below), "p_below");
        upd(std::abs(got.p_above - ref.p_above), "p_above");
        // A side with probability at most 1e-300 has no usable conditional mean.
        if (ref.p_below > dist::kDegenerateTail && !got.degenerate_below) {
            upd(std::abs(got.mean_below - ref.mean_below), "mean_below");
            ++sides;
        } else {
            ++skipped;
        }
        if (ref.p_above > dist::kDegenerateTail && !got.degenerate_above) {
            upd(std::abs(got.mean_above - ref.mean_above), "mean_above");
            ++sides;
        } else {
            ++skipped;
        }
        ++points;
    };
    for (int mu = -5; mu <= 5; ++mu) {
        for (double sigma : {0.1, 1.0, 10.0}) {
            for (int k = -4; k <= 4; ++k) {
                const double x = mu + k * sigma;
                const std::string base = fmt("mu=%d sigma=%g x=%g", mu, sigma, x);
                compare(dist::gaussian_tail_moments(mu, sigma, x), oracle::ref_tail(mu, sigma, 0.0, x), "gauss " + base);
                for (int alpha = -5; alpha <= 5; ++alpha) {
                    compare(dist::sn_tail_moments({double(mu), sigma, double(alpha)}, x),
                            oracle::ref_tail(mu, sigma, alpha, x), fmt("sn alpha=%d ", alpha) + base);
                }
            }
        }
    }
    return {worst <= 1e-8 && points >= 1000,
            fmt("points=%zu conditional_means=%zu degenerate_sides=%zu max_abs_err=%.3g (%s)", points, sides, skipped,
                worst, where.c_str())};
}

// ---------------------------------------------------------------- 2

Outcome streamed_sums_vs_brute_force() {
    const KernelConfig cfg;
    auto events = oracle::random_flow_events(100'000, 2024);
    for (auto& ev : events) ev.t = std::llround(ev.t * 1e9) / 1e9;
    FlowState s(cfg);
    double worst = 0.0;
    std::size_t comparisons = 0;
    auto check_at = [&](double t) {
        for (Side side : {Side::Bid, Side::Ask}) {
            for (std::size_t b = 0; b < cfg.betas.size(); ++b) {
                for (std::size_t e = 0; e < cfg.etas.size(); ++e) {
                    worst = std::max(worst, oracle::rel_err(s.limit(side, b, e),
                                                            oracle::limit_sum(events, side, cfg.betas[b], cfg.etas[e], t)));
                    ++comparisons;
                }
                worst = std::max(worst, oracle::rel_err(s.market(side, b), oracle::market_sum(events, side, cfg.betas[b], t)));
                ++comparisons;
            }
        }
    };
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        s.advance_to(static_cast<Nanos>(std::llround(ev.t * 1e9)));
        if (ev.limit) {
            s.add_limit(ev.side, ev.notional, ev.distance);
        } else {
            s.add_market(ev.side, ev.notional);
        }
        if ((i + 1) % 10'000 == 0) check_at(ev.t);
    }
    const std::size_t pairs = cfg.betas.size() * cfg.etas.size();
    return {worst < 1e-9 && pairs == 12 && cfg.betas.size() == 3,
            fmt("events=%zu limit_pairs=%zu market_betas=%zu comparisons=%zu max_rel_err=%.3g", events.size(), pairs,
                cfg.betas.size(), comparisons, worst)};
}

// ---------------------------------------------------------------- 3

Outcome gradients_vs_finite_differences() {
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> in_dim(2, 31), hid_dim(2, 24), batch(4, 32);
    std::string detail;
    bool ok = true;
    for (auto head : {HeadKind::Gaussian, HeadKind::SkewGaussian, HeadKind::BivariateGaussian}) {
        double worst = 0.0;
        std::size_t checked = 0;
        int empty = 0;
        for (int inst = 0; inst < 50; ++inst) {
            const int in = in_dim(rng), hid = hid_dim(rng), n = batch(rng);
            // Fan-in scaled weights and targets drawn from the predicted law.
            // Arbitrary targets against a collapsed sigma push the loss to
            // 1e10, where central differences lose all precision.
            const Mlp net = gradcheck::random_net(head, in, hid, rng, 1.0 / std::sqrt(static_cast<double>(in)));
            const RowMatrix z = gradcheck::random_matrix(n, in, rng);
            const RowMatrix y = gradcheck::model_targets(net, z, rng);
            const auto r = gradcheck::finite_difference_check(net, z, y);
            if (r.checked == 0) ++empty;
            checked += r.checked;
            worst = std::max(worst, r.max_rel);
        }
        ok = ok && worst < 1e-4 && empty == 0;
        detail += fmt("%s: instances=50 coords=%zu max_rel_err=%.3g; ", to_string(head).c_str(), checked, worst);
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 4

double skew_normal_entropy(double alpha) {
    auto f = [&](double z) {
        const double lp = dist::sn_logpdf({0.0, 1.0, alpha}, z);
        return -std::exp(lp) * lp;
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -40.0, 40.0, 15, 1e-14);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

Outcome synthetic_recovery() {
    SimConfig cfg;
    cfg.seed = 11;
    const LabeledLaw law;
    const std::size_t n = 1'000'000;
    const auto sample = generate_labeled(cfg, n, law);
    TrainConfig tc;
    tc.max_epochs = 100;
    tc.patience = 20;
    TrainReport rep;
    const std::vector<std::string> assets{cfg.assets[0].name};
    auto model = train(Dataset{sample.x, sample.y}, HeadKind::SkewGaussian, tc, cfg.kernel, assets, 1.0, &rep);

    const std::size_t v0 = rep.train_rows, m = n - v0;
    double nll_sum = 0.0, log_sigma = 0.0;
    std::vector<double> pred(m), truth(m);
    for (std::size_t i = v0; i < n; ++i) {
        const Theta th = model.predict(std::span<const double>(sample.x.row(i).data(), sample.x.cols()));
        nll_sum += nll(th, std::span<const double>(&sample.y(i, 0), 1));
        log_sigma += std::log(sample.truth[i].sigma);
        pred[i - v0] = dist::sn_mean_var(th.skew()).mean;
        truth[i - v0] = dist::sn_mean_var(sample.truth[i]).mean;
    }
    // Average NLL of the generating law: E[log sigma] plus the standard skew-normal entropy.
    const double model_nll = nll_sum / m;
    const double analytic = log_sigma / m + skew_normal_entropy(law.alpha);
    const double gap = std::abs(model_nll - analytic) / std::abs(analytic);
    const double r = pearson(pred, truth);
    g_synthetic = SyntheticFit{std::move(model), sample.x.bottomRows(static_cast<Eigen::Index>(m))};
    return {gap <= 0.02 && r > 0.9,
            fmt("observations=%zu val_rows=%zu epochs=%zu best_epoch=%d val_nll=%.5f analytic_nll=%.5f rel_gap=%.4f "
                "pearson=%.4f",
                n, m, rep.epochs.size(), rep.best_epoch, model_nll, analytic, gap, r)};
}

// ---------------------------------------------------------------- 5

Outcome figure_shapes() {
    if (!g_synthetic) synthetic_recovery();
    const auto& fit = *g_synthetic;
    const auto pd = partial_dependence(fit.model, fit.x_val, PdVariable::Spread, log_edges(0.1, 10.0, 20));
    std::vector<double> centre, sd;
    for (const auto& b : pd.bins) {
        if (b.count == 0) continue;
        centre.push_back(std::sqrt(b.lo * b.hi));
        sd.push_back(b.std);
    }
    const double rho = spearman(centre, sd);

    const ResponseOptions ro;
    const auto pr = price_response(fit.model, fit.x_val, ro);
    std::map<std::tuple<int, double, double>, double> cell;
    int sign_violations = 0;
    for (const auto& c : pr.cells) {
        cell[{index(c.side), c.size, c.distance}] = c.mean_diff;
        if (c.side == Side::Bid && c.mean_diff < 0.0) ++sign_violations;
        if (c.side == Side::Ask && c.mean_diff > 0.0) ++sign_violations;
    }
    int distance_violations = 0, size_violations = 0;
    for (Side side : {Side::Bid, Side::Ask}) {
        for (std::size_t i = 0; i < ro.sizes.size(); ++i) {
            for (std::size_t j = 0; j < ro.distances.size(); ++j) {
                const double here = std::abs(cell[{index(side), ro.sizes[i], ro.distances[j]}]);
                if (j + 1 < ro.distances.size() && std::abs(cell[{index(side), ro.sizes[i], ro.distances[j + 1]}]) > here)
                    ++distance_violations;
                if (i + 1 < ro.sizes.size() && std::abs(cell[{index(side), ro.sizes[i + 1], ro.distances[j]}]) < here)
                    ++size_violations;
            }
        }
    }
    const bool a = rho > 0.9, b = sign_violations == 0 && distance_violations == 0 && size_violations == 0;
    return {a && b, fmt("(a) spread bins=%zu spearman=%.4f %s; (b) cells=%zu sign_violations=%d "
                        "distance_violations=%d size_violations=%d %s",
                        centre.size(), rho, a ? "ok" : "FAIL", pr.cells.size(), sign_violations, distance_violations,
                        size_violations, b ? "ok" : "FAIL")};
}

// ---------------------------------------------------------------- 6

struct Scenario {
    oracle::McScenario mc;
    dist::SkewNormalParams move;
};

oracle::McScenario random_quotes(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    oracle::McScenario s;
    const double mid = 10.0 + 1e5 * u(rng);
    const double psi = 0.2 + 10.0 * u(rng);
    s.bid = mid * (1 - 0.5 * psi / 1e4);
    s.ask = mid * (1 + 0.5 * psi / 1e4);
    s.delta_b_bps = 10.0 * u(rng);
    s.delta_a_bps = 3.0 * u(rng);
    s.Q_notional = 1e5 * u(rng);
    s.q_notional = 50.0 + 450.0 * u(rng);
    s.maker_bps = 2.0 * u(rng);
    s.taker_bps = 10.0 * u(rng);
    return s;
}

SpoofScenario to_scenario(const oracle::McScenario& m) {
    SpoofScenario s;
    s.bid = m.bid;
    s.ask = m.ask;
    s.delta_b_bps = m.delta_b_bps;
    s.delta_a_bps = m.delta_a_bps;
    s.Q_notional = m.Q_notional;
    s.q_notional = m.q_notional;
    s.maker_fee_bps = m.maker_bps;
    s.taker_fee_bps = m.taker_bps;
    return s;
}

// Two payoffs on the same stream of draws.
struct PairedMc {
    double mean1 = 0, se1 = 0, mean2 = 0, se2 = 0;
};

template <class Draw, class P1, class P2>
PairedMc paired_monte_carlo(std::size_t n, Draw&& draw, P1&& p1, P2&& p2) {
    double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto d = draw();
        const double a = p1(d), b = p2(d);
        s1 += a;
        q1 += a * a;
        s2 += b;
        q2 += b * b;
    }
    const double dn = static_cast<double>(n);
    PairedMc r;
    r.mean1 = s1 / dn;
    r.mean2 = s2 / dn;
    r.se1 = std::sqrt(std::max(0.0, q1 / dn - r.mean1 * r.mean1) / dn);
    r.se2 = std::sqrt(std::max(0.0, q2 / dn - r.mean2 * r.mean2) / dn);
    return r;
}

Outcome costs_vs_monte_carlo() {
    const std::size_t draws = 10'000'000;
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nrm(0.0, 1.0);
    double worst_sell = 0, worst_buy = 0, worst_cross_sell = 0, worst_cross_buy = 0, worst_z = 0;

    for (int i = 0; i < 50; ++i) {
        const auto mc = random_quotes(rng);
        const dist::SkewNormalParams mv{4.0 * (u(rng) - 0.5), 0.3 + 8.0 * u(rng), 10.0 * (u(rng) - 0.5)};
        const auto s = to_scenario(mc);
        const auto r = paired_monte_carlo(
            draws, [&] { return oracle::sample_skew_normal(rng, mv.mu, mv.sigma, mv.alpha); },
            [&](double dp) { return oracle::payoff_sell(mc, dp); }, [&](double dp) { return oracle::payoff_buy(mc, dp); });
        const double sell = expected_cost_sell_side_spoof(s, mv), buy = expected_cost_buy_side_spoof(s, mv);
        worst_sell = std::max(worst_sell, oracle::rel_err(sell, r.mean1));
        worst_buy = std::max(worst_buy, oracle::rel_err(buy, r.mean2));
        worst_z = std::max({worst_z, std::abs(sell - r.mean1) / r.se1, std::abs(buy - r.mean2) / r.se2});
    }
    for (int i = 0; i < 50; ++i) {
        auto bona = random_quotes(rng);
        auto spoof = random_quotes(rng);
        spoof.delta_b_bps = bona.delta_b_bps;
        spoof.delta_a_bps = bona.delta_a_bps;
        spoof.maker_bps = bona.maker_bps;
        spoof.taker_bps = bona.taker_bps;
        spoof.q_notional = bona.q_notional;
        CrossScenario c;
        c.bid1 = spoof.bid;
        c.ask1 = spoof.ask;
        c.bid2 = bona.bid;
        c.ask2 = bona.ask;
        c.delta_b_bps = bona.delta_b_bps;
        c.delta_a_bps = bona.delta_a_bps;
        c.Q_notional = spoof.Q_notional;
        c.q_notional = bona.q_notional;
        c.maker_fee_bps = bona.maker_bps;
        c.taker_fee_bps = bona.taker_bps;
        const dist::BivariateNormalParams bv{4.0 * (u(rng) - 0.5), 4.0 * (u(rng) - 0.5), 0.3 + 8.0 * u(rng),
                                             0.3 + 8.0 * u(rng), 1.8 * (u(rng) - 0.5)};
        const double sq = std::sqrt(1.0 - bv.rho * bv.rho);
        const auto r = paired_monte_carlo(
            draws,
            [&] {
                const double z1 = nrm(rng), z2 = nrm(rng);
                return std::pair{bv.mu1 + bv.sigma1 * z1, bv.mu2 + bv.sigma2 * (bv.rho * z1 + sq * z2)};
            },
            [&](auto d) { return oracle::payoff_cross_sell(bona, spoof, d.first, d.second); },
            [&](auto d) { return oracle::payoff_cross_buy(bona, spoof, d.first, d.second); });
        const double cs = expected_cost_cross_sell(c, bv), cb = expected_cost_cross_buy(c, bv);
        worst_cross_sell = std::max(worst_cross_sell, oracle::rel_err(cs, r.mean1));
        worst_cross_buy = std::max(worst_cross_buy, oracle::rel_err(cb, r.mean2));
        worst_z = std::max({worst_z, std::abs(cs - r.mean1) / r.se1, std::abs(cb - r.mean2) / r.se2});
    }
    const double worst = std::max({worst_sell, worst_buy, worst_cross_sell, worst_cross_buy});
    return {worst < 1e-3, fmt("draws=1e7 scenarios=50 per operation; max_rel_err sell=%.3g buy=%.3g cross_sell=%.3g "
                              "cross_buy=%.3g; max |err|/stderr=%.2f",
                              worst_sell, worst_buy, worst_cross_sell, worst_cross_buy, worst_z)};
}

// ---------------------------------------------------------------- 7

void train_realized_model() {
    if (g_realized) return;
    SimConfig cfg;
    cfg.seed = 1;
    g_realized_events = simulate(cfg, 1000.0);
    ObservationOptions oo;
    oo.assets = {cfg.assets[0].name};
    oo.kernel = cfg.kernel;
    const auto set = build_observations(g_realized_events, oo);
    const auto data = make_dataset(set, HeadKind::SkewGaussian);
    TrainConfig tc;
    tc.max_epochs = 60;
    tc.patience = 10;
    g_realized = train(data, HeadKind::SkewGaussian, tc, cfg.kernel, oo.assets, 1.0);
}

Outcome detection_efficacy() {
    train_realized_model();
    SimConfig cfg;
    cfg.seed = 2;
    const auto stream = simulate(cfg, 300.0);
    EpisodeRecipe recipe;
    recipe.count = 40;
    const auto episodes = random_episodes(stream, cfg.assets[0].name, recipe);
    const auto injected = inject_spoofs(stream, episodes);
    std::vector<SpoofVerdict> verdicts;
    const auto summary = run_detection(*g_realized, injected.events, {},
                                       [&](const SpoofVerdict& v) { verdicts.push_back(v); });
    const auto eff = score_against_labels(verdicts, injected.labels);
    return {eff.recall() >= 0.8 && eff.false_positive_rate_small() <= 0.05,
            fmt("episodes=%zu labeled=%zu labeled_scored=%zu recall=%.3f fpr_small=%.4f (of %zu) fpr_large=%.3f "
                "(of %zu) precision=%.3f scored=%zu suspicious_share_of_large=%.3f",
                episodes.size(), eff.labeled, eff.labeled_scored, eff.recall(), eff.false_positive_rate_small(),
                eff.normal_small, eff.false_positive_rate_large(), eff.normal_large, eff.precision(), summary.scored,
                summary.suspicious_share_of_large())};
}

// ---------------------------------------------------------------- 8

Outcome latency() {
    train_realized_model();
    const auto rep = run_bench(*g_realized, g_realized_events);
    const auto& l = rep.summary.latency;
    return {rep.summary.scored >= 100'000 && g_realized->feature_names.size() == 31 && l.p50_us < 100.0 &&
                l.p99_us < 500.0,
            fmt("features=%zu scored=%zu p50=%.2fus p95=%.2fus p99=%.2fus max=%.1fus throughput=%.0f/s",
                g_realized->feature_names.size(), rep.summary.scored, l.p50_us, l.p95_us, l.p99_us, l.max_us,
                rep.throughput)};
}

// ---------------------------------------------------------------- 9

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Outcome identities() {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int draws = 1000;

    // Q = 0: the counterfactual pair coincides and the gain is exactly zero,
    // both from given parameters and through a network.
    std::mt19937_64 net_rng(910);
    const KernelConfig kernel;
    MlpModel model;
    model.net = gradcheck::random_net(HeadKind::SkewGaussian, 31, 16, net_rng, 0.3);
    model.transform.features.assign(31, FeatureScaling{});
    model.kernel = kernel;
    int q0_nonzero = 0;
    for (int i = 0; i < draws; ++i) {
        const Theta th{HeadKind::SkewGaussian, 4.0 * (u(rng) - 0.5), 0.3 + 5.0 * u(rng), 10.0 * (u(rng) - 0.5)};
        const double mid = 100.0 + 1e4 * u(rng), psi = 0.5 + 5.0 * u(rng);
        const BookTop top{mid * (1 - 0.5 * psi / 1e4), mid * (1 + 0.5 * psi / 1e4)};
        const Side side = u(rng) < 0.5 ? Side::Bid : Side::Ask;
        const double delta = 20.0 * u(rng);
        if (expected_gain(th, th, side, top, 0.0, delta).delta_c != 0.0) ++q0_nonzero;
        std::vector<double> x0(31);
        x0[0] = psi;
        for (std::size_t k = 1; k < x0.size(); ++k) x0[k] = 1e4 * u(rng);
        std::vector<double> xp = x0;
        add_hypothetical_order(xp, kernel, 0, side, 0.0, delta);
        if (xp != x0 || expected_gain(model, xp, x0, side, top, 0.0, delta).delta_c != 0.0) ++q0_nonzero;
    }

    // alpha = 0 reductions.
    double alpha0 = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double mu = 10.0 * (u(rng) - 0.5), sigma = 0.1 + 10.0 * u(rng), x = mu + sigma * 8.0 * (u(rng) - 0.5);
        const dist::SkewNormalParams p{mu, sigma, 0.0};
        const double z = (x - mu) / sigma;
        alpha0 = std::max(alpha0, rel(dist::sn_pdf(p, x), dist::std_normal_pdf(z) / sigma));
        alpha0 = std::max(alpha0, rel(dist::sn_cdf(p, x), dist::std_normal_cdf(z)));
        const auto mv = dist::sn_mean_var(p);
        alpha0 = std::max({alpha0, rel(mv.mean, mu), rel(mv.variance, sigma * sigma)});
        const auto s = dist::sn_tail_moments(p, x), g = dist::gaussian_tail_moments(mu, sigma, x);
        alpha0 = std::max({alpha0, rel(s.p_below, g.p_below), rel(s.p_above, g.p_above), rel(s.mean_below, g.mean_below),
                           rel(s.mean_above, g.mean_above)});
        const double y = mu + sigma * 3.0 * (u(rng) - 0.5);
        const Theta skew{HeadKind::SkewGaussian, mu, sigma, 0.0}, gauss{HeadKind::Gaussian, mu, sigma};
        alpha0 = std::max(alpha0, rel(nll(skew, std::span<const double>(&y, 1)), nll(gauss, std::span<const double>(&y, 1))));
    }

    // rho = 0 factorization of the bivariate law.
    double rho0 = 0.0;
    for (int i = 0; i < draws; ++i) {
        const dist::BivariateNormalParams b{10.0 * (u(rng) - 0.5), 10.0 * (u(rng) - 0.5), 0.1 + 10.0 * u(rng),
                                            0.1 + 10.0 * u(rng), 0.0};
        const double y1 = b.mu1 + b.sigma1 * 6.0 * (u(rng) - 0.5), y2 = b.mu2 + b.sigma2 * 6.0 * (u(rng) - 0.5);
        const double fact = dist::sn_logpdf({b.mu1, b.sigma1, 0.0}, y1) + dist::sn_logpdf({b.mu2, b.sigma2, 0.0}, y2);
        rho0 = std::max(rho0, rel(dist::bvn_logpdf(b, y1, y2), fact));
        Theta bi{HeadKind::BivariateGaussian, b.mu1, b.sigma1};
        bi.mu2 = b.mu2;
        bi.sigma2 = b.sigma2;
        bi.rho = 0.0;
        const double ys[2] = {y1, y2};
        const Theta g1{HeadKind::Gaussian, b.mu1, b.sigma1}, g2{HeadKind::Gaussian, b.mu2, b.sigma2};
        rho0 = std::max(rho0, rel(nll(bi, ys), nll(g1, std::span<const double>(&y1, 1)) + nll(g2, std::span<const double>(&y2, 1))));
    }

    // Law of total expectation and total probability of the threshold split.
    double lote = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double mu = 10.0 * (u(rng) - 0.5), sigma = 0.1 + 10.0 * u(rng), alpha = 20.0 * (u(rng) - 0.5);
        const double x = mu + sigma * 12.0 * (u(rng) - 0.5);
        const dist::SkewNormalParams p{mu, sigma, alpha};
        const double scale = std::abs(mu) + sigma;
        const auto t = dist::sn_tail_moments(p, x);
        lote = std::max(lote, std::abs(t.p_below * t.mean_below + t.p_above * t.mean_above - dist::sn_mean_var(p).mean) / scale);
        lote = std::max(lote, std::abs(t.p_below + t.p_above - 1.0));
        const auto g = dist::gaussian_tail_moments(mu, sigma, x);
        lote = std::max(lote, std::abs(g.p_below * g.mean_below + g.p_above * g.mean_above - mu) / scale);
        lote = std::max(lote, std::abs(g.p_below + g.p_above - 1.0));
    }
    return {q0_nonzero == 0 && alpha0 <= 1e-12 && rho0 <= 1e-12 && lote <= 1e-9,
            fmt("draws=%d; Q=0 nonzero gains=%d; alpha=0 max_rel_err=%.3g; rho=0 max_rel_err=%.3g; "
                "total expectation max_err=%.3g (relative to |mu|+sigma)",
                draws, q0_nonzero, alpha0, rho0, lote)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"tail moments vs quadrature", tail_moments_vs_quadrature},
        {"streamed flow sums vs brute force", streamed_sums_vs_brute_force},
        {"gradients vs central differences", gradients_vs_finite_differences},
        {"synthetic recovery", synthetic_recovery},
        {"partial dependence and price response shapes", figure_shapes},
        {"expected costs vs Monte-Carlo payoffs", costs_vs_monte_carlo},
        {"detection efficacy on injected episodes", detection_efficacy},
        {"per-order scoring latency", latency},
        {"identities", identities},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %d %s: %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failed;
    }
    return failed ? 1 : 0;
}
