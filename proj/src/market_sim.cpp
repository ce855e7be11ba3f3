#include "lobsurv/market_sim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_map>

namespace lobsurv {

double HawkesConfig::spectral_radius() const {
    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = excitation[i][j] / decay;
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

void SimConfig::validate() const {
    if (assets.empty()) throw ConfigError("simulation needs at least one asset");
    kernel.validate();
    if (!(grid_dt > 0.0)) throw ConfigError("grid_dt must be positive");
    for (const auto& a : assets) {
        const auto& h = a.hawkes;
        if (!(h.decay > 0.0)) throw ConfigError(a.name + ": excitation decay must be positive");
        for (double b : h.baseline)
            if (!(b > 0.0)) throw ConfigError(a.name + ": baseline intensities must be positive");
        for (const auto& row : h.excitation)
            for (double e : row)
                if (!(e >= 0.0)) throw ConfigError(a.name + ": excitation must be non-negative");
        if (const double r = h.spectral_radius(); !(r < 1.0)) {
            throw ConfigError(a.name + ": unstable excitation, spectral radius " + std::to_string(r) + " >= 1");
        }
        if (!(a.initial_mid > 0.0 && a.notional_log_sd > 0.0 && a.distance_mean_bps > 0.0 &&
              a.noise_per_spread >= 0.0 && a.spread_mean_bps > 0.0 && a.spread_reversion >= 0.0 &&
              a.spread_vol >= 0.0 && a.min_spread_bps > 0.0)) {
            throw ConfigError(a.name + ": simulation scales must be positive");
        }
    }
    if (!cross_kappa.empty()) {
        if (cross_kappa.size() != assets.size()) throw ConfigError("cross_kappa must be assets x assets");
        for (const auto& row : cross_kappa)
            if (row.size() != assets.size()) throw ConfigError("cross_kappa must be assets x assets");
    }
}

namespace {

struct AssetState {
    double mid = 0.0;
    double log_spread = 0.0;
    BookTop top;
    FlowState flows;
};

/// Event and grid generator shared by `simulate` and `generate_labeled`.
class Engine {
public:
    struct Emitted {
        std::size_t asset = 0;
        SimEventType type = SimEventType::LimitBid;
        double t = 0.0;
        double notional = 0.0;
        double distance_bps = 0.0;
    };

    explicit Engine(const SimConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
        cfg_.validate();
        const std::size_t n = cfg_.assets.size();
        states_.resize(n);
        excite_.assign(4 * n, 0.0);
        imbalance_at_.assign(n, 0.0);
        next_imbalance_.assign(n, 0.0);
        for (std::size_t a = 0; a < n; ++a) {
            const auto& ac = cfg_.assets[a];
            states_[a].mid = ac.initial_mid;
            states_[a].log_spread = std::log(ac.spread_mean_bps);
            states_[a].flows = FlowState(cfg_.kernel);
            states_[a].flows.advance_to(0);
            refresh_top(a);
        }
    }

    const AssetState& state(std::size_t a) const { return states_[a]; }
    /// Imbalance that drove the most recent grid step.
    double last_imbalance(std::size_t a) const { return imbalance_at_[a]; }
    double time() const { return t_; }

    /// Runs until `stop()` returns true or `duration` elapses. `on_event` sees
    /// each point-process event after the true flows are updated; `on_grid`
    /// sees each grid time after the quote update.
    void run(double duration, const std::function<void(const Emitted&)>& on_event,
             const std::function<void(double)>& on_grid, const std::function<bool()>& stop = {}) {
        const std::size_t types = excite_.size();
        std::vector<double> lam(types);
        std::exponential_distribution<double> unit_exp(1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        on_grid(0.0);
        std::int64_t step = 0;
        double next_grid = cfg_.grid_dt;
        while (t_ < duration) {
            if (stop && stop()) return;
            double total = 0.0;
            for (std::size_t i = 0; i < types; ++i) total += (lam[i] = intensity(i));
            const double t_prop = t_ + unit_exp(rng_) / total;
            if (t_prop >= next_grid) {
                decay_excitation(next_grid - t_);
                t_ = next_grid;
                ++step;
                grid_step();
                on_grid(t_);
                next_grid = cfg_.grid_dt * static_cast<double>(step + 1);
                continue;
            }
            decay_excitation(t_prop - t_);
            t_ = t_prop;
            double accepted = 0.0;
            for (std::size_t i = 0; i < types; ++i) accepted += (lam[i] = intensity(i));
            const double u = unif(rng_) * total;
            if (u > accepted) continue;  // thinned
            std::size_t k = 0;
            double acc = lam[0];
            while (acc < u && k + 1 < types) acc += lam[++k];
            excite_[k] += 1.0;
            Emitted ev = mark(k);
            on_event(ev);
        }
    }

private:
    double intensity(std::size_t i) const {
        const std::size_t a = i / 4, local = i % 4;
        const auto& h = cfg_.assets[a].hawkes;
        double v = h.baseline[local];
        for (std::size_t j = 0; j < 4; ++j) v += h.excitation[local][j] * excite_[a * 4 + j];
        return v;
    }

    void decay_excitation(double dt) {
        for (std::size_t a = 0; a < states_.size(); ++a) {
            const double f = std::exp(-cfg_.assets[a].hawkes.decay * dt);
            for (std::size_t j = 0; j < 4; ++j) excite_[a * 4 + j] *= f;
        }
    }

    void refresh_top(std::size_t a) {
        auto& s = states_[a];
        const double half = 0.5 * std::exp(s.log_spread) / kBps;
        s.top = BookTop{s.mid * (1.0 - half), s.mid * (1.0 + half)};
    }

    Emitted mark(std::size_t k) {
        Emitted ev;
        ev.asset = k / 4;
        ev.type = static_cast<SimEventType>(k % 4);
        ev.t = t_;
        const auto& ac = cfg_.assets[ev.asset];
        std::normal_distribution<double> n(ac.notional_log_mean, ac.notional_log_sd);
        ev.notional = std::exp(n(rng_));
        auto& s = states_[ev.asset];
        const Nanos now = to_nanos(t_);
        s.flows.advance_to(std::max(now, s.flows.last_update()));
        switch (ev.type) {
            case SimEventType::LimitBid:
            case SimEventType::LimitAsk: {
                std::exponential_distribution<double> d(1.0 / ac.distance_mean_bps);
                ev.distance_bps = d(rng_);
                s.flows.add_limit(ev.type == SimEventType::LimitBid ? Side::Bid : Side::Ask, ev.notional,
                                  ev.distance_bps);
                break;
            }
            case SimEventType::TradeBid: s.flows.add_market(Side::Bid, ev.notional); break;
            case SimEventType::TradeAsk: s.flows.add_market(Side::Ask, ev.notional); break;
        }
        return ev;
    }

    void grid_step() {
        const double dt = cfg_.grid_dt;
        // The step from t - dt to t drifts with the imbalance observed at t - dt.
        const std::vector<double> imb = next_imbalance_;
        imbalance_at_ = imb;
        std::normal_distribution<double> n(0.0, 1.0);
        for (std::size_t a = 0; a < states_.size(); ++a) {
            const auto& ac = cfg_.assets[a];
            auto& s = states_[a];
            double drift = ac.kappa * imb[a];
            if (!cfg_.cross_kappa.empty()) {
                for (std::size_t j = 0; j < states_.size(); ++j)
                    if (j != a) drift += cfg_.cross_kappa[a][j] * imb[j];
            }
            const double spread = std::exp(s.log_spread);
            const double move_bps = drift * dt + ac.noise_per_spread * spread * std::sqrt(dt) * n(rng_);
            s.mid *= std::exp(move_bps / kBps);
            s.log_spread += ac.spread_reversion * (std::log(ac.spread_mean_bps) - s.log_spread) * dt +
                            ac.spread_vol * std::sqrt(dt) * n(rng_);
            s.log_spread = std::max(s.log_spread, std::log(ac.min_spread_bps));
            refresh_top(a);
            const Nanos now = to_nanos(t_);
            next_imbalance_[a] = imbalance_lo(s.flows.at(std::max(now, s.flows.last_update())));
        }
    }

    static Nanos to_nanos(double t) { return static_cast<Nanos>(std::llround(t * kNanosPerSecond)); }

    SimConfig cfg_;
    std::mt19937_64 rng_;
    std::vector<AssetState> states_;
    std::vector<double> excite_;
    std::vector<double> imbalance_at_;
    std::vector<double> next_imbalance_;
    double t_ = 0.0;
};

}  // namespace

std::vector<LobEvent> simulate(const SimConfig& cfg, double duration_s, SimTrace* trace) {
    Engine eng(cfg);
    std::vector<LobEvent> out;
    if (trace) {
        trace->grid_dt = cfg.grid_dt;
        trace->imbalance.assign(cfg.assets.size(), {});
        trace->mid.assign(cfg.assets.size(), {});
        trace->spread_bps.assign(cfg.assets.size(), {});
    }
    auto ns = [&](double t) { return cfg.start_ns + static_cast<Nanos>(std::llround(t * kNanosPerSecond)); };
    auto on_grid = [&](double t) {
        for (std::size_t a = 0; a < cfg.assets.size(); ++a) {
            const auto& s = eng.state(a);
            LobEvent ev;
            ev.ts_ns = ns(t);
            ev.asset = cfg.assets[a].name;
            ev.kind = EventKind::Bbo;
            ev.bid = s.top.bid;
            ev.ask = s.top.ask;
            out.push_back(std::move(ev));
            if (trace) {
                trace->mid[a].push_back(s.mid);
                trace->spread_bps[a].push_back(std::exp(s.log_spread));
            }
        }
    };
    auto on_event = [&](const Engine::Emitted& e) {
        const auto& top = eng.state(e.asset).top;
        const double mid = top.mid();
        LobEvent ev;
        ev.ts_ns = ns(e.t);
        ev.asset = cfg.assets[e.asset].name;
        switch (e.type) {
            case SimEventType::LimitBid:
                ev.kind = EventKind::LimitAdd;
                ev.side = Side::Bid;
                ev.price = top.bid - e.distance_bps * mid / kBps;
                break;
            case SimEventType::LimitAsk:
                ev.kind = EventKind::LimitAdd;
                ev.side = Side::Ask;
                ev.price = top.ask + e.distance_bps * mid / kBps;
                break;
            case SimEventType::TradeBid:
                ev.kind = EventKind::Trade;
                ev.side = Side::Bid;
                ev.price = top.bid;
                break;
            case SimEventType::TradeAsk:
                ev.kind = EventKind::Trade;
                ev.side = Side::Ask;
                ev.price = top.ask;
                break;
        }
        ev.size = e.notional / ev.price;
        out.push_back(std::move(ev));
    };
    if (trace) {
        // Record the imbalance that drives each grid step.
        auto grid_with_trace = [&](double t) {
            on_grid(t);
            if (t > 0.0)
                for (std::size_t a = 0; a < cfg.assets.size(); ++a) trace->imbalance[a].push_back(eng.last_imbalance(a));
        };
        eng.run(duration_s, on_event, grid_with_trace);
    } else {
        eng.run(duration_s, on_event, on_grid);
    }
    return out;
}

LabeledSample generate_labeled(const SimConfig& cfg, std::size_t n_obs, const LabeledLaw& law) {
    Engine eng(cfg);
    const KernelConfig& kernel = cfg.kernel;
    const OrderFilter filter;
    const double warmup = 10.0 / kernel.min_beta();
    LabeledSample out;
    out.x.resize(static_cast<Eigen::Index>(n_obs), static_cast<Eigen::Index>(kernel.feature_count()));
    out.y.resize(static_cast<Eigen::Index>(n_obs), 1);
    out.truth.reserve(n_obs);
    std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
    std::normal_distribution<double> n(0.0, 1.0);
    std::size_t filled = 0;
    auto on_event = [&](const Engine::Emitted& e) {
        if (filled >= n_obs || e.asset != 0 || e.t < warmup) return;
        if (e.type != SimEventType::LimitBid && e.type != SimEventType::LimitAsk) return;
        if (e.notional < filter.min_notional || e.distance_bps > filter.max_distance_bps) return;
        const auto& s = eng.state(0);
        const FeatureVector fv = snapshot(s.flows, s.top);
        const auto row = static_cast<Eigen::Index>(filled);
        for (std::size_t k = 0; k < fv.size(); ++k) out.x(row, static_cast<Eigen::Index>(k)) = fv.values[k];
        const dist::SkewNormalParams p{law.kappa * imbalance_lo(s.flows), law.sigma_per_spread * fv.spread(),
                                       law.alpha};
        const double b = p.b_alpha();
        out.y(row, 0) = p.mu + p.sigma * (b * std::abs(n(rng)) + std::sqrt(1.0 - b * b) * n(rng));
        out.truth.push_back(p);
        ++filled;
    };
    eng.run(std::numeric_limits<double>::infinity(), on_event, [](double) {}, [&] { return filled >= n_obs; });
    return out;
}

InjectionResult inject_spoofs(const std::vector<LobEvent>& stream, const std::vector<SpoofEpisode>& episodes) {
    InjectionResult res;
    if (episodes.empty()) {
        res.events = stream;
        return res;
    }
    std::vector<std::size_t> order(episodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return episodes[a].start_ns < episodes[b].start_ns; });

    // Price multiplier of `asset` at time t from all episodes started before t.
    auto shift = [&](const std::string& asset, Nanos t) {
        double f = 1.0;
        for (const auto& ep : episodes) {
            if (ep.asset != asset || t <= ep.start_ns) continue;
            const double life = std::max(ep.lifetime_s, 1e-9) * kNanosPerSecond;
            const double frac = std::min(1.0, static_cast<double>(t - ep.start_ns) / life);
            const double sign = ep.side == Side::Bid ? 1.0 : -1.0;
            f *= 1.0 + sign * ep.drift_bps * frac / kBps;
        }
        return f;
    };

    std::unordered_map<std::string, BookTop> tops;
    res.events.reserve(stream.size() + episodes.size() * 4);
    std::size_t next = 0;
    auto emit_due = [&](Nanos upto) {
        // Inject episodes whose start is at or before `upto`, in order.
        while (next < order.size() && episodes[order[next]].start_ns <= upto) {
            const std::size_t id = order[next++];
            const auto& ep = episodes[id];
            const BookTop top = tops.count(ep.asset) ? tops[ep.asset] : BookTop{};
            if (!top.valid()) continue;  // no quote yet: nothing to price against
            // All layers share one timestamp so per-asset ordering holds.
            Nanos ts = ep.start_ns;
            if (!res.events.empty()) {
                for (auto it = res.events.rbegin(); it != res.events.rend(); ++it) {
                    if (it->asset == ep.asset) {
                        ts = std::max(ts, it->ts_ns);
                        break;
                    }
                }
            }
            const double mid = top.mid();
            for (const auto& layer : ep.layers) {
                LobEvent ev;
                ev.ts_ns = ts;
                ev.asset = ep.asset;
                ev.kind = EventKind::LimitAdd;
                ev.side = ep.side;
                ev.price = ep.side == Side::Bid ? top.bid - layer.distance_bps * mid / kBps
                                                : top.ask + layer.distance_bps * mid / kBps;
                ev.size = layer.notional / ev.price;
                res.events.push_back(ev);
                res.labels.push_back({ts, ep.asset, ep.side, ev.notional(), layer.distance_bps, static_cast<int>(id)});
            }
        }
    };
    for (const auto& ev : stream) {
        emit_due(ev.ts_ns - 1);
        LobEvent out = ev;
        const double f = shift(ev.asset, ev.ts_ns);
        if (f != 1.0) {
            out.price *= f;
            out.bid *= f;
            out.ask *= f;
        }
        if (out.kind == EventKind::Bbo) tops[out.asset] = BookTop{out.bid, out.ask};
        res.events.push_back(std::move(out));
        emit_due(ev.ts_ns);
    }
    emit_due(std::numeric_limits<Nanos>::max());
    return res;
}

std::vector<SpoofEpisode> random_episodes(const std::vector<LobEvent>& stream, const std::string& asset,
                                          const EpisodeRecipe& r) {
    Nanos first = 0, last = 0;
    bool any = false;
    for (const auto& ev : stream) {
        if (ev.asset != asset) continue;
        if (!any) first = ev.ts_ns;
        last = ev.ts_ns;
        any = true;
    }
    std::vector<SpoofEpisode> out;
    if (!any || r.count == 0) return out;
    // Leave a margin for feature warm-up at the start and the horizon at the end.
    const double span = static_cast<double>(last - first) / kNanosPerSecond;
    const double lo = std::min(span, 5.0), hi = std::max(lo, span - 2.0);
    std::mt19937_64 rng(r.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> starts;
    for (int tries = 0; starts.size() < r.count && tries < 100000; ++tries) {
        const double s = lo + (hi - lo) * u(rng);
        if (std::all_of(starts.begin(), starts.end(), [&](double o) { return std::abs(o - s) >= r.min_gap_s; })) {
            starts.push_back(s);
        }
    }
    std::sort(starts.begin(), starts.end());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        SpoofEpisode ep;
        ep.start_ns = first + static_cast<Nanos>(std::llround(starts[i] * kNanosPerSecond));
        ep.asset = asset;
        ep.side = u(rng) < 0.5 ? Side::Bid : Side::Ask;
        ep.lifetime_s = r.lifetime_s;
        ep.drift_bps = r.drift_bps;
        for (int k = 0; k < r.layers; ++k) {
            ep.layers.push_back({r.min_notional + (r.max_notional - r.min_notional) * u(rng),
                                 r.first_distance_bps + r.layer_step_bps * k});
        }
        out.push_back(std::move(ep));
    }
    return out;
}

void write_labels(const std::string& path, const std::vector<SpoofLabel>& labels) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write labels file " + path);
    out << kLabelsCsvHeader << '\n';
    char buf[64];
    for (const auto& l : labels) {
        out << l.ts_ns << ',' << l.asset << ',' << to_string(l.side) << ',';
        auto r = std::to_chars(buf, buf + sizeof buf, l.notional);
        out.write(buf, r.ptr - buf);
        out << ',';
        r = std::to_chars(buf, buf + sizeof buf, l.distance_bps);
        out.write(buf, r.ptr - buf);
        out << ',' << l.episode_id << '\n';
    }
}

std::vector<SpoofLabel> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open labels file " + path);
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kLabelsCsvHeader) throw ParseError(1, "unexpected labels header");
    std::vector<SpoofLabel> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) throw ParseError(line_no, "labels record needs 6 fields");
        SpoofLabel l;
        auto num = [&](const std::string& s, auto& v) {
            const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError(line_no, "bad number '" + s + "'");
        };
        num(f[0], l.ts_ns);
        l.asset = f[1];
        const auto side = side_from_string(f[2]);
        if (!side) throw ParseError(line_no, "bad side '" + f[2] + "'");
        l.side = *side;
        num(f[3], l.notional);
        num(f[4], l.distance_bps);
        num(f[5], l.episode_id);
        out.push_back(std::move(l));
    }
    return out;
}

}  // namespace lobsurv
