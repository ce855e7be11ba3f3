#include "lobsurv/analytics.hpp"
#include "lobsurv/config.hpp"
#include "lobsurv/dist_math.hpp"
#include "lobsurv/market_sim.hpp"
#include "lobsurv/preprocess.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace lobsurv;

namespace {

std::vector<double> row_vector(const Eigen::Ref<const Eigen::VectorXd>& x) { return {x.data(), x.data() + x.size()}; }

py::dict theta_dict(const Theta& t) {
    py::dict d;
    d["kind"] = to_string(t.kind);
    d["mu"] = t.mu;
    d["sigma"] = t.sigma;
    if (t.kind == HeadKind::SkewGaussian) d["alpha"] = t.alpha;
    if (t.kind == HeadKind::BivariateGaussian) {
        d["mu2"] = t.mu2;
        d["sigma2"] = t.sigma2;
        d["rho"] = t.rho;
    }
    return d;
}

py::dict verdict_dict(const SpoofVerdict& v) {
    py::dict d;
    d["event_index"] = v.event_index;
    d["ts_ns"] = v.ts_ns;
    d["asset"] = v.asset;
    d["side"] = std::string(to_string(v.side));
    d["price"] = v.price;
    d["notional"] = v.notional;
    d["distance_bps"] = v.distance_bps;
    d["delta_c"] = v.delta_c;
    d["large"] = v.large;
    d["suspicious"] = v.suspicious;
    d["theta_plus"] = theta_dict(v.theta_plus);
    d["theta_zero"] = theta_dict(v.theta_zero);
    d["latency_ns"] = v.latency_ns;
    return d;
}

py::dict latency_dict(const LatencySummary& l) {
    py::dict d;
    d["count"] = l.count;
    d["p50_us"] = l.p50_us;
    d["p95_us"] = l.p95_us;
    d["p99_us"] = l.p99_us;
    d["mean_us"] = l.mean_us;
    d["max_us"] = l.max_us;
    return d;
}

py::dict summary_dict(const DetectSummary& s) {
    py::dict d;
    d["events"] = s.events;
    d["limit_orders"] = s.limit_orders;
    d["scored"] = s.scored;
    d["no_quote"] = s.no_quote;
    d["filtered_out"] = s.filtered_out;
    d["large"] = s.large;
    d["suspicious"] = s.suspicious;
    d["latency"] = latency_dict(s.latency);
    return d;
}

dist::SkewNormalParams sn(double mu, double sigma, double alpha) { return {mu, sigma, alpha}; }

}  // namespace

PYBIND11_MODULE(_lobsurv, m) {
    m.doc() = "Order-flow features, probabilistic price-move model and spoofing detection";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<OrderingError>(m, "OrderingError", PyExc_ValueError);
    py::register_exception<ClockSkewError>(m, "ClockSkewError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ModelLoadError>(m, "ModelLoadError", PyExc_RuntimeError);

    py::enum_<Side>(m, "Side").value("BID", Side::Bid).value("ASK", Side::Ask);
    py::enum_<EventKind>(m, "EventKind")
        .value("LIMIT_ADD", EventKind::LimitAdd)
        .value("TRADE", EventKind::Trade)
        .value("BBO", EventKind::Bbo);
    py::enum_<HeadKind>(m, "HeadKind")
        .value("GAUSSIAN", HeadKind::Gaussian)
        .value("SKEW", HeadKind::SkewGaussian)
        .value("BIVARIATE", HeadKind::BivariateGaussian);

    // Streams
    py::class_<LobEvent>(m, "LobEvent")
        .def(py::init<>())
        .def_readwrite("ts_ns", &LobEvent::ts_ns)
        .def_readwrite("asset", &LobEvent::asset)
        .def_readwrite("kind", &LobEvent::kind)
        .def_readwrite("side", &LobEvent::side)
        .def_readwrite("price", &LobEvent::price)
        .def_readwrite("size", &LobEvent::size)
        .def_readwrite("bid", &LobEvent::bid)
        .def_readwrite("ask", &LobEvent::ask)
        .def("notional", &LobEvent::notional)
        .def("__repr__", [](const LobEvent& e) { return "<LobEvent " + format_event(e) + ">"; });
    py::class_<BookTop>(m, "BookTop")
        .def(py::init<double, double>(), py::arg("bid"), py::arg("ask"))
        .def_readwrite("bid", &BookTop::bid)
        .def_readwrite("ask", &BookTop::ask)
        .def("mid", &BookTop::mid)
        .def("spread_bps", &BookTop::spread_bps);
    m.def("parse_event", &parse_event, py::arg("line"), py::arg("line_no") = 0);
    m.def("format_event", &format_event);
    m.def("read_events", &read_events, py::arg("path"));
    m.def("write_events", &write_events, py::arg("path"), py::arg("events"));
    m.def("compute_distance", &compute_distance, py::arg("order"), py::arg("top"));

    // Features
    py::class_<KernelConfig>(m, "KernelConfig")
        .def(py::init<>())
        .def_readwrite("betas", &KernelConfig::betas)
        .def_readwrite("etas", &KernelConfig::etas)
        .def("feature_count", &KernelConfig::feature_count);
    m.def("feature_names", &feature_names, py::arg("kernel"), py::arg("asset"));
    py::class_<FlowState>(m, "FlowState")
        .def(py::init<KernelConfig>(), py::arg("kernel") = KernelConfig{})
        .def("advance_to", &FlowState::advance_to)
        .def("decay", &FlowState::decay)
        .def("add_limit", &FlowState::add_limit, py::arg("side"), py::arg("notional"), py::arg("distance_bps"))
        .def("add_market", &FlowState::add_market, py::arg("side"), py::arg("notional"))
        .def("limit", &FlowState::limit)
        .def("market", &FlowState::market)
        .def("cells", [](const FlowState& s) { return std::vector<double>(s.cells().begin(), s.cells().end()); })
        .def("snapshot", [](const FlowState& s, const BookTop& top) { return snapshot(s, top).values; })
        .def("imbalance_lo", [](const FlowState& s) { return imbalance_lo(s); })
        .def("imbalance_mo", [](const FlowState& s) { return imbalance_mo(s); });

    // Distributions
    m.def("owens_t", &dist::owens_t, py::arg("h"), py::arg("a"));
    m.def("sn_cdf", [](double mu, double sigma, double alpha, double x) { return dist::sn_cdf(sn(mu, sigma, alpha), x); },
          py::arg("mu"), py::arg("sigma"), py::arg("alpha"), py::arg("x"));
    m.def("sn_logpdf",
          [](double mu, double sigma, double alpha, double x) { return dist::sn_logpdf(sn(mu, sigma, alpha), x); },
          py::arg("mu"), py::arg("sigma"), py::arg("alpha"), py::arg("x"));
    m.def(
        "tail_moments",
        [](double mu, double sigma, double alpha, double x) {
            const auto t = alpha == 0.0 ? dist::gaussian_tail_moments(mu, sigma, x)
                                        : dist::sn_tail_moments(sn(mu, sigma, alpha), x);
            py::dict d;
            d["p_below"] = t.p_below;
            d["p_above"] = t.p_above;
            d["mean_below"] = t.mean_below;
            d["mean_above"] = t.mean_above;
            return d;
        },
        py::arg("mu"), py::arg("sigma"), py::arg("alpha"), py::arg("x"));

    // Preprocessing
    m.def("boxcox", &boxcox, py::arg("x"), py::arg("lam"));
    m.def(
        "fit_lambda", [](const std::vector<double>& x) { return fit_lambda(x).lambda; }, py::arg("x"));

    // Model
    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("hidden", &TrainConfig::hidden)
        .def_readwrite("train_fraction", &TrainConfig::train_fraction);
    py::class_<MlpModel>(m, "Model")
        .def_readonly("assets", &MlpModel::assets)
        .def_readonly("feature_names", &MlpModel::feature_names)
        .def_readonly("fingerprint", &MlpModel::fingerprint)
        .def_readonly("horizon_s", &MlpModel::horizon_s)
        .def_property_readonly("head", [](const MlpModel& mm) { return mm.net.head; })
        .def("predict", [](const MlpModel& mm, const Eigen::Ref<const Eigen::VectorXd>& x) {
            return theta_dict(mm.predict(row_vector(x)));
        })
        .def("save", [](const MlpModel& mm, const std::string& path) { save_model(mm, path); })
        .def("to_json", [](const MlpModel& mm) { return model_to_json(mm); });
    m.def("load_model", &load_model, py::arg("path"));
    m.def("model_from_json", [](const std::string& s) { return model_from_json(s); });
    m.def(
        "train",
        [](const RowMatrix& x, const RowMatrix& y, HeadKind head, const TrainConfig& cfg, const KernelConfig& kernel,
           const std::vector<std::string>& assets, double horizon_s) {
            TrainReport rep;
            MlpModel model;
            {
                py::gil_scoped_release release;
                model = train(Dataset{x, y}, head, cfg, kernel, assets, horizon_s, &rep);
            }
            py::dict r;
            r["best_epoch"] = rep.best_epoch;
            r["best_val_nll"] = rep.best_val_nll;
            r["epochs"] = rep.epochs.size();
            r["stopped_early"] = rep.stopped_early;
            return py::make_tuple(model, r);
        },
        py::arg("x"), py::arg("y"), py::arg("head") = HeadKind::SkewGaussian, py::arg("config") = TrainConfig{},
        py::arg("kernel") = KernelConfig{}, py::arg("assets") = std::vector<std::string>{"BTC-USD"},
        py::arg("horizon_s") = 1.0);

    // Costs
    py::class_<SpoofScenario>(m, "SpoofScenario")
        .def(py::init<>())
        .def_readwrite("bid", &SpoofScenario::bid)
        .def_readwrite("ask", &SpoofScenario::ask)
        .def_readwrite("delta_b_bps", &SpoofScenario::delta_b_bps)
        .def_readwrite("delta_a_bps", &SpoofScenario::delta_a_bps)
        .def_readwrite("Q_notional", &SpoofScenario::Q_notional)
        .def_readwrite("q_notional", &SpoofScenario::q_notional)
        .def_readwrite("maker_fee_bps", &SpoofScenario::maker_fee_bps)
        .def_readwrite("taker_fee_bps", &SpoofScenario::taker_fee_bps);
    m.def(
        "expected_cost_sell_side_spoof",
        [](const SpoofScenario& s, double mu, double sigma, double alpha) {
            return expected_cost_sell_side_spoof(s, sn(mu, sigma, alpha));
        },
        py::arg("scenario"), py::arg("mu"), py::arg("sigma"), py::arg("alpha") = 0.0);
    m.def(
        "expected_cost_buy_side_spoof",
        [](const SpoofScenario& s, double mu, double sigma, double alpha) {
            return expected_cost_buy_side_spoof(s, sn(mu, sigma, alpha));
        },
        py::arg("scenario"), py::arg("mu"), py::arg("sigma"), py::arg("alpha") = 0.0);

    // Simulation
    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("kernel", &SimConfig::kernel)
        .def_readwrite("grid_dt", &SimConfig::grid_dt)
        .def_property(
            "kappa", [](const SimConfig& c) { return c.assets.front().kappa; },
            [](SimConfig& c, double k) { c.assets.front().kappa = k; });
    m.def(
        "simulate", [](const SimConfig& cfg, double duration) { return simulate(cfg, duration); }, py::arg("config"),
        py::arg("duration_s"));
    m.def(
        "generate_labeled",
        [](const SimConfig& cfg, std::size_t n, double kappa, double sigma_per_spread, double alpha) {
            auto s = generate_labeled(cfg, n, LabeledLaw{kappa, sigma_per_spread, alpha});
            Eigen::MatrixXd truth(static_cast<Eigen::Index>(s.truth.size()), 3);
            for (std::size_t i = 0; i < s.truth.size(); ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                truth(r, 0) = s.truth[i].mu;
                truth(r, 1) = s.truth[i].sigma;
                truth(r, 2) = s.truth[i].alpha;
            }
            return py::make_tuple(s.x, s.y, truth);
        },
        py::arg("config"), py::arg("n"), py::arg("kappa") = 2.0, py::arg("sigma_per_spread") = 1.0,
        py::arg("alpha") = 3.0);
    py::class_<SpoofLabel>(m, "SpoofLabel")
        .def_readonly("ts_ns", &SpoofLabel::ts_ns)
        .def_readonly("asset", &SpoofLabel::asset)
        .def_readonly("side", &SpoofLabel::side)
        .def_readonly("notional", &SpoofLabel::notional)
        .def_readonly("distance_bps", &SpoofLabel::distance_bps)
        .def_readonly("episode_id", &SpoofLabel::episode_id);
    m.def(
        "inject_random_spoofs",
        [](const std::vector<LobEvent>& events, const std::string& asset, std::size_t count, std::uint64_t seed) {
            EpisodeRecipe r;
            r.count = count;
            r.seed = seed;
            auto res = inject_spoofs(events, random_episodes(events, asset, r));
            return py::make_tuple(res.events, res.labels);
        },
        py::arg("events"), py::arg("asset") = "BTC-USD", py::arg("count") = 20, py::arg("seed") = 7);
    m.def("read_labels", &read_labels);
    m.def("write_labels", &write_labels);

    // Observations and analytics
    m.def(
        "build_dataset",
        [](const std::vector<LobEvent>& events, const std::vector<std::string>& assets, const KernelConfig& kernel,
           double horizon_s, HeadKind head) {
            ObservationOptions o;
            o.assets = assets;
            o.kernel = kernel;
            o.horizon_s = horizon_s;
            const auto d = make_dataset(build_observations(events, o), head);
            return py::make_tuple(d.x, d.y);
        },
        py::arg("events"), py::arg("assets") = std::vector<std::string>{"BTC-USD"}, py::arg("kernel") = KernelConfig{},
        py::arg("horizon_s") = 1.0, py::arg("head") = HeadKind::SkewGaussian);
    m.def(
        "detect",
        [](const MlpModel& model, const std::vector<LobEvent>& events, double large_threshold) {
            DetectOptions o;
            o.params.large_threshold = large_threshold;
            py::list verdicts;
            const auto s = run_detection(model, events, o, [&](const SpoofVerdict& v) { verdicts.append(verdict_dict(v)); });
            return py::make_tuple(verdicts, summary_dict(s));
        },
        py::arg("model"), py::arg("events"), py::arg("large_threshold") = 4500.0);
    m.def(
        "bench",
        [](const MlpModel& model, const std::vector<LobEvent>& events) {
            const auto r = run_bench(model, events);
            py::dict d = latency_dict(r.summary.latency);
            d["throughput"] = r.throughput;
            d["seconds"] = r.seconds;
            return d;
        },
        py::arg("model"), py::arg("events"));
    m.def(
        "partial_dependence",
        [](const MlpModel& model, const RowMatrix& rows, const std::string& variable, const std::vector<double>& edges) {
            const auto rep = partial_dependence(model, rows, pd_variable_from_string(variable), edges);
            py::list out;
            for (const auto& b : rep.bins) {
                py::dict d;
                d["lo"] = b.lo;
                d["hi"] = b.hi;
                d["count"] = b.count;
                d["weight"] = b.weight;
                if (b.count > 0) {
                    d["mean"] = b.mean;
                    d["std"] = b.std;
                    d["sharpe"] = b.sharpe;
                }
                out.append(d);
            }
            return out;
        },
        py::arg("model"), py::arg("rows"), py::arg("variable"), py::arg("edges"));
    m.def("log_edges", &log_edges);
    m.def(
        "price_response",
        [](const MlpModel& model, const RowMatrix& rows, const std::vector<double>& sizes,
           const std::vector<double>& distances, std::size_t n, std::uint64_t seed) {
            ResponseOptions o;
            o.sizes = sizes;
            o.distances = distances;
            o.n_samples = n;
            o.seed = seed;
            const auto rep = price_response(model, rows, o);
            py::list out;
            for (const auto& c : rep.cells) {
                py::dict d;
                d["side"] = std::string(to_string(c.side));
                d["size"] = c.size;
                d["distance"] = c.distance;
                d["n"] = c.n;
                d["mean_diff"] = c.mean_diff;
                d["var"] = c.var;
                d["t_stat"] = c.t_stat ? py::cast(*c.t_stat) : py::none();
                d["p_value"] = c.p_value ? py::cast(*c.p_value) : py::none();
                out.append(d);
            }
            return out;
        },
        py::arg("model"), py::arg("rows"), py::arg("sizes") = ResponseOptions{}.sizes,
        py::arg("distances") = ResponseOptions{}.distances, py::arg("n") = 10, py::arg("seed") = 42);
    m.def(
        "check_config", [](const std::string& text) { parse_config(text); }, py::arg("text"),
        "Validates ini run-configuration text; raises ConfigError.");
}
