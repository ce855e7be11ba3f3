// lobsurv command-line tool: simulate, inject, train, detect, analyze, bench.

#include "lobsurv/analytics.hpp"
#include "lobsurv/config.hpp"
#include "lobsurv/market_sim.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace lobsurv;
using nlohmann::json;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

RunConfig load_run_config(const Globals& g) {
    RunConfig cfg = g.config_path.empty() ? parse_config("") : load_config(g.config_path);
    if (g.seed) cfg.set_seed(*g.seed);
    return cfg;
}

// Explicit paths are used as given; defaults land in --out-dir.
std::string output_path(const Globals& g, const std::string& given, const std::string& fallback) {
    if (!given.empty()) return given;
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / fallback).string();
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

json latency_json(const LatencySummary& l) {
    return {{"count", l.count}, {"p50_us", l.p50_us}, {"p95_us", l.p95_us}, {"p99_us", l.p99_us},
            {"mean_us", l.mean_us}, {"max_us", l.max_us}};
}

json summary_json(const DetectSummary& s) {
    return {{"events", s.events},
            {"limit_orders", s.limit_orders},
            {"scored", s.scored},
            {"no_quote", s.no_quote},
            {"filtered_out", s.filtered_out},
            {"large", s.large},
            {"suspicious", s.suspicious},
            {"suspicious_share_of_large", s.suspicious_share_of_large()},
            {"latency", latency_json(s.latency)}};
}

// Raw feature rows of an event file, laid out as the model expects.
RowMatrix evaluation_rows(const MlpModel& model, const RunConfig& cfg, const std::string& events_path) {
    ObservationOptions oo = cfg.observation_options();
    oo.assets = model.assets;
    oo.kernel = model.kernel;
    oo.horizon_s = model.horizon_s;
    const auto set = build_observations(read_events(events_path), oo);
    if (set.observations.empty()) throw ConfigError("no usable observations in " + events_path);
    return make_dataset(set, HeadKind::Gaussian).x;
}

int cmd_simulate(const Globals& g, double duration, const std::string& output, const std::string& trace_path) {
    const RunConfig cfg = load_run_config(g);
    const double secs = duration > 0.0 ? duration : cfg.sim_duration_s;
    SimTrace trace;
    const auto events = simulate(cfg.sim, secs, trace_path.empty() ? nullptr : &trace);
    const std::string path = output_path(g, output, "events.csv.gz");
    write_events(path, events);
    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        out << "t_s,asset,mid,spread_bps,imbalance_lo\n";
        for (std::size_t a = 0; a < cfg.sim.assets.size(); ++a) {
            for (std::size_t k = 0; k < trace.mid[a].size(); ++k) {
                out << fmt(static_cast<double>(k) * trace.grid_dt) << ',' << cfg.sim.assets[a].name << ','
                    << fmt(trace.mid[a][k]) << ',' << fmt(trace.spread_bps[a][k]) << ','
                    << fmt(k < trace.imbalance[a].size() ? trace.imbalance[a][k] : 0.0) << '\n';
            }
        }
    }
    std::cout << "simulated " << events.size() << " events over " << secs << " s -> " << path << '\n';
    return 0;
}

int cmd_inject(const Globals& g, const std::string& events_path, std::string asset, std::optional<std::size_t> count,
               const std::string& output, const std::string& labels_out) {
    RunConfig cfg = load_run_config(g);
    if (asset.empty()) asset = cfg.assets.front();
    if (count) cfg.inject.count = *count;
    const auto stream = read_events(events_path);
    const auto episodes = random_episodes(stream, asset, cfg.inject);
    const auto result = inject_spoofs(stream, episodes);
    const std::string path = output_path(g, output, "events_injected.csv.gz");
    const std::string lpath = output_path(g, labels_out, "labels.csv");
    write_events(path, result.events);
    write_labels(lpath, result.labels);
    std::cout << "injected " << episodes.size() << " episodes (" << result.labels.size() << " orders) -> " << path
              << ", labels -> " << lpath << '\n';
    return 0;
}

int cmd_train(const Globals& g, const std::vector<std::string>& event_files, std::size_t labeled,
              const std::string& head_name, const std::string& model_out) {
    RunConfig cfg = load_run_config(g);
    if (!head_name.empty()) cfg.head = head_from_string(head_name);

    Dataset data;
    std::vector<std::string> assets = cfg.assets;
    if (labeled > 0) {
        if (cfg.head == HeadKind::BivariateGaussian) throw ConfigError("the labeled generator draws one target");
        const auto sample = generate_labeled(cfg.sim, labeled, LabeledLaw{});
        data = Dataset{sample.x, sample.y};
        assets = {cfg.sim.assets.front().name};
    } else {
        if (event_files.empty()) throw ConfigError("train needs --events or --labeled");
        const auto oo = cfg.observation_options();
        std::vector<Dataset> parts;
        Eigen::Index rows = 0;
        for (const auto& f : event_files) {
            const auto set = build_observations(read_events(f), oo);
            std::cout << f << ": " << set.observations.size() << " observations (" << set.filtered_out
                      << " filtered, " << set.warmup << " warm-up, " << set.unlabeled << " unlabeled)\n";
            if (set.observations.empty()) continue;
            parts.push_back(make_dataset(set, cfg.head));
            rows += parts.back().x.rows();
        }
        if (parts.empty()) throw ConfigError("no observations in the training files");
        data.x.resize(rows, parts.front().x.cols());
        data.y.resize(rows, parts.front().y.cols());
        Eigen::Index r = 0;
        for (const auto& p : parts) {
            data.x.middleRows(r, p.x.rows()) = p.x;
            data.y.middleRows(r, p.y.rows()) = p.y;
            r += p.x.rows();
        }
    }

    const std::string log_path = output_path(g, "", "train_log.csv");
    std::ofstream log(log_path);
    log << "epoch,train_nll,val_nll\n";
    TrainReport report;
    const auto model = train(data, cfg.head, cfg.train, cfg.kernel, assets, cfg.horizon_s, &report,
                             [&](const EpochRecord& e) {
                                 log << e.epoch << ',' << fmt(e.train_nll) << ',' << fmt(e.val_nll) << '\n';
                             });
    const std::string path = output_path(g, model_out, "model.json");
    save_model(model, path);
    std::cout << "trained " << to_string(cfg.head) << " head on " << report.train_rows << " rows, validated on "
              << report.val_rows << "; best epoch " << report.best_epoch << " val NLL " << report.best_val_nll
              << (report.stopped_early ? " (early stop)" : "") << " -> " << path << '\n';
    return 0;
}

int cmd_detect(const Globals& g, const std::string& model_path, const std::string& events_path,
               const std::string& labels_path, bool log_all, const std::string& alerts_out) {
    const RunConfig cfg = load_run_config(g);
    const MlpModel model = load_model(model_path);
    Detector det(model, cfg.detect_options());
    AlertLog alerts(output_path(g, alerts_out, "alerts.jsonl"));
    std::vector<SpoofVerdict> verdicts;
    EventReader reader(events_path);
    std::size_t i = 0;
    while (auto ev = reader.next()) {
        if (auto v = det.on_event(*ev, i)) {
            if (log_all || v->suspicious) alerts.append(*v);
            if (!labels_path.empty()) verdicts.push_back(std::move(*v));
        }
        ++i;
    }
    const DetectSummary s = det.summary();
    json j = summary_json(s);
    std::cout << "scored " << s.scored << " orders: " << s.large << " large, " << s.suspicious << " suspicious ("
              << 100.0 * s.suspicious_share_of_large() << "% of large); latency p50 " << s.latency.p50_us
              << " us, p99 " << s.latency.p99_us << " us\n";
    if (!labels_path.empty()) {
        const auto r = score_against_labels(verdicts, read_labels(labels_path));
        j["efficacy"] = {{"labeled", r.labeled},
                         {"labeled_scored", r.labeled_scored},
                         {"labeled_flagged", r.labeled_flagged},
                         {"flagged", r.flagged},
                         {"recall", r.recall()},
                         {"precision", r.precision()},
                         {"false_positive_rate_small", r.false_positive_rate_small()},
                         {"false_positive_rate_large", r.false_positive_rate_large()}};
        std::ofstream out(output_path(g, "", "efficacy.csv"));
        out << "labeled,labeled_flagged,flagged,recall,precision,normal_small,normal_small_flagged,normal_large,"
               "normal_large_flagged\n"
            << r.labeled << ',' << r.labeled_flagged << ',' << r.flagged << ',' << fmt(r.recall()) << ','
            << fmt(r.precision()) << ',' << r.normal_small << ',' << r.normal_small_flagged << ',' << r.normal_large
            << ',' << r.normal_large_flagged << '\n';
        std::cout << "recall " << r.recall() << ", precision " << r.precision() << ", false positives among small "
                  << r.false_positive_rate_small() << '\n';
    }
    write_json(output_path(g, "", "detect_summary.json"), j);
    return 0;
}

int cmd_pd(const Globals& g, const std::string& model_path, const std::string& events_path, const std::string& var,
           std::size_t bins, std::optional<double> lo, std::optional<double> hi, int target, const std::string& out) {
    const RunConfig cfg = load_run_config(g);
    const MlpModel model = load_model(model_path);
    const PdVariable v = pd_variable_from_string(var);
    const std::size_t n = bins > 0 ? bins : cfg.analysis.pd_bins;
    std::vector<double> edges;
    if (v == PdVariable::Spread) {
        edges = log_edges(lo.value_or(cfg.analysis.spread_lo_bps), hi.value_or(cfg.analysis.spread_hi_bps), n);
    } else {
        edges = linear_edges(lo.value_or(-cfg.analysis.imbalance_range), hi.value_or(cfg.analysis.imbalance_range), n);
    }
    const auto rows = evaluation_rows(model, cfg, events_path);
    const auto rep = partial_dependence(model, rows, v, edges, target);
    const std::string path = output_path(g, out, "pd_" + var + ".csv");
    std::ofstream f(path);
    f << "variable,bin_lo,bin_hi,count,weight,mean_bps,std_bps,sharpe\n";
    for (const auto& b : rep.bins) {
        f << var << ',' << fmt(b.lo) << ',' << fmt(b.hi) << ',' << b.count << ',' << fmt(b.weight) << ',';
        if (b.count > 0) {
            f << fmt(b.mean) << ',' << fmt(b.std) << ',' << fmt(b.sharpe) << '\n';
        } else {
            f << ",,\n";
        }
    }
    std::cout << "partial dependence on " << var << " over " << rows.rows() << " rows (" << rep.out_of_range
              << " out of range) -> " << path << '\n';
    return 0;
}

int cmd_response(const Globals& g, const std::string& model_path, const std::string& events_path,
                 std::optional<std::size_t> samples, const std::vector<double>& sizes,
                 const std::vector<double>& distances, std::optional<int> insert_asset, std::optional<int> target,
                 const std::string& out) {
    const RunConfig cfg = load_run_config(g);
    const MlpModel model = load_model(model_path);
    ResponseOptions ro = cfg.analysis.response;
    if (samples) ro.n_samples = *samples;
    if (!sizes.empty()) ro.sizes = sizes;
    if (!distances.empty()) ro.distances = distances;
    if (insert_asset) ro.insert_asset = *insert_asset;
    if (target) ro.target = *target;
    const auto rows = evaluation_rows(model, cfg, events_path);
    const auto rep = price_response(model, rows, ro);
    const std::string path = output_path(g, out, "price_response.csv");
    std::ofstream f(path);
    f << "side,size_usd,distance_bps,n,mean_diff,var,t_stat,p_value\n";
    for (const auto& c : rep.cells) {
        f << to_string(c.side) << ',' << fmt(c.size) << ',' << fmt(c.distance) << ',' << c.n << ','
          << fmt(c.mean_diff) << ',' << fmt(c.var) << ',' << (c.t_stat ? fmt(*c.t_stat) : "undefined") << ','
          << (c.p_value ? fmt(*c.p_value) : "") << '\n';
    }
    std::cout << "price response over " << ro.n_samples << " sampled instants -> " << path << '\n';
    return 0;
}

int cmd_bench(const Globals& g, const std::string& model_path, const std::string& events_path, double seconds,
              const std::string& out) {
    RunConfig cfg = load_run_config(g);
    const MlpModel model = load_model(model_path);
    std::vector<LobEvent> events;
    if (!events_path.empty()) {
        events = read_events(events_path);
    } else {
        cfg.sim.assets.resize(1);
        cfg.sim.assets.front().name = model.assets.front();
        cfg.sim.kernel = model.kernel;
        events = simulate(cfg.sim, seconds);
    }
    const auto r = run_bench(model, events, cfg.detect_options());
    const auto& l = r.summary.latency;
    std::cout << "scored " << r.summary.scored << " orders in " << r.seconds << " s (" << r.throughput
              << " orders/s)\nlatency us: p50 " << l.p50_us << "  p95 " << l.p95_us << "  p99 " << l.p99_us
              << "  max " << l.max_us << '\n';
    json j = {{"scored", r.summary.scored}, {"seconds", r.seconds}, {"throughput", r.throughput},
              {"latency", latency_json(l)}};
    write_json(output_path(g, out, "bench.json"), j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Order-flow features, probabilistic price-move model and spoofing detection"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "ini run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "seed for simulation, training and sampling");
    app.add_option("--out-dir", g.out_dir, "directory for default outputs");

    std::function<int()> run;

    auto* sim = app.add_subcommand("simulate", "simulate a synthetic event stream");
    double duration = 0.0;
    std::string sim_out, trace_out;
    sim->add_option("--duration", duration, "seconds (default: sim.duration_s)");
    sim->add_option("-o,--output", sim_out, "event file (.csv or .csv.gz)");
    sim->add_option("--trace", trace_out, "grid trace CSV (mid, spread, imbalance)");
    sim->callback([&] { run = [&] { return cmd_simulate(g, duration, sim_out, trace_out); }; });

    auto* inj = app.add_subcommand("inject", "inject layered spoof episodes with labels");
    std::string inj_events, inj_asset, inj_out, inj_labels;
    std::optional<std::size_t> inj_count;
    inj->add_option("--events", inj_events, "input event file")->required()->check(CLI::ExistingFile);
    inj->add_option("--asset", inj_asset, "asset to spoof (default: first configured)");
    inj->add_option("--count", inj_count, "number of episodes");
    inj->add_option("-o,--output", inj_out, "output event file");
    inj->add_option("--labels", inj_labels, "labels CSV");
    inj->callback([&] { run = [&] { return cmd_inject(g, inj_events, inj_asset, inj_count, inj_out, inj_labels); }; });

    auto* tr = app.add_subcommand("train", "train the probabilistic model");
    std::vector<std::string> tr_events;
    std::size_t tr_labeled = 0;
    std::string tr_head, tr_model;
    tr->add_option("--events", tr_events, "training event files, in time order")->check(CLI::ExistingFile);
    tr->add_option("--labeled", tr_labeled, "train on N draws of the labeled generator instead");
    tr->add_option("--head", tr_head, "gaussian, skew or bivariate");
    tr->add_option("--model", tr_model, "output model file");
    tr->callback([&] { run = [&] { return cmd_train(g, tr_events, tr_labeled, tr_head, tr_model); }; });

    auto* det = app.add_subcommand("detect", "score limit orders and write the alert log");
    std::string det_model, det_events, det_labels, det_alerts;
    bool det_all = false;
    det->add_option("--model", det_model)->required()->check(CLI::ExistingFile);
    det->add_option("--events", det_events)->required()->check(CLI::ExistingFile);
    det->add_option("--labels", det_labels, "ground-truth labels for recall/precision")->check(CLI::ExistingFile);
    det->add_option("--alerts", det_alerts, "alert log (JSON lines)");
    det->add_flag("--all", det_all, "log every scored order, not only suspicious ones");
    det->callback([&] { run = [&] { return cmd_detect(g, det_model, det_events, det_labels, det_all, det_alerts); }; });

    auto* an = app.add_subcommand("analyze", "model analysis");
    an->require_subcommand(1);
    auto* pd = an->add_subcommand("pd", "binned partial dependence of predicted moments");
    std::string pd_model, pd_events, pd_var = "spread", pd_out;
    std::size_t pd_bins = 0;
    std::optional<double> pd_lo, pd_hi;
    int pd_target = 0;
    pd->add_option("--model", pd_model)->required()->check(CLI::ExistingFile);
    pd->add_option("--events", pd_events)->required()->check(CLI::ExistingFile);
    pd->add_option("--variable", pd_var, "spread, imbalance_lo or imbalance_mo");
    pd->add_option("--bins", pd_bins);
    pd->add_option("--lo", pd_lo);
    pd->add_option("--hi", pd_hi);
    pd->add_option("--target", pd_target, "asset index of the bivariate head");
    pd->add_option("-o,--output", pd_out);
    pd->callback([&] {
        run = [&] { return cmd_pd(g, pd_model, pd_events, pd_var, pd_bins, pd_lo, pd_hi, pd_target, pd_out); };
    });

    auto* rs = an->add_subcommand("response", "price response to hypothetical orders");
    std::string rs_model, rs_events, rs_out;
    std::optional<std::size_t> rs_samples;
    std::vector<double> rs_sizes, rs_dist;
    std::optional<int> rs_insert, rs_target;
    rs->add_option("--model", rs_model)->required()->check(CLI::ExistingFile);
    rs->add_option("--events", rs_events)->required()->check(CLI::ExistingFile);
    rs->add_option("--samples", rs_samples, "sampled instants N");
    rs->add_option("--sizes", rs_sizes, "order sizes in USD")->delimiter(',');
    rs->add_option("--distances", rs_dist, "distances in bps")->delimiter(',');
    rs->add_option("--insert-asset", rs_insert, "feature block receiving the order");
    rs->add_option("--target", rs_target, "asset whose standardized mean is read");
    rs->add_option("-o,--output", rs_out);
    rs->callback([&] {
        run = [&] {
            return cmd_response(g, rs_model, rs_events, rs_samples, rs_sizes, rs_dist, rs_insert, rs_target, rs_out);
        };
    });

    auto* bn = app.add_subcommand("bench", "per-order scoring latency");
    std::string bn_model, bn_events, bn_out;
    double bn_seconds = 1000.0;
    bn->add_option("--model", bn_model)->required()->check(CLI::ExistingFile);
    bn->add_option("--events", bn_events, "event file (default: simulate)")->check(CLI::ExistingFile);
    bn->add_option("--seconds", bn_seconds, "simulated seconds when no event file is given");
    bn->add_option("-o,--output", bn_out);
    bn->callback([&] { run = [&] { return cmd_bench(g, bn_model, bn_events, bn_seconds, bn_out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return run ? run() : 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 3;
    } catch (const OrderingError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 3;
    } catch (const ModelLoadError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
