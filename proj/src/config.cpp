#include "lobsurv/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace lobsurv {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto t = trim(v);
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || p != t.data() + t.size()) throw ConfigError(key + ": not a number: '" + v + "'");
    return out;
}

long long to_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto t = trim(v);
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || p != t.data() + t.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
    return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
    const long long n = to_int(key, v);
    if (n < 0) throw ConfigError(key + ": must be non-negative");
    return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
    const auto t = trim(v);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(key + ": not a boolean: '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& s : to_list(v)) out.push_back(to_double(key, s));
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"run.seed", [](RunConfig& c, auto& k, auto& v) { c.set_seed(static_cast<std::uint64_t>(to_int(k, v))); }},
        {"kernel.betas", [](RunConfig& c, auto& k, auto& v) { c.kernel.betas = to_doubles(k, v); }},
        {"kernel.etas", [](RunConfig& c, auto& k, auto& v) { c.kernel.etas = to_doubles(k, v); }},
        {"data.assets", [](RunConfig& c, auto&, auto& v) { c.assets = to_list(v); }},
        {"data.horizon_s", [](RunConfig& c, auto& k, auto& v) { c.horizon_s = to_double(k, v); }},
        {"data.min_notional", [](RunConfig& c, auto& k, auto& v) { c.filter.min_notional = to_double(k, v); }},
        {"data.max_distance_bps", [](RunConfig& c, auto& k, auto& v) { c.filter.max_distance_bps = to_double(k, v); }},
        {"data.drop_warmup", [](RunConfig& c, auto& k, auto& v) { c.drop_warmup = to_bool(k, v); }},
        {"train.head", [](RunConfig& c, auto&, auto& v) { c.head = head_from_string(trim(v)); }},
        {"train.batch_size", [](RunConfig& c, auto& k, auto& v) { c.train.batch_size = static_cast<int>(to_int(k, v)); }},
        {"train.learning_rate", [](RunConfig& c, auto& k, auto& v) { c.train.learning_rate = to_double(k, v); }},
        {"train.max_epochs", [](RunConfig& c, auto& k, auto& v) { c.train.max_epochs = static_cast<int>(to_int(k, v)); }},
        {"train.patience", [](RunConfig& c, auto& k, auto& v) { c.train.patience = static_cast<int>(to_int(k, v)); }},
        {"train.hidden", [](RunConfig& c, auto& k, auto& v) { c.train.hidden = static_cast<int>(to_int(k, v)); }},
        {"train.train_fraction", [](RunConfig& c, auto& k, auto& v) { c.train.train_fraction = to_double(k, v); }},
        {"detect.q_notional", [](RunConfig& c, auto& k, auto& v) { c.detect.q_notional = to_double(k, v); }},
        {"detect.bona_fide_delta_bps",
         [](RunConfig& c, auto& k, auto& v) { c.detect.bona_fide_delta_bps = to_double(k, v); }},
        {"detect.maker_fee_bps", [](RunConfig& c, auto& k, auto& v) { c.detect.maker_fee_bps = to_double(k, v); }},
        {"detect.taker_fee_bps", [](RunConfig& c, auto& k, auto& v) { c.detect.taker_fee_bps = to_double(k, v); }},
        {"detect.large_threshold", [](RunConfig& c, auto& k, auto& v) { c.detect.large_threshold = to_double(k, v); }},
        {"sim.duration_s", [](RunConfig& c, auto& k, auto& v) { c.sim_duration_s = to_double(k, v); }},
        {"sim.grid_dt", [](RunConfig& c, auto& k, auto& v) { c.sim.grid_dt = to_double(k, v); }},
        {"sim.start_ns", [](RunConfig& c, auto& k, auto& v) { c.sim.start_ns = to_int(k, v); }},
        {"sim.cross_kappa", [](RunConfig& c, auto& k, auto& v) {
             // Single value for every off-diagonal pair; applied once assets are known.
             const double x = to_double(k, v);
             c.sim.cross_kappa = {{x}};
         }},
        {"inject.count", [](RunConfig& c, auto& k, auto& v) { c.inject.count = to_count(k, v); }},
        {"inject.layers", [](RunConfig& c, auto& k, auto& v) { c.inject.layers = static_cast<int>(to_int(k, v)); }},
        {"inject.min_notional", [](RunConfig& c, auto& k, auto& v) { c.inject.min_notional = to_double(k, v); }},
        {"inject.max_notional", [](RunConfig& c, auto& k, auto& v) { c.inject.max_notional = to_double(k, v); }},
        {"inject.first_distance_bps",
         [](RunConfig& c, auto& k, auto& v) { c.inject.first_distance_bps = to_double(k, v); }},
        {"inject.layer_step_bps", [](RunConfig& c, auto& k, auto& v) { c.inject.layer_step_bps = to_double(k, v); }},
        {"inject.lifetime_s", [](RunConfig& c, auto& k, auto& v) { c.inject.lifetime_s = to_double(k, v); }},
        {"inject.drift_bps", [](RunConfig& c, auto& k, auto& v) { c.inject.drift_bps = to_double(k, v); }},
        {"inject.min_gap_s", [](RunConfig& c, auto& k, auto& v) { c.inject.min_gap_s = to_double(k, v); }},
        {"analysis.pd_bins", [](RunConfig& c, auto& k, auto& v) { c.analysis.pd_bins = to_count(k, v); }},
        {"analysis.spread_lo_bps", [](RunConfig& c, auto& k, auto& v) { c.analysis.spread_lo_bps = to_double(k, v); }},
        {"analysis.spread_hi_bps", [](RunConfig& c, auto& k, auto& v) { c.analysis.spread_hi_bps = to_double(k, v); }},
        {"analysis.imbalance_range",
         [](RunConfig& c, auto& k, auto& v) { c.analysis.imbalance_range = to_double(k, v); }},
        {"analysis.response_sizes", [](RunConfig& c, auto& k, auto& v) { c.analysis.response.sizes = to_doubles(k, v); }},
        {"analysis.response_distances",
         [](RunConfig& c, auto& k, auto& v) { c.analysis.response.distances = to_doubles(k, v); }},
        {"analysis.response_samples",
         [](RunConfig& c, auto& k, auto& v) { c.analysis.response.n_samples = to_count(k, v); }},
        {"analysis.insert_asset",
         [](RunConfig& c, auto& k, auto& v) { c.analysis.response.insert_asset = static_cast<int>(to_int(k, v)); }},
        {"analysis.target", [](RunConfig& c, auto& k, auto& v) { c.analysis.response.target = static_cast<int>(to_int(k, v)); }},
    };
    return table;
}

using AssetSetter = std::function<void(AssetSimConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, AssetSetter>& asset_setters() {
    static const std::map<std::string, AssetSetter> table = {
        {"initial_mid", [](AssetSimConfig& a, auto& k, auto& v) { a.initial_mid = to_double(k, v); }},
        {"kappa", [](AssetSimConfig& a, auto& k, auto& v) { a.kappa = to_double(k, v); }},
        {"noise_per_spread", [](AssetSimConfig& a, auto& k, auto& v) { a.noise_per_spread = to_double(k, v); }},
        {"spread_mean_bps", [](AssetSimConfig& a, auto& k, auto& v) { a.spread_mean_bps = to_double(k, v); }},
        {"spread_reversion", [](AssetSimConfig& a, auto& k, auto& v) { a.spread_reversion = to_double(k, v); }},
        {"spread_vol", [](AssetSimConfig& a, auto& k, auto& v) { a.spread_vol = to_double(k, v); }},
        {"min_spread_bps", [](AssetSimConfig& a, auto& k, auto& v) { a.min_spread_bps = to_double(k, v); }},
        {"notional_log_mean", [](AssetSimConfig& a, auto& k, auto& v) { a.notional_log_mean = to_double(k, v); }},
        {"notional_log_sd", [](AssetSimConfig& a, auto& k, auto& v) { a.notional_log_sd = to_double(k, v); }},
        {"distance_mean_bps", [](AssetSimConfig& a, auto& k, auto& v) { a.distance_mean_bps = to_double(k, v); }},
        {"baseline", [](AssetSimConfig& a, auto& k, auto& v) {
             const auto xs = to_doubles(k, v);
             if (xs.size() != 4) throw ConfigError(k + ": needs 4 values");
             std::copy(xs.begin(), xs.end(), a.hawkes.baseline.begin());
         }},
        {"self_excitation", [](AssetSimConfig& a, auto& k, auto& v) {
             const double x = to_double(k, v);
             for (int i = 0; i < 4; ++i) a.hawkes.excitation[i][i] = x;
         }},
        {"cross_excitation", [](AssetSimConfig& a, auto& k, auto& v) {
             // Bid/ask coupling within the limit block and within the trade block.
             const double x = to_double(k, v);
             a.hawkes.excitation[0][1] = a.hawkes.excitation[1][0] = x;
             a.hawkes.excitation[2][3] = a.hawkes.excitation[3][2] = x;
         }},
        {"decay", [](AssetSimConfig& a, auto& k, auto& v) { a.hawkes.decay = to_double(k, v); }},
    };
    return table;
}

}  // namespace

void RunConfig::set_seed(std::uint64_t s) {
    seed = s;
    train.seed = s;
    sim.seed = s;
    inject.seed = s;
    analysis.response.seed = s;
}

ObservationOptions RunConfig::observation_options() const {
    ObservationOptions o;
    o.assets = assets;
    o.kernel = kernel;
    o.horizon_s = horizon_s;
    o.filter = filter;
    o.drop_warmup = drop_warmup;
    return o;
}

DetectOptions RunConfig::detect_options() const {
    DetectOptions o;
    o.filter = filter;
    o.params = detect;
    return o;
}

RunConfig parse_config(std::string_view text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    RunConfig cfg;
    std::map<std::string, AssetSimConfig> overrides;
    for (const auto& [section, body] : tree) {
        if (section.rfind("asset.", 0) == 0) {
            const std::string name = section.substr(6);
            AssetSimConfig& a = overrides[name];
            a.name = name;
            for (const auto& [key, value] : body) {
                auto it = asset_setters().find(key);
                if (it == asset_setters().end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
                it->second(a, section + "." + key, value.data());
            }
            continue;
        }
        if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside of a section");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            auto it = setters().find(full);
            if (it == setters().end()) throw ConfigError("unknown config key '" + full + "'");
            it->second(cfg, full, value.data());
        }
    }

    if (cfg.assets.empty()) throw ConfigError("data.assets must name at least one asset");
    cfg.kernel.validate();
    cfg.train.validate();
    cfg.sim.kernel = cfg.kernel;
    const double cross = cfg.sim.cross_kappa.empty() ? 0.0 : cfg.sim.cross_kappa[0][0];
    cfg.sim.assets.clear();
    for (const auto& name : cfg.assets) {
        auto it = overrides.find(name);
        AssetSimConfig a = it != overrides.end() ? it->second : AssetSimConfig{};
        a.name = name;
        cfg.sim.assets.push_back(a);
    }
    for (const auto& [name, a] : overrides) {
        if (std::find(cfg.assets.begin(), cfg.assets.end(), name) == cfg.assets.end())
            throw ConfigError("[asset." + name + "] is not listed in data.assets");
    }
    cfg.sim.cross_kappa.clear();
    if (cross != 0.0) {
        const std::size_t n = cfg.assets.size();
        cfg.sim.cross_kappa.assign(n, std::vector<double>(n, cross));
        for (std::size_t i = 0; i < n; ++i) cfg.sim.cross_kappa[i][i] = 0.0;
    }
    cfg.sim.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace lobsurv
