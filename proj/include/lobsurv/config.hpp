#pragma once

#include "lobsurv/analytics.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace lobsurv {

struct AnalysisConfig {
    std::size_t pd_bins = 20;
    double spread_lo_bps = 0.1;
    double spread_hi_bps = 10.0;
    double imbalance_range = 3.0;  // imbalance bins span [-range, range]
    ResponseOptions response;
};

/// Everything a CLI run needs. Sections of the ini file map onto the members:
/// [run] [kernel] [data] [train] [detect] [sim] [asset.NAME] [inject] [analysis].
struct RunConfig {
    std::uint64_t seed = 42;
    KernelConfig kernel;
    std::vector<std::string> assets{"BTC-USD"};
    double horizon_s = 1.0;
    OrderFilter filter;
    bool drop_warmup = true;
    HeadKind head = HeadKind::SkewGaussian;
    TrainConfig train;
    DetectionParams detect;
    SimConfig sim;
    double sim_duration_s = 600.0;
    EpisodeRecipe inject;
    AnalysisConfig analysis;

    /// Propagates the run seed to training, simulation, injection and sampling.
    void set_seed(std::uint64_t s);
    ObservationOptions observation_options() const;
    DetectOptions detect_options() const;
};

/// Parses ini text. Unknown sections or keys and malformed values throw
/// ConfigError. Lists are comma separated.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

}  // namespace lobsurv
