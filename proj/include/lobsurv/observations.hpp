#pragma once

#include "lobsurv/flow_features.hpp"
#include "lobsurv/lob_stream.hpp"

#include <string>
#include <vector>

namespace lobsurv {

/// One feature-sampling instant (a filter-passing LIMIT_ADD) with the realized
/// horizon move of every tracked asset.
struct LabeledObservation {
    std::size_t event_index = 0;
    Nanos sample_time = 0;
    std::string asset;
    Side order_side = Side::Bid;
    double order_notional = 0.0;
    double order_distance_bps = 0.0;
    std::vector<double> features;  // raw, concatenated over tracked assets
    std::vector<double> targets;   // bps, one per tracked asset
    bool in_warmup = false;
};

struct ObservationOptions {
    std::vector<std::string> assets;  // order defines feature concatenation
    KernelConfig kernel;
    double horizon_s = 1.0;
    OrderFilter filter;
    bool drop_warmup = true;
};

struct ObservationSet {
    std::vector<LabeledObservation> observations;
    std::size_t limit_orders = 0;
    std::size_t filtered_out = 0;
    std::size_t no_quote = 0;
    std::size_t unlabeled = 0;
    std::size_t warmup = 0;
    std::size_t rejected_bbo = 0;
};

/// Replays `events` through per-asset book trackers and flow engines and
/// returns the labelled observations, in event order. Events of assets not
/// listed in `opts.assets` are ignored.
ObservationSet build_observations(const std::vector<LobEvent>& events, const ObservationOptions& opts);

/// Per-asset pipeline state shared by the dataset builder, the detector and
/// the analysis commands.
struct AssetPipeline {
    std::string asset;
    BookTop top;
    FlowState flows;
    MidHistory mids;
};

}  // namespace lobsurv
