#pragma once

#include "json.hpp"
#include "lobsurv/preprocess.hpp"

namespace lobsurv::detail {

inline nlohmann::json to_json(const FeatureTransform& t) {
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& f : t.features) {
        feats.push_back({{"lambda", f.lambda}, {"mean", f.mean}, {"std", f.std}, {"degenerate", f.degenerate}});
    }
    return {{"fitted_on", t.fitted_on}, {"features", feats}};
}

inline FeatureTransform transform_from_json(const nlohmann::json& j) {
    FeatureTransform t;
    t.fitted_on = j.at("fitted_on").get<std::string>();
    for (const auto& f : j.at("features")) {
        FeatureScaling s;
        s.lambda = f.at("lambda").get<double>();
        s.mean = f.at("mean").get<double>();
        s.std = f.at("std").get<double>();
        s.degenerate = f.at("degenerate").get<bool>();
        t.features.push_back(s);
    }
    return t;
}

}  // namespace lobsurv::detail
