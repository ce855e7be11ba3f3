#include "lobsurv/observations.hpp"

#include <cmath>

namespace lobsurv {

ObservationSet build_observations(const std::vector<LobEvent>& events, const ObservationOptions& opts) {
    if (opts.assets.empty()) throw ConfigError("at least one asset is required");
    opts.kernel.validate();

    std::vector<AssetPipeline> pipes;
    for (const auto& a : opts.assets) pipes.push_back(AssetPipeline{a, BookTop{}, FlowState(opts.kernel), MidHistory{}});
    auto find = [&](const std::string& asset) -> AssetPipeline* {
        for (auto& p : pipes) {
            if (p.asset == asset) return &p;
        }
        return nullptr;
    };

    ObservationSet out;
    std::vector<std::string> warnings;
    bool have_start = false;
    Nanos start = 0;
    const Nanos warmup_ns = static_cast<Nanos>(std::llround(10.0 / opts.kernel.min_beta() * kNanosPerSecond));

    for (std::size_t i = 0; i < events.size(); ++i) {
        const LobEvent& ev = events[i];
        AssetPipeline* pipe = find(ev.asset);
        if (pipe == nullptr) continue;
        if (!have_start) {
            have_start = true;
            start = ev.ts_ns;
        }
        pipe->mids.observe(ev.ts_ns);

        switch (ev.kind) {
            case EventKind::Bbo: {
                const std::size_t before = warnings.size();
                pipe->top = track_book(ev, pipe->top, &warnings);
                if (warnings.size() != before) {
                    ++out.rejected_bbo;
                } else {
                    pipe->mids.push(ev.ts_ns, pipe->top.mid());
                }
                break;
            }
            case EventKind::Trade:
                pipe->flows.advance_to(ev.ts_ns);
                pipe->flows.add_market(*ev.side, ev.notional());
                break;
            case EventKind::LimitAdd: {
                ++out.limit_orders;
                if (!pipe->top.valid()) {
                    ++out.no_quote;
                    break;
                }
                const double delta = compute_distance(ev, pipe->top);
                const double notional = ev.notional();
                if (!opts.filter.passes(notional, delta)) {
                    ++out.filtered_out;
                    break;
                }
                pipe->flows.advance_to(ev.ts_ns);
                pipe->flows.add_limit(*ev.side, notional, delta);

                bool quoted = true;
                for (const auto& p : pipes) quoted = quoted && p.top.valid();
                if (!quoted) {
                    ++out.no_quote;
                    break;
                }
                LabeledObservation obs;
                obs.event_index = i;
                obs.sample_time = ev.ts_ns;
                obs.asset = ev.asset;
                obs.order_side = *ev.side;
                obs.order_notional = notional;
                obs.order_distance_bps = delta;
                obs.in_warmup = ev.ts_ns < start + warmup_ns;
                obs.features.reserve(pipes.size() * opts.kernel.feature_count());
                for (const auto& p : pipes) {
                    obs.features.push_back(p.top.spread_bps());
                    if (&p == pipe) {
                        auto cells = p.flows.cells();
                        obs.features.insert(obs.features.end(), cells.begin(), cells.end());
                    } else {
                        // Other assets are decayed to the sampling instant on a copy.
                        FlowState other = p.flows.started() ? p.flows.at(std::max(ev.ts_ns, p.flows.last_update()))
                                                            : p.flows;
                        auto cells = other.cells();
                        obs.features.insert(obs.features.end(), cells.begin(), cells.end());
                    }
                }
                out.observations.push_back(std::move(obs));
                break;
            }
        }
    }

    std::vector<LabeledObservation> kept;
    kept.reserve(out.observations.size());
    for (auto& obs : out.observations) {
        if (obs.in_warmup && opts.drop_warmup) {
            ++out.warmup;
            continue;
        }
        bool labeled = true;
        obs.targets.reserve(pipes.size());
        for (const auto& p : pipes) {
            auto y = label_target(obs.sample_time, opts.horizon_s, p.mids);
            if (!y) {
                labeled = false;
                break;
            }
            obs.targets.push_back(*y);
        }
        if (!labeled) {
            ++out.unlabeled;
            continue;
        }
        kept.push_back(std::move(obs));
    }
    out.observations = std::move(kept);
    return out;
}

}  // namespace lobsurv
