#pragma once

#include "lobsurv/types.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lobsurv {

/// CSV header of the event file format.
inline constexpr std::string_view kEventCsvHeader = "ts_ns,asset,kind,side,price,size,bid,ask";

/// Parse one CSV record `ts_ns,asset,kind,side,price,size,bid,ask`.
/// Trailing empty columns may be omitted. Throws ParseError for malformed
/// records and OrderingError for a crossed BBO.
LobEvent parse_event(std::string_view line, std::size_t line_no = 0);

/// Inverse of parse_event; shortest round-trip formatting of reals.
std::string format_event(const LobEvent& ev);

/// Streaming reader over a (optionally gzip-compressed) event file.
/// Enforces per-asset non-decreasing timestamps.
class EventReader {
public:
    explicit EventReader(const std::string& path);
    ~EventReader();
    EventReader(const EventReader&) = delete;
    EventReader& operator=(const EventReader&) = delete;

    /// Next event, or nullopt at end of file.
    std::optional<LobEvent> next();
    std::size_t line_number() const { return line_no_; }

private:
    bool read_line(std::string& out);

    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::size_t line_no_ = 0;
    std::unordered_map<std::string, Nanos> last_ts_;
};

std::vector<LobEvent> read_events(const std::string& path);

/// Writes the CSV format; gzip when `path` ends in ".gz".
void write_events(const std::string& path, const std::vector<LobEvent>& events);

/// Apply one event to the top of book. BBO replaces the top; other kinds leave
/// it unchanged. A crossed BBO is rejected: the previous top is returned and a
/// warning is appended to `warnings` when provided.
BookTop track_book(const LobEvent& ev, const BookTop& top, std::vector<std::string>* warnings = nullptr);

/// Distance of a LIMIT_ADD from the same-side best quote, in bps of mid.
/// Orders at or inside the touch get 0.
double compute_distance(const LobEvent& order, const BookTop& top);

/// Mid-price history of one asset, for horizon labelling.
class MidHistory {
public:
    void push(Nanos ts, double mid);
    /// Marks the last timestamp observed in the stream (any event kind).
    void observe(Nanos ts) { end_ts_ = std::max(end_ts_, ts); }

    /// Mid of the last BBO at or before `ts`.
    std::optional<double> mid_at(Nanos ts) const;
    Nanos end_ts() const { return end_ts_; }
    std::size_t size() const { return ts_.size(); }

private:
    std::vector<Nanos> ts_;
    std::vector<double> mid_;
    Nanos end_ts_ = std::numeric_limits<Nanos>::min();
};

/// Realized move of the mid over [t, t+horizon] in bps of mid(t), sampled
/// last-tick. nullopt when the stream ends before t+horizon or no BBO exists
/// at or before t.
std::optional<double> label_target(Nanos sample_time, double horizon_s, const MidHistory& mids);

/// Exclusion rules applied to LIMIT_ADD events before they reach the feature
/// engine.
struct OrderFilter {
    double min_notional = 50.0;
    double max_distance_bps = 2000.0;

    bool passes(double notional, double distance_bps) const {
        return notional >= min_notional && distance_bps <= max_distance_bps;
    }
};

}  // namespace lobsurv
