#include "lobsurv/lob_stream.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lobsurv {

std::string_view to_string(Side s) { return s == Side::Bid ? "BID" : "ASK"; }

std::optional<Side> side_from_string(std::string_view s) {
    if (s == "BID") return Side::Bid;
    if (s == "ASK") return Side::Ask;
    return std::nullopt;
}

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::LimitAdd: return "LIMIT_ADD";
        case EventKind::Trade: return "TRADE";
        case EventKind::Bbo: return "BBO";
    }
    return "?";
}

std::optional<EventKind> kind_from_string(std::string_view s) {
    if (s == "LIMIT_ADD") return EventKind::LimitAdd;
    if (s == "TRADE") return EventKind::Trade;
    if (s == "BBO") return EventKind::Bbo;
    return std::nullopt;
}

namespace {

constexpr std::size_t kColumns = 8;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\n')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

double parse_real(std::string_view field, std::size_t line, const char* name) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw ParseError(line, std::string("invalid ") + name + " '" + std::string(field) + "'");
    }
    return v;
}

double require_positive(std::string_view field, std::size_t line, const char* name) {
    if (field.empty()) throw ParseError(line, std::string("missing ") + name);
    double v = parse_real(field, line, name);
    if (v <= 0.0) throw ParseError(line, std::string(name) + " must be positive");
    return v;
}

void append_real(std::string& out, double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), ptr);
}

}  // namespace

LobEvent parse_event(std::string_view line, std::size_t line_no) {
    line = trim(line);
    std::array<std::string_view, kColumns> f{};
    std::size_t n = 0;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (n == kColumns) throw ParseError(line_no, "too many columns");
        f[n++] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (n < 3) throw ParseError(line_no, "expected at least ts_ns,asset,kind");

    LobEvent ev;
    {
        auto ts = f[0];
        auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), ev.ts_ns);
        if (ec != std::errc{} || ptr != ts.data() + ts.size() || ts.empty()) {
            throw ParseError(line_no, "invalid ts_ns '" + std::string(ts) + "'");
        }
    }
    if (f[1].empty()) throw ParseError(line_no, "missing asset");
    ev.asset = std::string(f[1]);
    auto kind = kind_from_string(f[2]);
    if (!kind) throw ParseError(line_no, "unknown kind '" + std::string(f[2]) + "'");
    ev.kind = *kind;

    if (ev.kind == EventKind::Bbo) {
        ev.bid = require_positive(f[6], line_no, "bid");
        ev.ask = require_positive(f[7], line_no, "ask");
        if (ev.bid >= ev.ask) throw OrderingError(line_no, "crossed BBO (bid >= ask)");
    } else {
        auto side = side_from_string(f[3]);
        if (!side) throw ParseError(line_no, "missing or invalid side");
        ev.side = side;
        ev.price = require_positive(f[4], line_no, "price");
        ev.size = require_positive(f[5], line_no, "size");
    }
    return ev;
}

std::string format_event(const LobEvent& ev) {
    std::string out;
    out.reserve(80);
    out += std::to_string(ev.ts_ns);
    out += ',';
    out += ev.asset;
    out += ',';
    out += to_string(ev.kind);
    out += ',';
    if (ev.kind == EventKind::Bbo) {
        out += ",,,";
        append_real(out, ev.bid);
        out += ',';
        append_real(out, ev.ask);
    } else {
        out += to_string(ev.side.value_or(Side::Bid));
        out += ',';
        append_real(out, ev.price);
        out += ',';
        append_real(out, ev.size);
        out += ",,";
    }
    return out;
}

struct EventReader::Impl {
    gzFile file = nullptr;
    std::string buffer;
};

EventReader::EventReader(const std::string& path) : impl_(std::make_unique<Impl>()) {
    // gzopen reads uncompressed files transparently.
    impl_->file = gzopen(path.c_str(), "rb");
    if (impl_->file == nullptr) throw std::runtime_error("cannot open event file: " + path);
    gzbuffer(impl_->file, 1 << 17);
    std::string header;
    if (!read_line(header)) throw ParseError(0, "empty event file: " + path);
    if (trim(header) != kEventCsvHeader) {
        throw ParseError(1, "unexpected header '" + std::string(trim(header)) + "'");
    }
}

EventReader::~EventReader() {
    if (impl_ && impl_->file) gzclose(impl_->file);
}

bool EventReader::read_line(std::string& out) {
    out.clear();
    std::array<char, 512> chunk{};
    while (gzgets(impl_->file, chunk.data(), static_cast<int>(chunk.size())) != nullptr) {
        out += chunk.data();
        if (!out.empty() && out.back() == '\n') {
            ++line_no_;
            return true;
        }
    }
    if (out.empty()) return false;
    ++line_no_;
    return true;
}

std::optional<LobEvent> EventReader::next() {
    std::string& line = impl_->buffer;
    while (read_line(line)) {
        if (trim(line).empty()) continue;
        LobEvent ev = parse_event(line, line_no_);
        auto [it, inserted] = last_ts_.try_emplace(ev.asset, ev.ts_ns);
        if (!inserted) {
            if (ev.ts_ns < it->second) {
                throw OrderingError(line_no_, "timestamp decreases for asset " + ev.asset);
            }
            it->second = ev.ts_ns;
        }
        return ev;
    }
    return std::nullopt;
}

std::vector<LobEvent> read_events(const std::string& path) {
    EventReader reader(path);
    std::vector<LobEvent> out;
    while (auto ev = reader.next()) out.push_back(std::move(*ev));
    return out;
}

void write_events(const std::string& path, const std::vector<LobEvent>& events) {
    const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    std::string text;
    text.reserve(events.size() * 64 + 64);
    text += kEventCsvHeader;
    text += '\n';
    for (const auto& ev : events) {
        text += format_event(ev);
        text += '\n';
    }
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (f == nullptr) throw std::runtime_error("cannot write " + path);
        gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
        gzclose(f);
    } else {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + path);
        os << text;
    }
}

BookTop track_book(const LobEvent& ev, const BookTop& top, std::vector<std::string>* warnings) {
    if (ev.kind != EventKind::Bbo) return top;
    if (!(ev.bid > 0.0) || ev.bid >= ev.ask) {
        if (warnings) {
            warnings->push_back("rejected crossed BBO for " + ev.asset + " at " + std::to_string(ev.ts_ns));
        }
        return top;
    }
    return BookTop{ev.bid, ev.ask};
}

double compute_distance(const LobEvent& order, const BookTop& top) {
    const double mid = top.mid();
    const double gap = order.side == Side::Bid ? top.bid - order.price : order.price - top.ask;
    return std::max(0.0, gap / mid) * kBps;
}

void MidHistory::push(Nanos ts, double mid) {
    if (!ts_.empty() && ts == ts_.back()) {
        mid_.back() = mid;
    } else {
        ts_.push_back(ts);
        mid_.push_back(mid);
    }
    observe(ts);
}

std::optional<double> MidHistory::mid_at(Nanos ts) const {
    auto it = std::upper_bound(ts_.begin(), ts_.end(), ts);
    if (it == ts_.begin()) return std::nullopt;
    return mid_[static_cast<std::size_t>(it - ts_.begin()) - 1];
}

std::optional<double> label_target(Nanos sample_time, double horizon_s, const MidHistory& mids) {
    const Nanos end = sample_time + static_cast<Nanos>(std::llround(horizon_s * kNanosPerSecond));
    if (mids.end_ts() < end) return std::nullopt;
    auto m0 = mids.mid_at(sample_time);
    if (!m0) return std::nullopt;
    auto m1 = mids.mid_at(end);
    return (*m1 - *m0) / *m0 * kBps;
}

}  // namespace lobsurv
