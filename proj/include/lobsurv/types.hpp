#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lobsurv {

using Nanos = std::int64_t;

inline constexpr double kBps = 1e4;
inline constexpr double kNanosPerSecond = 1e9;

enum class Side : std::uint8_t { Bid = 0, Ask = 1 };

inline constexpr Side opposite(Side s) { return s == Side::Bid ? Side::Ask : Side::Bid; }
inline constexpr int index(Side s) { return static_cast<int>(s); }

std::string_view to_string(Side s);
std::optional<Side> side_from_string(std::string_view s);

enum class EventKind : std::uint8_t { LimitAdd, Trade, Bbo };

std::string_view to_string(EventKind k);
std::optional<EventKind> kind_from_string(std::string_view s);

/// One Level-3 event. `side`, `price`, `size` apply to LIMIT_ADD/TRADE,
/// `bid`/`ask` to BBO; inapplicable fields are left at zero / nullopt.
struct LobEvent {
    Nanos ts_ns = 0;
    std::string asset;
    EventKind kind = EventKind::Bbo;
    std::optional<Side> side;
    double price = 0.0;
    double size = 0.0;
    double bid = 0.0;
    double ask = 0.0;

    /// USD notional of a LIMIT_ADD/TRADE (size is in base units).
    double notional() const { return size * price; }
};

/// Best bid/offer of one asset.
struct BookTop {
    double bid = 0.0;
    double ask = 0.0;

    double mid() const { return 0.5 * (bid + ask); }
    /// Spread in basis points of mid.
    double spread_bps() const { return (ask - bid) / mid() * kBps; }
    bool valid() const { return bid > 0.0 && ask > bid; }
};

// Error taxonomy. Each maps to one failure class of the engine.

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class OrderingError : public std::runtime_error {
public:
    OrderingError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ClockSkewError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class ModelLoadError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lobsurv
