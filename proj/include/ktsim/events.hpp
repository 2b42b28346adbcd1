#pragma once

#include <cstdint>
#include <vector>

#include "ktsim/time.hpp"

namespace ktsim {

/// A real or injected keystroke. Injected events carry the reserved
/// (unused) key code and are pure metadata, no content is modeled.
struct KeyEvent {
    Timestamp t;
    enum class Kind : uint8_t { Real, Fake } kind = Kind::Real;
    uint16_t key_code = 0;
};

inline constexpr uint16_t kFakeKeyCode = 0xF016; // reserved, never a printable code

/// One observable side-channel signal emitted while the pipeline
/// processes an event. The common currency between victim and attackers.
struct Emission {
    enum class Channel : uint8_t {
        IrqKeyboard,
        IrqTimer,
        IrqOther,
        TickKeyboard, // per-kind interrupt counter increments
        TickTimer,
        TickOther,
        CacheLine,
        CacheSet,
    };

    Timestamp t;
    Channel channel;
    uint32_t id = 0;       // cache line / set identifier, unused for interrupt channels
    Duration busy{};       // ISR service time; zero for cache touches and counter ticks
    int32_t source = -1;   // index of the originating KeyEvent, -1 for background
};

inline bool is_interrupt(Emission::Channel c) {
    return c == Emission::Channel::IrqKeyboard || c == Emission::Channel::IrqTimer ||
           c == Emission::Channel::IrqOther;
}

using EmissionList = std::vector<Emission>;

} // namespace ktsim
