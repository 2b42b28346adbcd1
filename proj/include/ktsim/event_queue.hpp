#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ktsim/time.hpp"

namespace ktsim {

/// Time-ordered event queue. Pops in non-decreasing timestamp order;
/// ties break by insertion order so runs are reproducible.
template <typename Payload>
class EventQueue {
public:
    void push(Timestamp t, Payload p) {
        heap_.push_back(Entry{t, next_seq_++, std::move(p)});
        std::push_heap(heap_.begin(), heap_.end(), Later{});
    }

    [[nodiscard]] bool empty() const noexcept { return heap_.empty(); }
    [[nodiscard]] size_t size() const noexcept { return heap_.size(); }

    std::optional<std::pair<Timestamp, Payload>> pop() {
        if (heap_.empty()) return std::nullopt;
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        Entry e = std::move(heap_.back());
        heap_.pop_back();
        return std::make_pair(e.t, std::move(e.payload));
    }

private:
    struct Entry {
        Timestamp t;
        uint64_t seq;
        Payload payload;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const noexcept {
            if (a.t != b.t) return a.t > b.t;
            return a.seq > b.seq;
        }
    };

    std::vector<Entry> heap_;
    uint64_t next_seq_ = 0;
};

} // namespace ktsim
