#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <variant>
#include <vector>

#include "blocklite/ledger.hpp"

namespace blocklite {

struct TxnSubmitted {
    Transaction txn;
};
struct MiningComplete {
    uint64_t candidateId = 0;
};
struct BlockArrival {
    std::shared_ptr<const Block> block;
};
struct VoteArrival {
    uint64_t blockId = 0;
    uint32_t voter = 0;
};
struct BlockCommitted {
    uint64_t blockId = 0;
};

using EventPayload =
    std::variant<TxnSubmitted, MiningComplete, BlockArrival, VoteArrival, BlockCommitted>;

enum class EventKind { TxnSubmitted, MiningComplete, BlockArrival, VoteArrival, BlockCommitted };

struct Event {
    double timestampMs = 0;
    uint64_t seq = 0; // push order, breaks equal-timestamp ties
    uint32_t targetNode = 0;
    EventPayload payload;

    EventKind kind() const { return static_cast<EventKind>(payload.index()); }
};

// Global priority queue of timestamped events: pops in nondecreasing
// timestamp order, FIFO among equal timestamps.
class EventQueue {
public:
    void push(double timestampMs, uint32_t targetNode, EventPayload payload);
    std::optional<Event> popEarliest();

    bool empty() const { return heap_.empty(); }
    size_t size() const { return heap_.size(); }
    uint64_t pushedCount() const { return nextSeq_; }
    uint64_t poppedCount() const { return popped_; }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.timestampMs != b.timestampMs) return a.timestampMs > b.timestampMs;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    uint64_t nextSeq_ = 0;
    uint64_t popped_ = 0;
};

// Statistical peer-to-peer delay: normal(mean, stddev) clamped at floorMs.
struct LatencyModel {
    double meanMs = 100;
    double stddevMs = 20;
    double floorMs = 1;
};

double sampleLatency(const LatencyModel& model, std::mt19937_64& rng);

// Delivers one copy of the payload to every node except the sender, each at
// now + an independent latency draw (recipients in ascending node order).
// Returns the number of events emitted.
size_t broadcast(EventQueue& queue, uint32_t sender, const EventPayload& payload,
                 uint32_t nodeCount, const LatencyModel& model, std::mt19937_64& rng, double now);

} // namespace blocklite
