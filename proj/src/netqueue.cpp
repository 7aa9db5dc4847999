#include "blocklite/netqueue.hpp"

#include <stdexcept>

namespace blocklite {

void EventQueue::push(double timestampMs, uint32_t targetNode, EventPayload payload) {
    Event e;
    e.timestampMs = timestampMs;
    e.seq = nextSeq_++;
    e.targetNode = targetNode;
    e.payload = std::move(payload);
    heap_.push(std::move(e));
}

std::optional<Event> EventQueue::popEarliest() {
    if (heap_.empty()) return std::nullopt;
    Event e = heap_.top();
    heap_.pop();
    ++popped_;
    return e;
}

double sampleLatency(const LatencyModel& model, std::mt19937_64& rng) {
    if (model.stddevMs <= 0) return std::max(model.meanMs, model.floorMs);
    std::normal_distribution<double> dist(model.meanMs, model.stddevMs);
    return std::max(dist(rng), model.floorMs);
}

size_t broadcast(EventQueue& queue, uint32_t sender, const EventPayload& payload,
                 uint32_t nodeCount, const LatencyModel& model, std::mt19937_64& rng, double now) {
    if (nodeCount == 0) throw std::invalid_argument("broadcast: empty network");
    size_t emitted = 0;
    for (uint32_t node = 0; node < nodeCount; ++node) {
        if (node == sender) continue;
        queue.push(now + sampleLatency(model, rng), node, payload);
        ++emitted;
    }
    return emitted;
}

} // namespace blocklite
