#pragma once

#include "stepnet/des/rng.hpp"
#include "stepnet/env/types.hpp"

#include <cstdint>
#include <vector>

namespace stepnet::trainer {

struct Transition {
    env::Observation observation;
    std::uint64_t action = 0;
    double reward = 0.0;
    env::Observation next_observation;
    bool done = false;
    env::AgentId agent;
    /// Producing worker; not part of the learning signal.
    std::size_t worker = 0;
};

/// Fixed-capacity ring; the oldest transition is overwritten first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);

    /// `n` indices drawn uniformly with replacement from the current contents.
    std::vector<std::size_t> sample_indices(std::size_t n, des::RngStream& rng) const;

    const Transition& operator[](std::size_t i) const { return items_[i]; }
    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    std::uint64_t pushed() const noexcept { return pushed_; }

private:
    std::size_t capacity_;
    std::vector<Transition> items_;
    std::size_t cursor_ = 0;
    std::uint64_t pushed_ = 0;
};

} // namespace stepnet::trainer
