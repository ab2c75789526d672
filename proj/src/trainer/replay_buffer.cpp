#include "stepnet/trainer/replay_buffer.hpp"

#include "stepnet/errors.hpp"

namespace stepnet::trainer {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) {
        throw ConfigError({"trainer.buffer_capacity: must be positive"});
    }
    items_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
    ++pushed_;
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
        return;
    }
    items_[cursor_] = std::move(t);
    cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, des::RngStream& rng) const {
    if (items_.empty()) {
        throw IndexOutOfRange("cannot sample from an empty replay buffer");
    }
    std::vector<std::size_t> out(n);
    for (auto& i : out) {
        i = static_cast<std::size_t>(rng.below(items_.size()));
    }
    return out;
}

} // namespace stepnet::trainer
