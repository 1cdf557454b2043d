#include <numeric>
#include <stdexcept>

#include "dualnav/agents.hpp"

namespace dualnav {

ReplayBuffer::ReplayBuffer(std::size_t capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  slots_.resize(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (size_ < slots_.size()) {
    slots_[(head_ + size_) % slots_.size()] = std::move(t);
    ++size_;
  } else {
    slots_[head_] = std::move(t);
    head_ = (head_ + 1) % slots_.size();
  }
}

const Transition& ReplayBuffer::operator[](std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer index out of range");
  return slots_[(head_ + i) % slots_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (n > size_) throw std::invalid_argument("cannot sample more transitions than stored");
  std::vector<std::size_t> idx(size_);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(size_ - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

std::vector<std::size_t> ReplayBuffer::sample_sequence(std::size_t max_len, Rng& rng) const {
  if (size_ == 0 || max_len == 0) return {};
  const auto start = static_cast<std::size_t>(rng.below(size_));
  const auto episode = (*this)[start].episode;
  std::vector<std::size_t> seq;
  for (std::size_t i = start; i < size_ && seq.size() < max_len; ++i) {
    if ((*this)[i].episode != episode) break;
    seq.push_back(i);
    if ((*this)[i].terminal) break;
  }
  return seq;
}

}  // namespace dualnav
