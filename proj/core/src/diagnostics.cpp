#include "streetlabel/diagnostics.hpp"

#include <numeric>

namespace streetlabel {

void Diagnostics::warn(const std::string& code, std::string message) {
  ++counts_[code];
  if (!message.empty() && messages_.size() < kMaxMessages) {
    messages_.push_back(code + ": " + std::move(message));
  }
}

std::size_t Diagnostics::count(const std::string& code) const {
  auto it = counts_.find(code);
  return it == counts_.end() ? 0 : it->second;
}

std::size_t Diagnostics::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0},
                         [](std::size_t acc, const auto& kv) { return acc + kv.second; });
}

void Diagnostics::merge(const Diagnostics& other) {
  for (const auto& [code, n] : other.counts_) counts_[code] += n;
  for (const auto& m : other.messages_) {
    if (messages_.size() >= kMaxMessages) break;
    messages_.push_back(m);
  }
}

}  // namespace streetlabel
