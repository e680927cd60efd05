#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace streetlabel {

/// Collects non-fatal warnings keyed by a short code ("dropped_way",
/// "oneway_unrecognized", ...). Not thread-safe; give each worker its own
/// instance and merge() afterwards.
class Diagnostics {
 public:
  void warn(const std::string& code, std::string message = {});
  std::size_t count(const std::string& code) const;
  std::size_t total() const;
  const std::map<std::string, std::size_t>& counts() const { return counts_; }
  const std::vector<std::string>& messages() const { return messages_; }
  void merge(const Diagnostics& other);

  // Messages beyond this many are counted but not stored.
  static constexpr std::size_t kMaxMessages = 200;

 private:
  std::map<std::string, std::size_t> counts_;
  std::vector<std::string> messages_;
};

}  // namespace streetlabel
