#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace loanfair {

/// 64-bit FNV-1a. Stable across platforms, used for schema fingerprints.
class Fnv1a64 {
 public:
  void update(std::string_view bytes);
  std::uint64_t digest() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace loanfair
