#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <stdexcept>
#include <string>

namespace mfpinn {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

// Maximum spatial dimension supported anywhere in the library.
inline constexpr int kMaxDim = 3;

/// Error thrown on any contract violation (bad shapes, invalid data,
/// solver failure). The message carries the offending context.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
template <class... Ts>
std::string cat(Ts&&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  return os.str();
}
}  // namespace detail

template <class... Ts>
[[noreturn]] void fail(Ts&&... parts) {
  throw Error(detail::cat(std::forward<Ts>(parts)...));
}

template <class... Ts>
void require(bool condition, Ts&&... parts) {
  if (!condition) fail(std::forward<Ts>(parts)...);
}

/// Deterministic uniform doubles independent of the standard library's
/// distribution implementations. `next_unit` is in (0,1), never 0 or 1.
class UniformRng {
 public:
  explicit UniformRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double next_unit() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform in (-b, b).
  double next_symmetric(double b) { return (2.0 * next_unit() - 1.0) * b; }

 private:
  std::uint64_t state_;
};

}  // namespace mfpinn
