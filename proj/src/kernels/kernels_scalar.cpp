#include "rtsec/kernels.hpp"

namespace rtsec::kernels::scalar {

// Lane j accumulates elements i with i % 4 == j over the whole blocks; lanes
// are combined as (l0 + l1) + (l2 + l3) and the tail is added in order. The
// AVX2 kernels reproduce this order exactly.

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t blocks = n / 4 * 4;
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < blocks; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double p = a[i + j] * b[i + j];
      lane[j] = lane[j] + p;
    }
  }
  double sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = blocks; i < n; ++i) {
    const double p = a[i] * b[i];
    sum = sum + p;
  }
  return sum;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t blocks = n / 4 * 4;
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < blocks; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = a[i + j] - b[i + j];
      const double p = d * d;
      lane[j] = lane[j] + p;
    }
  }
  double sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = blocks; i < n; ++i) {
    const double d = a[i] - b[i];
    const double p = d * d;
    sum = sum + p;
  }
  return sum;
}

std::size_t count_equal(std::span<const std::uint8_t> bytes, std::uint8_t value) {
  std::size_t count = 0;
  for (std::uint8_t byte : bytes) count += byte == value ? 1 : 0;
  return count;
}

std::size_t first_mismatch(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return i;
  }
  return n;
}

}  // namespace rtsec::kernels::scalar
