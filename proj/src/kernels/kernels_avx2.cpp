// Built with -mavx2 (see src/CMakeLists.txt). Only reached through dispatch
// after avx2::supported() returned true.

#include "rtsec/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace rtsec::kernels::avx2 {

#if defined(__AVX2__)

namespace {

double reduce_lanes(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

bool supported() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t blocks = n / 4 * 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocks; i += 4) {
    const __m256d va = _mm256_loadu_pd(a.data() + i);
    const __m256d vb = _mm256_loadu_pd(b.data() + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
  }
  double sum = reduce_lanes(acc);
  for (std::size_t i = blocks; i < n; ++i) {
    const double p = a[i] * b[i];
    sum = sum + p;
  }
  return sum;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t blocks = n / 4 * 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocks; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double sum = reduce_lanes(acc);
  for (std::size_t i = blocks; i < n; ++i) {
    const double d = a[i] - b[i];
    const double p = d * d;
    sum = sum + p;
  }
  return sum;
}

std::size_t count_equal(std::span<const std::uint8_t> bytes, std::uint8_t value) {
  const std::size_t n = bytes.size();
  const std::size_t blocks = n / 32 * 32;
  const __m256i needle = _mm256_set1_epi8(static_cast<char>(value));
  std::size_t count = 0;
  for (std::size_t i = 0; i < blocks; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bytes.data() + i));
    const auto mask = static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, needle)));
    count += static_cast<std::size_t>(__builtin_popcount(mask));
  }
  for (std::size_t i = blocks; i < n; ++i) count += bytes[i] == value ? 1 : 0;
  return count;
}

std::size_t first_mismatch(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  const std::size_t blocks = n / 32 * 32;
  for (std::size_t i = 0; i < blocks; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a.data() + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b.data() + i));
    const auto eq = static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(va, vb)));
    if (eq != 0xffffffffu) return i + static_cast<std::size_t>(__builtin_ctz(~eq));
  }
  for (std::size_t i = blocks; i < n; ++i) {
    if (a[i] != b[i]) return i;
  }
  return n;
}

#else

bool supported() { return false; }
double dot(std::span<const double> a, std::span<const double> b) { return scalar::dot(a, b); }
double squared_distance(std::span<const double> a, std::span<const double> b) {
  return scalar::squared_distance(a, b);
}
std::size_t count_equal(std::span<const std::uint8_t> bytes, std::uint8_t value) {
  return scalar::count_equal(bytes, value);
}
std::size_t first_mismatch(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  return scalar::first_mismatch(a, b);
}

#endif

}  // namespace rtsec::kernels::avx2
