#include <cstdlib>

#include "rtsec/kernels.hpp"
#include "rtsec/types.hpp"

namespace rtsec::kernels {

namespace {

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw Error("kernel operands differ in length");
}

Isa detect() {
  if (std::getenv("RTSEC_FORCE_SCALAR") != nullptr) return Isa::scalar;
  return avx2::supported() ? Isa::avx2 : Isa::scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = detect();
  return isa;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size());
  return active_isa() == Isa::avx2 ? avx2::dot(a, b) : scalar::dot(a, b);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size());
  return active_isa() == Isa::avx2 ? avx2::squared_distance(a, b) : scalar::squared_distance(a, b);
}

std::size_t count_equal(std::span<const std::uint8_t> bytes, std::uint8_t value) {
  return active_isa() == Isa::avx2 ? avx2::count_equal(bytes, value) : scalar::count_equal(bytes, value);
}

std::size_t first_mismatch(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  require_same_length(a.size(), b.size());
  return active_isa() == Isa::avx2 ? avx2::first_mismatch(a, b) : scalar::first_mismatch(a, b);
}

}  // namespace rtsec::kernels
