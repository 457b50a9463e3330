#pragma once

// Data-parallel inner loops shared by the detector, the cache model and the
// schedule reconstruction. Each kernel has a scalar reference and an AVX2
// variant; the two produce bit-identical results (the scalar code uses the
// same four-lane accumulation order as the vector code), so dispatch never
// changes a report.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace rtsec::kernels {

enum class Isa { scalar, avx2 };

// The dispatched entry points throw rtsec::Error when two operands differ in
// length.

// ISA chosen at first use: AVX2 when the CPU supports it, unless the
// RTSEC_FORCE_SCALAR environment variable is set.
Isa active_isa();
std::string_view isa_name(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
std::size_t count_equal(std::span<const std::uint8_t> bytes, std::uint8_t value);
// Index of the first differing byte, or a.size() when equal.
std::size_t first_mismatch(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
std::size_t count_equal(std::span<const std::uint8_t> bytes, std::uint8_t value);
std::size_t first_mismatch(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
}  // namespace scalar

namespace avx2 {
// False when the library was built without the AVX2 unit or the CPU lacks it.
bool supported();
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
std::size_t count_equal(std::span<const std::uint8_t> bytes, std::uint8_t value);
std::size_t first_mismatch(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
}  // namespace avx2

}  // namespace rtsec::kernels
