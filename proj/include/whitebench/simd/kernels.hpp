#pragma once
// Inner-loop kernels with a scalar reference and vectorized variants.
//
// The active variant is picked once at first use from what the CPU reports,
// and can be overridden with WHITEBENCH_ISA=scalar|avx2|neon or set_active_isa().
// Every vectorized variant is tested against the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>

#if defined(__x86_64__) || defined(_M_X64)
#define WB_SIMD_X86 1
#else
#define WB_SIMD_X86 0
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
#define WB_SIMD_ARM64 1
#else
#define WB_SIMD_ARM64 0
#endif

namespace wb::simd {

enum class Isa : int { scalar = 0, avx2 = 1, neon = 2 };

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

// Compiled in and supported by the running CPU.
bool isa_supported(Isa isa);
Isa active_isa();
// Throws std::invalid_argument when the variant is unavailable.
void set_active_isa(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// y = alpha * y
void scale(double alpha, std::span<double> y);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* y, std::size_t n);
}  // namespace scalar

#if WB_SIMD_X86
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* y, std::size_t n);
}  // namespace avx2
#endif

#if WB_SIMD_ARM64
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* y, std::size_t n);
}  // namespace neon
#endif

}  // namespace wb::simd
