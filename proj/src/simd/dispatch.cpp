#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "whitebench/simd/kernels.hpp"

namespace wb::simd {

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
};

Table table_for(Isa isa) {
  switch (isa) {
#if WB_SIMD_X86
    case Isa::avx2:
      return {avx2::dot, avx2::axpy, avx2::scale};
#endif
#if WB_SIMD_ARM64
    case Isa::neon:
      return {neon::dot, neon::axpy, neon::scale};
#endif
    default:
      return {scalar::dot, scalar::axpy, scalar::scale};
  }
}

Isa best_isa() {
  if (const char* env = std::getenv("WHITEBENCH_ISA"); env != nullptr && *env != '\0') {
    Isa requested = parse_isa(env);
    if (!isa_supported(requested)) {
      throw std::invalid_argument(std::string("WHITEBENCH_ISA=") + env + " is not supported here");
    }
    return requested;
  }
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  if (isa_supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

struct State {
  std::atomic<int> isa;
  Table table;
  State() : isa(static_cast<int>(best_isa())), table(table_for(static_cast<Isa>(isa.load()))) {}
};

State& state() {
  static State s;
  return s;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "neon") return Isa::neon;
  throw std::invalid_argument("unknown ISA '" + std::string(name) + "'");
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if WB_SIMD_X86 && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
      return WB_SIMD_ARM64 != 0;
  }
  return false;
}

Isa active_isa() { return static_cast<Isa>(state().isa.load()); }

// Not meant to race with running kernels; tests switch between runs.
void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("ISA " + std::string(isa_name(isa)) + " is not available");
  }
  State& s = state();
  s.table = table_for(isa);
  s.isa.store(static_cast<int>(isa));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  return state().table.dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  state().table.axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> y) { state().table.scale(alpha, y.data(), y.size()); }

}  // namespace wb::simd
