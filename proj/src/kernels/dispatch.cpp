#include <cstdlib>
#include <cstring>

#include "beatfcos/kernels.hpp"

namespace beatfcos::kernels {

#ifndef BEATFCOS_HAVE_AVX2
const KernelTable* avx2_table() noexcept { return nullptr; }
#endif

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool avx2_available() noexcept {
#if defined(BEATFCOS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok && avx2_table() != nullptr;
#else
  return false;
#endif
}

Isa active_isa() noexcept {
  static const Isa isa = [] {
    const char* force = std::getenv("BEATFCOS_FORCE_SCALAR");
    if (force != nullptr && std::strcmp(force, "0") != 0 && *force != '\0') return Isa::Scalar;
    return avx2_available() ? Isa::Avx2 : Isa::Scalar;
  }();
  return isa;
}

const KernelTable& active() noexcept {
  static const KernelTable& table = active_isa() == Isa::Avx2 ? *avx2_table() : scalar_table();
  return table;
}

void iou_one_to_many(double l, double r, std::span<const double> lefts,
                     std::span<const double> rights, std::span<double> out) {
  active().iou_one_to_many(l, r, lefts.data(), rights.data(), out.data(), out.size());
}

void frame_energy(std::span<const float> x, std::size_t win, std::size_t hop,
                  std::span<double> out) {
  active().frame_energy(x.data(), win, hop, out.data(), out.size());
}

}  // namespace beatfcos::kernels
