#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference and
// an AVX2 variant; the variant is chosen once at runtime from CPUID. Tests in
// kernels_test.cpp hold the variants equivalent to the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace beatfcos::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  // out[j] = IoU([l, r], [lefts[j], rights[j]]). Bit-identical across ISAs.
  void (*iou_one_to_many)(double l, double r, const double* lefts, const double* rights,
                          double* out, std::size_t n);
  // out[f] = sum of x[f*hop + i]^2 for i < win, for f < frames. Caller
  // guarantees (frames - 1) * hop + win <= x length.
  void (*frame_energy)(const float* x, std::size_t win, std::size_t hop, double* out,
                       std::size_t frames);
  // y[o] = b[o] + sum_k w[o * cols + k] * x[k]
  void (*matvec)(const double* w, const double* b, const double* x, double* y, std::size_t rows,
                 std::size_t cols);
  // w[o * cols + k] += g[o] * x[k]
  void (*rank1_update)(double* w, const double* g, const double* x, std::size_t rows,
                       std::size_t cols);
};

const KernelTable& scalar_table() noexcept;
// Null when the binary was built without AVX2 support.
const KernelTable* avx2_table() noexcept;

// True when the running CPU supports AVX2+FMA and the AVX2 table was compiled.
bool avx2_available() noexcept;

// The table selected for this process. BEATFCOS_FORCE_SCALAR=1 in the
// environment pins the scalar reference.
Isa active_isa() noexcept;
const KernelTable& active() noexcept;

// Span conveniences over the active table.
void iou_one_to_many(double l, double r, std::span<const double> lefts,
                     std::span<const double> rights, std::span<double> out);
void frame_energy(std::span<const float> x, std::size_t win, std::size_t hop,
                  std::span<double> out);

}  // namespace beatfcos::kernels
