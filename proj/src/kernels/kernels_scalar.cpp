#include <algorithm>

#include "beatfcos/kernels.hpp"

namespace beatfcos::kernels {
namespace {

void iou_one_to_many_scalar(double l, double r, const double* lefts, const double* rights,
                            double* out, std::size_t n) {
  const double len = r - l;
  for (std::size_t j = 0; j < n; ++j) {
    const double inter = std::max(0.0, std::min(r, rights[j]) - std::max(l, lefts[j]));
    const double uni = (len + (rights[j] - lefts[j])) - inter;
    out[j] = inter / uni;
  }
}

void frame_energy_scalar(const float* x, std::size_t win, std::size_t hop, double* out,
                         std::size_t frames) {
  for (std::size_t f = 0; f < frames; ++f) {
    const float* p = x + f * hop;
    double acc = 0.0;
    for (std::size_t i = 0; i < win; ++i) {
      const double v = p[i];
      acc += v * v;
    }
    out[f] = acc;
  }
}

void matvec_scalar(const double* w, const double* b, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t o = 0; o < rows; ++o) {
    const double* row = w + o * cols;
    double acc = 0.0;
    for (std::size_t k = 0; k < cols; ++k) acc += row[k] * x[k];
    y[o] = b[o] + acc;
  }
}

void rank1_update_scalar(double* w, const double* g, const double* x, std::size_t rows,
                         std::size_t cols) {
  for (std::size_t o = 0; o < rows; ++o) {
    double* row = w + o * cols;
    const double go = g[o];
    if (go == 0.0) continue;
    for (std::size_t k = 0; k < cols; ++k) row[k] += go * x[k];
  }
}

constexpr KernelTable kScalar{iou_one_to_many_scalar, frame_energy_scalar, matvec_scalar,
                              rank1_update_scalar};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace beatfcos::kernels
