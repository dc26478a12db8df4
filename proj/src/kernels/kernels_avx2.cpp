// Compiled with -mavx2 -mfma. Only reached after a runtime CPUID check.

#include <immintrin.h>

#include <algorithm>

#include "beatfcos/kernels.hpp"

namespace beatfcos::kernels {
namespace {

// Same operation order as the scalar loop so results are bit-identical.
void iou_one_to_many_avx2(double l, double r, const double* lefts, const double* rights,
                          double* out, std::size_t n) {
  const __m256d vl = _mm256_set1_pd(l);
  const __m256d vr = _mm256_set1_pd(r);
  const __m256d vlen = _mm256_set1_pd(r - l);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d bl = _mm256_loadu_pd(lefts + j);
    const __m256d br = _mm256_loadu_pd(rights + j);
    const __m256d inter =
        _mm256_max_pd(zero, _mm256_sub_pd(_mm256_min_pd(vr, br), _mm256_max_pd(vl, bl)));
    const __m256d uni = _mm256_sub_pd(_mm256_add_pd(vlen, _mm256_sub_pd(br, bl)), inter);
    _mm256_storeu_pd(out + j, _mm256_div_pd(inter, uni));
  }
  const double len = r - l;
  for (; j < n; ++j) {
    const double inter = std::max(0.0, std::min(r, rights[j]) - std::max(l, lefts[j]));
    const double uni = (len + (rights[j] - lefts[j])) - inter;
    out[j] = inter / uni;
  }
}

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void frame_energy_avx2(const float* x, std::size_t win, std::size_t hop, double* out,
                       std::size_t frames) {
  for (std::size_t f = 0; f < frames; ++f) {
    const float* p = x + f * hop;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= win; i += 8) {
      const __m256 v = _mm256_loadu_ps(p + i);
      const __m256d a = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
      const __m256d b = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
      acc0 = _mm256_fmadd_pd(a, a, acc0);
      acc1 = _mm256_fmadd_pd(b, b, acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < win; ++i) {
      const double v = p[i];
      acc += v * v;
    }
    out[f] = acc;
  }
}

void matvec_avx2(const double* w, const double* b, const double* x, double* y, std::size_t rows,
                 std::size_t cols) {
  for (std::size_t o = 0; o < rows; ++o) {
    const double* row = w + o * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= cols; k += 4) {
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + k), _mm256_loadu_pd(x + k), acc);
    }
    double s = hsum(acc);
    for (; k < cols; ++k) s += row[k] * x[k];
    y[o] = b[o] + s;
  }
}

void rank1_update_avx2(double* w, const double* g, const double* x, std::size_t rows,
                       std::size_t cols) {
  for (std::size_t o = 0; o < rows; ++o) {
    double* row = w + o * cols;
    const double go = g[o];
    if (go == 0.0) continue;
    const __m256d vg = _mm256_set1_pd(go);
    std::size_t k = 0;
    for (; k + 4 <= cols; k += 4) {
      _mm256_storeu_pd(row + k,
                       _mm256_fmadd_pd(vg, _mm256_loadu_pd(x + k), _mm256_loadu_pd(row + k)));
    }
    for (; k < cols; ++k) row[k] += go * x[k];
  }
}

constexpr KernelTable kAvx2{iou_one_to_many_avx2, frame_energy_avx2, matvec_avx2,
                            rank1_update_avx2};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kAvx2; }

}  // namespace beatfcos::kernels
