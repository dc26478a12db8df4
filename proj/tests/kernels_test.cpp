#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "beatfcos/geometry.hpp"
#include "beatfcos/kernels.hpp"

namespace bf = beatfcos;
namespace k = beatfcos::kernels;

namespace {

const k::KernelTable* simd() { return k::avx2_available() ? k::avx2_table() : nullptr; }

}  // namespace

TEST(Kernels, ScalarIouMatchesGeometry) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> ls(257), rs(257), out(257);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    ls[i] = u(rng);
    rs[i] = ls[i] + 0.01 + u(rng) / 5;
  }
  k::scalar_table().iou_one_to_many(2.0, 3.5, ls.data(), rs.data(), out.data(), ls.size());
  for (std::size_t i = 0; i < ls.size(); ++i) {
    ASSERT_EQ(out[i], bf::iou(bf::Interval(2.0, 3.5), bf::Interval(ls[i], rs[i])));
  }
}

TEST(Kernels, Avx2IouBitIdentical) {
  const auto* t = simd();
  if (t == nullptr) GTEST_SKIP() << "AVX2 not available";
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 1000u}) {
    std::vector<double> ls(n), rs(n), a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      ls[i] = u(rng);
      rs[i] = ls[i] + (i % 7 == 0 ? 1e-9 : u(rng) / 3);
    }
    for (int trial = 0; trial < 20; ++trial) {
      const double l = u(rng);
      const double r = l + u(rng) / 3 + 1e-6;
      k::scalar_table().iou_one_to_many(l, r, ls.data(), rs.data(), a.data(), n);
      t->iou_one_to_many(l, r, ls.data(), rs.data(), b.data(), n);
      for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(a[i], b[i]) << n << " " << i;
    }
  }
}

TEST(Kernels, Avx2FrameEnergyClose) {
  const auto* t = simd();
  if (t == nullptr) GTEST_SKIP() << "AVX2 not available";
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g(0.0f, 0.3f);
  std::vector<float> x(22050);
  for (auto& v : x) v = g(rng);
  const std::size_t win = 256, hop = 32, frames = (x.size() - win) / hop + 1;
  std::vector<double> a(frames), b(frames);
  k::scalar_table().frame_energy(x.data(), win, hop, a.data(), frames);
  t->frame_energy(x.data(), win, hop, b.data(), frames);
  for (std::size_t f = 0; f < frames; ++f) ASSERT_NEAR(a[f], b[f], 1e-12 * (1.0 + a[f]));
  // odd window exercises the tail
  std::vector<double> c(10), d(10);
  k::scalar_table().frame_energy(x.data(), 37, 5, c.data(), 10);
  t->frame_energy(x.data(), 37, 5, d.data(), 10);
  for (std::size_t f = 0; f < 10; ++f) ASSERT_NEAR(c[f], d[f], 1e-12 * (1.0 + c[f]));
}

TEST(Kernels, Avx2MatvecAndRank1Close) {
  const auto* t = simd();
  if (t == nullptr) GTEST_SKIP() << "AVX2 not available";
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t cols : {1u, 4u, 7u, 21u, 64u}) {
    const std::size_t rows = 5;
    std::vector<double> w(rows * cols), b(rows), x(cols), y1(rows), y2(rows), gr(rows);
    for (auto& v : w) v = g(rng);
    for (auto& v : b) v = g(rng);
    for (auto& v : x) v = g(rng);
    for (auto& v : gr) v = g(rng);
    k::scalar_table().matvec(w.data(), b.data(), x.data(), y1.data(), rows, cols);
    t->matvec(w.data(), b.data(), x.data(), y2.data(), rows, cols);
    for (std::size_t o = 0; o < rows; ++o) ASSERT_NEAR(y1[o], y2[o], 1e-12 * (1.0 + std::abs(y1[o])));
    auto w1 = w, w2 = w;
    k::scalar_table().rank1_update(w1.data(), gr.data(), x.data(), rows, cols);
    t->rank1_update(w2.data(), gr.data(), x.data(), rows, cols);
    for (std::size_t i = 0; i < w.size(); ++i) ASSERT_NEAR(w1[i], w2[i], 1e-12 * (1.0 + std::abs(w1[i])));
  }
}

TEST(Kernels, ActiveSelection) {
  const auto isa = k::active_isa();
  if (!k::avx2_available()) EXPECT_EQ(isa, k::Isa::Scalar);
  EXPECT_FALSE(k::isa_name(isa).empty());
  std::vector<double> ls{0.0, 1.0}, rs{1.0, 2.0}, out(2);
  k::iou_one_to_many(0.0, 1.0, ls, rs, out);
  EXPECT_EQ(out[0], 1.0);
  EXPECT_EQ(out[1], 0.0);
}
