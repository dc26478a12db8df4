#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "beatfcos/geometry.hpp"
#include "beatfcos/pyramid.hpp"

namespace beatfcos {

// Probabilities are clamped to [kProbEps, 1 - kProbEps] before any logarithm.
inline constexpr double kProbEps = 1e-7;

double clamp_prob(double p) noexcept;
double sigmoid(double x) noexcept;

struct FocalParams {
  double gamma = 2.0;
  double alpha = 0.25;
};

struct LossWeights {
  double cls = 1.0;
  double reg = 1.0;
  double lft = 1.0;
};

struct LossConfig {
  FocalParams focal;
  LossWeights weights;
  QualityMode quality = QualityMode::Leftness;
};

// -alpha (1-p)^gamma ln p for c = 1, -(1-alpha) p^gamma ln(1-p) for c = 0.
double focal_loss(double p, int c, double gamma, double alpha) noexcept;
// Derivative of focal_loss(sigmoid(logit), c) with respect to the logit.
double focal_loss_grad_logit(double logit, int c, double gamma, double alpha) noexcept;

// 1 - GIoU. Lies in [0, 2).
double giou_loss(const Interval& pred, const Interval& gt) noexcept;

struct GiouLossGrad {
  double value;
  double d_left;   // d loss / d pred left edge
  double d_right;  // d loss / d pred right edge
};
// 1 - GIoU of [pl, pr] against [gl, gr] and its partial derivatives in the
// predicted endpoints. Piecewise smooth; kinks where endpoints coincide.
GiouLossGrad giou_loss_grad(double pl, double pr, double gl, double gr) noexcept;

// Binary cross-entropy of a probability against a soft label in [0, 1].
double bce(double target, double prob) noexcept;
// Derivative of bce(target, sigmoid(logit)) in the logit.
double bce_grad_logit(double target, double logit) noexcept;

// BCE between the quality target derived from (l, r) and the predicted
// quality probability.
double leftness_bce(double l, double r, double prob,
                    QualityMode mode = QualityMode::Leftness) noexcept;

// Raw head outputs for one anchor: two class logits, two log-offsets
// (offset = exp(raw), stride-normalised) and the quality logit.
struct HeadOutput {
  std::array<double, kNumClasses> cls_logit{0.0, 0.0};
  std::array<double, 2> reg_raw{0.0, 0.0};
  double lft_logit = 0.0;
};

// Head outputs after the output nonlinearities.
struct AnchorPrediction {
  std::array<double, kNumClasses> cls_prob{0.5, 0.5};
  double reg_l = 1.0;
  double reg_r = 1.0;
  double leftness_prob = 0.5;
};

AnchorPrediction activate(const HeadOutput& raw) noexcept;

// Per level, per anchor; aligned with AnchorGrid / TargetSet.
using PredictionSet = std::vector<std::vector<AnchorPrediction>>;

struct LossBreakdown {
  double total = 0.0;
  double cls = 0.0;
  double reg = 0.0;
  double lft = 0.0;
  std::size_t num_positive = 0;
};

// Loss terms of a single anchor (unnormalised, weights applied).
LossBreakdown anchor_loss(const AnchorTarget& target, const AnchorPrediction& pred,
                          const LossConfig& cfg) noexcept;

// Same as anchor_loss evaluated on raw outputs, also writing d loss / d raw.
LossBreakdown anchor_loss_grad(const AnchorTarget& target, const HeadOutput& raw,
                               const LossConfig& cfg, HeadOutput& grad) noexcept;

// Mean over each item's anchors, then mean over the batch. Throws
// std::invalid_argument on misaligned inputs or an item without anchors.
LossBreakdown total_loss(std::span<const TargetSet> targets, std::span<const PredictionSet> preds,
                         const LossConfig& cfg);

// Pairwise (cascade) summation; the result depends only on the sequence.
double pairwise_sum(std::span<const double> values) noexcept;

// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-7) noexcept;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = true;
};

// Compares an analytic gradient against central finite differences of f.
GradCheckResult gradient_check(const std::function<double(std::span<const double>)>& f,
                               std::span<const double> x, std::span<const double> analytic,
                               double step = 1e-6, double tolerance = 1e-4);

}  // namespace beatfcos
