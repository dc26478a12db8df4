#include "beatfcos/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace beatfcos {

double clamp_prob(double p) noexcept { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double focal_loss(double p, int c, double gamma, double alpha) noexcept {
  p = clamp_prob(p);
  if (c != 0) return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
  return -(1.0 - alpha) * std::pow(p, gamma) * std::log(1.0 - p);
}

double focal_loss_grad_logit(double logit, int c, double gamma, double alpha) noexcept {
  const double p = clamp_prob(sigmoid(logit));
  const double q = 1.0 - p;
  if (c != 0) return alpha * std::pow(q, gamma) * (gamma * p * std::log(p) - q);
  return -(1.0 - alpha) * std::pow(p, gamma) * (gamma * q * std::log(q) - p);
}

double giou_loss(const Interval& pred, const Interval& gt) noexcept {
  return 1.0 - giou(pred, gt);
}

GiouLossGrad giou_loss_grad(double pl, double pr, double gl, double gr) noexcept {
  const double ir = std::min(pr, gr);
  const double il = std::max(pl, gl);
  const bool overlap = ir > il;
  const double inter = overlap ? ir - il : 0.0;
  const double dI_dr = overlap && pr < gr ? 1.0 : 0.0;
  const double dI_dl = overlap && pl > gl ? -1.0 : 0.0;

  const double uni = (pr - pl) + (gr - gl) - inter;
  const double dU_dr = 1.0 - dI_dr;
  const double dU_dl = -1.0 - dI_dl;

  const double hull = std::max(pr, gr) - std::min(pl, gl);
  const double dH_dr = pr > gr ? 1.0 : 0.0;
  const double dH_dl = pl < gl ? -1.0 : 0.0;

  auto d = [&](double dI, double dU, double dH) {
    return (dI * uni - inter * dU) / (uni * uni) + (dU * hull - uni * dH) / (hull * hull);
  };
  return {1.0 - giou_raw(pl, pr, gl, gr), -d(dI_dl, dU_dl, dH_dl), -d(dI_dr, dU_dr, dH_dr)};
}

double bce(double target, double prob) noexcept {
  const double q = clamp_prob(prob);
  return -(target * std::log(q) + (1.0 - target) * std::log(1.0 - q));
}

double bce_grad_logit(double target, double logit) noexcept { return sigmoid(logit) - target; }

double leftness_bce(double l, double r, double prob, QualityMode mode) noexcept {
  return bce(quality_target(l, r, mode), prob);
}

AnchorPrediction activate(const HeadOutput& raw) noexcept {
  AnchorPrediction p;
  for (int c = 0; c < kNumClasses; ++c) p.cls_prob[c] = sigmoid(raw.cls_logit[c]);
  p.reg_l = std::exp(raw.reg_raw[0]);
  p.reg_r = std::exp(raw.reg_raw[1]);
  p.leftness_prob = sigmoid(raw.lft_logit);
  return p;
}

LossBreakdown anchor_loss(const AnchorTarget& target, const AnchorPrediction& pred,
                          const LossConfig& cfg) noexcept {
  LossBreakdown out;
  for (int c = 0; c < kNumClasses; ++c) {
    out.cls += focal_loss(pred.cls_prob[c], target.cls[c], cfg.focal.gamma, cfg.focal.alpha);
  }
  out.cls *= cfg.weights.cls;
  if (target.positive()) {
    // Both spans share the anchor, so work in anchor-relative stride units.
    out.reg = cfg.weights.reg * (1.0 - giou_raw(-pred.reg_l, pred.reg_r, -target.reg_l,
                                                 target.reg_r));
    out.lft = cfg.weights.lft * bce(target.quality, pred.leftness_prob);
    out.num_positive = 1;
  }
  out.total = out.cls + out.reg + out.lft;
  return out;
}

LossBreakdown anchor_loss_grad(const AnchorTarget& target, const HeadOutput& raw,
                               const LossConfig& cfg, HeadOutput& grad) noexcept {
  const AnchorPrediction pred = activate(raw);
  LossBreakdown out = anchor_loss(target, pred, cfg);
  for (int c = 0; c < kNumClasses; ++c) {
    grad.cls_logit[c] = cfg.weights.cls * focal_loss_grad_logit(raw.cls_logit[c], target.cls[c],
                                                                cfg.focal.gamma, cfg.focal.alpha);
  }
  if (target.positive()) {
    const auto g = giou_loss_grad(-pred.reg_l, pred.reg_r, -target.reg_l, target.reg_r);
    // left edge = -exp(raw_l), right edge = exp(raw_r)
    grad.reg_raw[0] = cfg.weights.reg * g.d_left * -pred.reg_l;
    grad.reg_raw[1] = cfg.weights.reg * g.d_right * pred.reg_r;
    grad.lft_logit = cfg.weights.lft * bce_grad_logit(target.quality, raw.lft_logit);
  } else {
    grad.reg_raw = {0.0, 0.0};
    grad.lft_logit = 0.0;
  }
  return out;
}

double pairwise_sum(std::span<const double> values) noexcept {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

LossBreakdown total_loss(std::span<const TargetSet> targets, std::span<const PredictionSet> preds,
                         const LossConfig& cfg) {
  if (targets.size() != preds.size()) {
    throw std::invalid_argument("targets and predictions differ in batch size");
  }
  if (targets.empty()) throw std::invalid_argument("empty batch");

  std::vector<double> item_cls, item_reg, item_lft;
  LossBreakdown out;
  std::vector<double> cls, reg, lft;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const TargetSet& t = targets[k];
    const PredictionSet& p = preds[k];
    if (t.levels.size() != p.size()) throw std::invalid_argument("level count mismatch");
    cls.clear();
    reg.clear();
    lft.clear();
    for (std::size_t li = 0; li < t.levels.size(); ++li) {
      if (t.levels[li].size() != p[li].size()) {
        throw std::invalid_argument("anchor count mismatch on level " + std::to_string(li));
      }
      for (std::size_t i = 0; i < t.levels[li].size(); ++i) {
        const LossBreakdown a = anchor_loss(t.levels[li][i], p[li][i], cfg);
        cls.push_back(a.cls);
        reg.push_back(a.reg);
        lft.push_back(a.lft);
        out.num_positive += a.num_positive;
      }
    }
    if (cls.empty()) throw std::invalid_argument("batch item without anchors");
    const double n = static_cast<double>(cls.size());
    item_cls.push_back(pairwise_sum(cls) / n);
    item_reg.push_back(pairwise_sum(reg) / n);
    item_lft.push_back(pairwise_sum(lft) / n);
  }
  const double b = static_cast<double>(targets.size());
  out.cls = pairwise_sum(item_cls) / b;
  out.reg = pairwise_sum(item_reg) / b;
  out.lft = pairwise_sum(item_lft) / b;
  out.total = out.cls + out.reg + out.lft;
  return out;
}

double relative_error(double a, double b, double floor) noexcept {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

GradCheckResult gradient_check(const std::function<double(std::span<const double>)>& f,
                               std::span<const double> x, std::span<const double> analytic,
                               double step, double tolerance) {
  if (x.size() != analytic.size()) {
    throw std::invalid_argument("gradient size differs from input size");
  }
  GradCheckResult res;
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double fp = f(probe);
    probe[i] = orig - step;
    const double fm = f(probe);
    probe[i] = orig;
    const double numeric = (fp - fm) / (2.0 * step);
    const double err = relative_error(analytic[i], numeric);
    if (err > res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_index = i;
    }
  }
  res.passed = res.max_rel_error < tolerance;
  return res;
}

}  // namespace beatfcos
