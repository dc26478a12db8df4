#include "beatfcos/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace beatfcos {

MatchCounts match_beats(std::span<const double> est, std::span<const double> ref,
                        double window) {
  MatchCounts c;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ref.size() && j < est.size()) {
    if (std::abs(ref[i] - est[j]) <= window) {
      ++c.hits;
      ++i;
      ++j;
    } else if (est[j] < ref[i]) {
      ++j;
    } else {
      ++i;
    }
  }
  c.false_positives = est.size() - c.hits;
  c.false_negatives = ref.size() - c.hits;
  return c;
}

std::vector<double> trim_leading(std::span<const double> times, double skip_seconds) {
  const auto it = std::lower_bound(times.begin(), times.end(), skip_seconds);
  return {it, times.end()};
}

namespace {

double f_from_counts(const MatchCounts& c, std::size_t n_est, std::size_t n_ref) {
  if (n_est == 0 || n_ref == 0 || c.hits == 0) return 0.0;
  const double p = static_cast<double>(c.hits) / static_cast<double>(n_est);
  const double r = static_cast<double>(c.hits) / static_cast<double>(n_ref);
  return 2.0 * p * r / (p + r);
}

}  // namespace

std::optional<double> f_measure(std::span<const double> est, std::span<const double> ref,
                                const EvalConfig& cfg) {
  const auto e = trim_leading(est, cfg.skip_seconds);
  const auto r = trim_leading(ref, cfg.skip_seconds);
  if (r.empty()) return std::nullopt;
  return f_from_counts(match_beats(e, r, cfg.f_measure_window), e.size(), r.size());
}

std::vector<std::vector<double>> metrical_variations(std::span<const double> ref,
                                                     bool include_triple) {
  std::vector<std::vector<double>> out;
  out.emplace_back(ref.begin(), ref.end());

  std::vector<double> offbeat;
  std::vector<double> doubled;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    doubled.push_back(ref[i]);
    if (i + 1 < ref.size()) {
      const double mid = 0.5 * (ref[i] + ref[i + 1]);
      doubled.push_back(mid);
      offbeat.push_back(mid);
    }
  }
  out.push_back(std::move(doubled));
  for (std::size_t phase = 0; phase < 2; ++phase) {
    std::vector<double> half;
    for (std::size_t i = phase; i < ref.size(); i += 2) half.push_back(ref[i]);
    out.push_back(std::move(half));
  }
  out.push_back(std::move(offbeat));

  if (include_triple) {
    std::vector<double> tripled;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      tripled.push_back(ref[i]);
      if (i + 1 < ref.size()) {
        const double step = (ref[i + 1] - ref[i]) / 3.0;
        tripled.push_back(ref[i] + step);
        tripled.push_back(ref[i] + 2.0 * step);
      }
    }
    out.push_back(std::move(tripled));
    for (std::size_t phase = 0; phase < 3; ++phase) {
      std::vector<double> third;
      for (std::size_t i = phase; i < ref.size(); i += 3) third.push_back(ref[i]);
      out.push_back(std::move(third));
    }
  }
  return out;
}

SegmentScore continuity_against(std::span<const double> est, std::span<const double> ref,
                                double tolerance) {
  const std::size_t n_ref = ref.size();
  if (n_ref < 2 || est.empty()) return {0.0, 0.0};
  std::vector<std::uint8_t> used(n_ref, 0);
  std::size_t run = 0;
  std::size_t longest = 0;
  std::size_t total = 0;
  for (std::size_t m = 0; m < est.size(); ++m) {
    const auto it = std::lower_bound(ref.begin(), ref.end(), est[m]);
    std::size_t j = static_cast<std::size_t>(it - ref.begin());
    if (j == n_ref || (j > 0 && est[m] - ref[j - 1] <= ref[j] - est[m])) --j;

    const double local = j + 1 < n_ref ? ref[j + 1] - ref[j] : ref[j] - ref[j - 1];
    const bool phase_ok = std::abs(est[m] - ref[j]) <= tolerance * local;

    bool period_ok = false;
    if (est.size() > 1) {
      const double est_interval = m > 0 ? est[m] - est[m - 1] : est[1] - est[0];
      const double ref_interval = j > 0 ? ref[j] - ref[j - 1] : ref[1] - ref[0];
      period_ok = std::abs(est_interval - ref_interval) <= tolerance * ref_interval;
    }

    const bool correct = phase_ok && period_ok && used[j] == 0;
    if (correct) {
      used[j] = 1;
      ++run;
      ++total;
      longest = std::max(longest, run);
    } else {
      run = 0;
    }
  }
  const double n = static_cast<double>(n_ref);
  return {static_cast<double>(longest) / n, static_cast<double>(total) / n};
}

std::optional<ContinuityScores> continuity(std::span<const double> est,
                                           std::span<const double> ref,
                                           const EvalConfig& cfg) {
  const auto e = trim_leading(est, cfg.skip_seconds);
  const auto r = trim_leading(ref, cfg.skip_seconds);
  if (r.size() < 2) return std::nullopt;
  ContinuityScores s;
  const auto variations = metrical_variations(r, cfg.include_triple_variations);
  for (std::size_t v = 0; v < variations.size(); ++v) {
    if (variations[v].size() < 2) continue;
    const SegmentScore score = continuity_against(e, variations[v], cfg.continuity_tolerance);
    if (v == 0) {
      s.cmlc = score.longest;
      s.cmlt = score.total;
    }
    s.amlc = std::max(s.amlc, score.longest);
    s.amlt = std::max(s.amlt, score.total);
  }
  return s;
}

ClassMetrics evaluate_times(std::span<const double> est, std::span<const double> ref,
                            const EvalConfig& cfg) {
  ClassMetrics m;
  const auto e = trim_leading(est, cfg.skip_seconds);
  const auto r = trim_leading(ref, cfg.skip_seconds);
  m.counts = match_beats(e, r, cfg.f_measure_window);
  m.f_measure = f_measure(est, ref, cfg);
  m.continuity = continuity(est, ref, cfg);
  return m;
}

MetricReport joint_report(const BeatSequence& est, const BeatSequence& ref,
                          const EvalConfig& cfg) {
  MetricReport rep;
  rep.classes[0] = evaluate_times(est.times(), ref.times(), cfg);
  if (est.has_downbeats() && ref.has_downbeats()) {
    rep.classes[1] = evaluate_times(est.downbeat_times(), ref.downbeat_times(), cfg);
  }
  if (rep.classes[0].f_measure && rep.classes[1].f_measure) {
    rep.joint_f_measure = 0.5 * (*rep.classes[0].f_measure + *rep.classes[1].f_measure);
  }
  return rep;
}

DatasetSummary summarize(std::span<const MetricReport> reports) {
  DatasetSummary out;
  std::array<std::size_t, kNumClasses> cont_tracks{0, 0};
  double joint = 0.0;
  std::size_t joint_n = 0;
  for (const auto& rep : reports) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto& m = rep.classes[c];
      auto& row = out.classes[c];
      if (m.f_measure) {
        ++row.tracks;
        row.f_measure += *m.f_measure;
      }
      if (m.continuity) {
        ++cont_tracks[c];
        row.continuity.cmlc += m.continuity->cmlc;
        row.continuity.cmlt += m.continuity->cmlt;
        row.continuity.amlc += m.continuity->amlc;
        row.continuity.amlt += m.continuity->amlt;
      }
    }
    if (rep.joint_f_measure) {
      joint += *rep.joint_f_measure;
      ++joint_n;
    }
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& row = out.classes[c];
    if (row.tracks > 0) row.f_measure /= static_cast<double>(row.tracks);
    if (cont_tracks[c] > 0) {
      const double n = static_cast<double>(cont_tracks[c]);
      row.continuity.cmlc /= n;
      row.continuity.cmlt /= n;
      row.continuity.amlc /= n;
      row.continuity.amlt /= n;
    }
  }
  if (joint_n > 0) out.joint_f_measure = joint / static_cast<double>(joint_n);
  return out;
}

}  // namespace beatfcos
