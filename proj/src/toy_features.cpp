#include <algorithm>
#include <cmath>
#include <deque>

#include "beatfcos/kernels.hpp"
#include "beatfcos/toy.hpp"

namespace beatfcos::toy {

OnsetEnvelope onset_envelope(std::span<const float> audio, double sample_rate) {
  OnsetEnvelope env;
  env.sample_rate = sample_rate;
  constexpr std::size_t win = OnsetEnvelope::kWindow;
  constexpr std::size_t hop = OnsetEnvelope::kHop;
  if (audio.size() < win) return env;
  const std::size_t frames = (audio.size() - win) / hop + 1;
  env.energy.resize(frames);
  kernels::frame_energy(audio, win, hop, env.energy);
  env.onset.assign(frames, 0.0);
  for (std::size_t f = 1; f < frames; ++f) {
    env.onset[f] = std::max(0.0, env.energy[f] - env.energy[f - 1]);
  }
  return env;
}

namespace {

constexpr double kContextSeconds = 4.0;   // loudness reference window
constexpr double kTempoWindow = 6.0;      // periodicity window
constexpr double kTempoUpdate = 0.1;      // periodicity estimates are refreshed this often
constexpr double kMinPeriod = 0.3;
constexpr double kMaxPeriod = 1.1;
constexpr double kDefaultPeriod = 0.5;
constexpr double kFrontThreshold = 0.02;
constexpr double kFrontSearchStrides = 8.0;
constexpr double kEnergyFloor = 1e-6;
constexpr double kMassScale = 0.02;
constexpr double kNextGateStrides = 5.0;
constexpr double kBandSoftness = 0.05;  // log units

class EnvelopeIndex {
 public:
  explicit EnvelopeIndex(const OnsetEnvelope& env) : env_(env), prefix_(env.onset.size() + 1, 0.0) {
    for (std::size_t f = 0; f < env.onset.size(); ++f) prefix_[f + 1] = prefix_[f] + env.onset[f];
  }

  // First frame whose time stamp is >= t.
  std::size_t first_at_or_after(double t) const {
    const double x = (t * env_.sample_rate - static_cast<double>(OnsetEnvelope::kWindow)) /
                     static_cast<double>(OnsetEnvelope::kHop);
    if (x <= 0.0) return 0;
    return std::min(env_.onset.size(), static_cast<std::size_t>(std::ceil(x)));
  }

  // Onset mass with frame time in [a, b).
  double mass(double a, double b) const {
    if (!(b > a)) return 0.0;
    const std::size_t lo = first_at_or_after(a);
    const std::size_t hi = first_at_or_after(b);
    return hi > lo ? prefix_[hi] - prefix_[lo] : 0.0;
  }

  const OnsetEnvelope& env() const { return env_; }

 private:
  const OnsetEnvelope& env_;
  std::vector<double> prefix_;
};

struct Periodicity {
  double period = kDefaultPeriod;
  double bar = 4.0 * kDefaultPeriod;
};

// Unbiased autocorrelation of c over bins [lo, hi) at lag L.
double acf(const std::vector<double>& c, std::size_t lo, std::size_t hi, std::size_t lag) {
  if (hi <= lo + lag) return 0.0;
  double s = 0.0;
  for (std::size_t g = lo + lag; g < hi; ++g) s += c[g] * c[g - lag];
  return s / static_cast<double>(hi - lo - lag);
}

// Beat and bar period estimates from the onset envelope in a window centred
// on each update time.
std::vector<Periodicity> estimate_periodicity(const EnvelopeIndex& index, double duration) {
  const auto& env = index.env();
  constexpr std::size_t kBin = 8;  // fine frames per coarse bin
  const double dt = static_cast<double>(kBin * OnsetEnvelope::kHop) / env.sample_rate;
  const std::size_t bins = env.onset.size() / kBin;
  std::vector<double> mass(bins, 0.0), root(bins, 0.0);
  for (std::size_t g = 0; g < bins; ++g) {
    for (std::size_t k = 0; k < kBin; ++k) mass[g] += env.onset[g * kBin + k];
    root[g] = std::sqrt(mass[g]);
  }
  const auto min_lag = static_cast<std::size_t>(std::ceil(kMinPeriod / dt));
  const auto max_lag = static_cast<std::size_t>(std::floor(kMaxPeriod / dt));
  const auto window_bins = static_cast<std::size_t>(kTempoWindow / dt);
  // Coarse bin g spans frame times [t0 + g*dt, t0 + (g+1)*dt).
  const double t0 = env.frame_time(0);

  std::vector<Periodicity> out;
  const auto updates = static_cast<std::size_t>(std::floor(duration / kTempoUpdate)) + 1;
  out.reserve(updates);
  for (std::size_t u = 0; u < updates; ++u) {
    const double tau = static_cast<double>(u) * kTempoUpdate;
    Periodicity p;
    const double end = (tau + 0.5 * kTempoWindow - t0) / dt;
    const std::size_t hi = end <= 0.0 ? 0 : std::min(bins, static_cast<std::size_t>(end));
    const std::size_t lo = hi > window_bins ? hi - window_bins : 0;
    if (hi > lo + min_lag + 1) {
      std::vector<double> a(max_lag + 2, 0.0);
      double best = 0.0;
      for (std::size_t lag = min_lag; lag <= max_lag + 1; ++lag) {
        a[lag] = acf(root, lo, hi, lag);
        if (lag <= max_lag) best = std::max(best, a[lag]);
      }
      if (best > 0.0) {
        std::size_t pick = 0;
        for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
          const bool peak = a[lag] >= a[lag - 1] && a[lag] >= a[lag + 1];
          if (peak && a[lag] >= 0.7 * best) {
            pick = lag;
            break;
          }
        }
        if (pick == 0) {
          pick = static_cast<std::size_t>(std::max_element(a.begin() + static_cast<std::ptrdiff_t>(min_lag),
                                                           a.begin() + static_cast<std::ptrdiff_t>(max_lag) + 1) -
                                          a.begin());
        }
        double refined = static_cast<double>(pick);
        const double ym = a[pick - 1], y0 = a[pick], yp = a[pick + 1];
        const double denom = ym - 2.0 * y0 + yp;
        if (denom < 0.0) refined += std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
        p.period = refined * dt;

        // Meter: which of 3 or 4 beats repeats the accent pattern better.
        auto strength = [&](double seconds) {
          const double lag = seconds / dt;
          const auto c = static_cast<std::size_t>(std::llround(lag));
          if (c + 1 >= hi - lo) return -1.0;
          return std::max({acf(mass, lo, hi, c - 1), acf(mass, lo, hi, c), acf(mass, lo, hi, c + 1)});
        };
        const double s3 = strength(3.0 * p.period);
        const double s4 = strength(4.0 * p.period);
        const int meter = (s3 >= 0.0 && s3 > s4) ? 3 : 4;
        p.bar = meter * p.period;
      }
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

FeaturePyramid extract_pyramid(std::span<const float> audio, const LevelConfig& cfg) {
  if (audio.empty()) throw std::invalid_argument("empty audio");
  const OnsetEnvelope env = onset_envelope(audio, cfg.sample_rate);
  const EnvelopeIndex index(env);
  const auto track_samples = static_cast<std::int64_t>(audio.size());
  const double duration = static_cast<double>(audio.size()) / cfg.sample_rate;
  const auto periodicity = estimate_periodicity(index, duration);
  const double frame_dt = static_cast<double>(OnsetEnvelope::kHop) / cfg.sample_rate;

  FeaturePyramid pyr;
  pyr.levels.resize(static_cast<std::size_t>(cfg.num_levels));
  for (int li = 0; li < cfg.num_levels; ++li) {
    const std::size_t n = anchors_on_level(track_samples, cfg, li);
    const double stride = cfg.stride_seconds(li);
    // Soft membership of a length in this level's size range.
    const double lo_limit = cfg.size_limits[static_cast<std::size_t>(li)];
    const double hi_limit = cfg.size_limits[static_cast<std::size_t>(li) + 1];
    auto in_band = [&](double len) {
      auto rise = [](double x) { return 1.0 / (1.0 + std::exp(-x / kBandSoftness)); };
      const double above = lo_limit > 0.0 ? rise(std::log(len / lo_limit)) : 1.0;
      const double below = std::isfinite(hi_limit) ? rise(std::log(hi_limit / len)) : 1.0;
      return above * below;
    };
    auto& rows = pyr.levels[static_cast<std::size_t>(li)];
    rows.assign(n * kFeatureWidth, 0.0);

    // Sliding maximum of the energy over [p - context, p + stride/2].
    std::deque<std::size_t> window;
    std::size_t next_frame = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = (static_cast<double>(i) + 0.5) * stride;
      const double upper = p + 0.5 * stride;
      while (next_frame < env.energy.size() && env.frame_time(next_frame) <= upper) {
        while (!window.empty() && env.energy[window.back()] <= env.energy[next_frame]) window.pop_back();
        window.push_back(next_frame++);
      }
      while (!window.empty() && env.frame_time(window.front()) < p - kContextSeconds) window.pop_front();
      const double ref = std::max(kEnergyFloor, window.empty() ? 0.0 : env.energy[window.front()]);

      const auto& per = periodicity[std::min(periodicity.size() - 1,
                                             static_cast<std::size_t>(std::floor(p / kTempoUpdate)))];
      double* row = rows.data() + i * kFeatureWidth;
      // Onset masses are log-compressed so accents do not dominate; silence maps to 0.
      auto squash = [](double m) { return std::log1p(m / kMassScale); };
      auto lag_mass = [&](double lo, double hi) {
        return squash(index.mass(p - hi * stride, p - lo * stride) / ref);
      };
      row[kOnsetAfter] = lag_mass(-0.5, 0.0);
      row[kOnsetLag0] = lag_mass(0.0, 0.5);
      row[kOnsetLag1] = lag_mass(0.5, 1.0);
      row[kOnsetLag2] = lag_mass(1.0, 1.5);
      row[kOnsetLag3] = lag_mass(1.5, 2.5);
      row[kOnsetLag4] = lag_mass(2.5, 3.5);
      row[kOnsetLag5] = lag_mass(3.5, 5.0);

      // Latest onset front at or before the anchor.
      double front_lag = kFrontSearchStrides;
      double accent = 0.0;
      const double threshold = kFrontThreshold * ref;
      std::size_t f = index.first_at_or_after(p + 1e-12);
      const double search_from = p - kFrontSearchStrides * stride;
      while (f > 0) {
        --f;
        const double tf = env.frame_time(f);
        if (tf < search_from) break;
        if (env.onset[f] >= threshold && (f == 0 || env.onset[f - 1] < threshold)) {
          front_lag = std::max(0.02, (p - tf) / stride);
          accent = index.mass(tf - 0.5 * frame_dt, tf + 0.02) / ref;
          break;
        }
      }
      row[kFrontLag] = std::log(front_lag);
      row[kFrontAccent] = accent;

      const double log_period = std::log(per.period / stride);
      const double log_bar = std::log(per.bar / stride);
      row[kLogPeriod] = log_period;
      row[kLogPeriodSq] = log_period * log_period;
      row[kLogBar] = log_bar;
      row[kLogBarSq] = log_bar * log_bar;
      const double w = std::max(0.75 * stride, 0.015);
      row[kBeatSupport] = squash(index.mass(p - per.period - w, p - per.period + w) / ref);
      row[kBarSupport] = squash(index.mass(p - per.bar - w, p - per.bar + w) / ref);
      row[kDensity] = squash(index.mass(p - per.period, p) / ref);
      // Support ahead of a recent front; none when the front is stale or missing.
      double next_beat = 0.0, next_bar = 0.0, contrast = 0.0;
      const double recent = std::clamp(kNextGateStrides - front_lag, 0.0, 1.0);
      if (front_lag < kNextGateStrides) {
        const double front = p - front_lag * stride;
        const double wp = std::max(w, 0.1 * per.period);
        auto click = [&](double t) { return index.mass(t - wp, t + wp) / ref; };
        next_beat = click(front + per.period);
        next_bar = click(front + per.bar);
        // Accent of this click against the louder of its neighbouring beats.
        const double here = click(front);
        const double side = std::max(click(front - per.period), next_beat);
        contrast = recent * std::log((here + kMassScale) / (side + kMassScale));
      }
      row[kNextSupport] = squash(next_beat);
      row[kNextBarSupport] = squash(next_bar);
      row[kAccentContrast] = contrast;
      row[kBeatEvidence] = recent * in_band(per.period) * row[kNextSupport];
      row[kBarEvidence] = recent * in_band(per.bar) * row[kNextBarSupport];
    }
  }
  return pyr;
}

}  // namespace beatfcos::toy
