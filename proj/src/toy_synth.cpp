#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "beatfcos/toy.hpp"

namespace beatfcos::toy {

void SynthSpec::validate() const {
  const double end_tempo = tempo_bpm * (1.0 + tempo_drift);
  if (!(tempo_bpm >= 40.0 && tempo_bpm <= 300.0) || !(end_tempo >= 40.0 && end_tempo <= 300.0)) {
    throw std::invalid_argument("tempo must stay within [40, 300] BPM");
  }
  if (meter != 3 && meter != 4) throw std::invalid_argument("meter must be 3 or 4");
  if (!(duration > 2.0 * 60.0 / std::min(tempo_bpm, end_tempo))) {
    throw std::invalid_argument("duration must exceed two beat periods");
  }
  if (!(first_beat >= 0.0) || first_beat >= duration) {
    throw std::invalid_argument("first beat must lie inside the track");
  }
  if (!(click_amplitude > 0.0) || !(click_decay > 0.0) || !(click_frequency > 0.0) ||
      noise_floor < 0.0 || fit_samples < 0) {
    throw std::invalid_argument("click and noise parameters must be positive");
  }
}

SynthTrack synth_track(const SynthSpec& spec, double sample_rate) {
  spec.validate();
  const std::size_t n = spec.fit_samples > 0
                            ? static_cast<std::size_t>(spec.fit_samples)
                            : static_cast<std::size_t>(std::llround(spec.duration * sample_rate));

  std::vector<double> times;
  std::vector<int> positions;
  // Keep the last click's body inside the track.
  const double last_allowed =
      std::min(spec.duration, static_cast<double>(n) / sample_rate) - 6.0 * spec.click_decay;
  double t = spec.first_beat;
  int position = 1;
  while (t < last_allowed) {
    times.push_back(t);
    positions.push_back(position);
    const double bpm = spec.tempo_bpm * (1.0 + spec.tempo_drift * t / spec.duration);
    t += 60.0 / bpm;
    position = position % spec.meter + 1;
  }

  SynthTrack track;
  track.audio.sample_rate = sample_rate;
  track.audio.samples.assign(n, 0.0f);
  std::vector<double> buf(n, 0.0);
  std::mt19937_64 rng(spec.seed);
  if (spec.noise_floor > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_floor);
    // padding stays digital silence
    const auto natural = std::min(n, static_cast<std::size_t>(std::llround(spec.duration * sample_rate)));
    for (std::size_t i = 0; i < natural; ++i) buf[i] = noise(rng);
  }
  const auto click_len = static_cast<std::size_t>(std::ceil(6.0 * spec.click_decay * sample_rate));
  const double w = 2.0 * std::numbers::pi * spec.click_frequency / sample_rate;
  for (std::size_t b = 0; b < times.size(); ++b) {
    const double amp = spec.click_amplitude * (positions[b] == 1 ? 2.0 : 1.0);
    const auto start = static_cast<std::size_t>(std::ceil(times[b] * sample_rate));
    // Phase measured from the exact onset so sub-sample timing is preserved.
    const double offset = static_cast<double>(start) - times[b] * sample_rate;
    for (std::size_t i = 0; i < click_len && start + i < n; ++i) {
      const double dt = static_cast<double>(i) + offset;
      buf[start + i] += amp * std::sin(w * dt) * std::exp(-dt / (spec.click_decay * sample_rate));
    }
  }
  for (std::size_t i = 0; i < n; ++i) track.audio.samples[i] = static_cast<float>(buf[i]);
  track.annotation = BeatSequence::with_positions(std::move(times), std::move(positions));
  return track;
}

std::vector<SynthSpec> make_corpus(const CorpusSpec& corpus) {
  if (corpus.num_tracks < 0 || corpus.meters.empty() || !(corpus.tempo_max >= corpus.tempo_min)) {
    throw std::invalid_argument("invalid corpus specification");
  }
  std::mt19937_64 rng(corpus.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SynthSpec> specs;
  for (int i = 0; i < corpus.num_tracks; ++i) {
    SynthSpec s;
    s.tempo_bpm = corpus.tempo_min + (corpus.tempo_max - corpus.tempo_min) * unit(rng);
    s.meter = corpus.meters[static_cast<std::size_t>(unit(rng) * static_cast<double>(corpus.meters.size())) %
                            corpus.meters.size()];
    s.tempo_drift = corpus.max_drift * (2.0 * unit(rng) - 1.0);
    s.duration = corpus.duration;
    s.first_beat = unit(rng) * 60.0 / s.tempo_bpm;
    s.noise_floor = corpus.noise_floor;
    s.fit_samples = corpus.fit_samples;
    s.seed = rng();
    specs.push_back(s);
  }
  return specs;
}

}  // namespace beatfcos::toy
