#include "moodspring/dsp/mfcc.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "moodspring/error.hpp"

namespace moodspring::dsp {

void MfccConfig::validate(int sample_rate) const {
  const auto bad = [](const std::string& what) { fail(ErrorCode::InvalidInput, "MfccConfig: " + what); };
  if (sample_rate <= 0) bad("sample rate must be positive");
  if (hop <= 0 || hop > frame_len) bad("require 0 < hop <= frame_len");
  if (frame_len > n_fft) bad("require frame_len <= n_fft");
  if (!is_power_of_two(static_cast<std::size_t>(n_fft))) bad("n_fft must be a power of two");
  if (n_mfcc <= 0 || n_mfcc > n_mels) bad("require 0 < n_mfcc <= n_mels");
  if (!(fmin >= 0.0 && fmin < upper_frequency(sample_rate))) bad("require 0 <= fmin < fmax");
  if (upper_frequency(sample_rate) > sample_rate / 2.0) bad("fmax above Nyquist");
  if (!(log_floor > 0.0)) bad("log_floor must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t frame_count(std::size_t length, int frame_len, int hop) {
  const auto flen = static_cast<std::size_t>(frame_len);
  if (length < flen) return 0;
  return 1 + (length - flen) / static_cast<std::size_t>(hop);
}

MelFilterbank::MelFilterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax) {
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (n_mels + 1));
  }

  const std::size_t bins = static_cast<std::size_t>(n_fft) / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / n_fft;
  filters_.resize(static_cast<std::size_t>(n_mels));
  centers_hz_.resize(static_cast<std::size_t>(n_mels));
  for (std::size_t m = 0; m < filters_.size(); ++m) {
    const double lower = edges[m];
    const double center = edges[m + 1];
    const double upper = edges[m + 2];
    centers_hz_[m] = center;

    Filter& filter = filters_[m];
    bool started = false;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > lower && f <= center) {
        w = (f - lower) / (center - lower);
      } else if (f > center && f < upper) {
        w = (upper - f) / (upper - center);
      }
      if (w > 0.0 && !started) {
        filter.first_bin = k;
        started = true;
      }
      if (started) {
        if (w <= 0.0) break;
        filter.weights.push_back(w);
      }
    }
  }
}

void MelFilterbank::apply(std::span<const double> spectrum, std::span<double> energies) const {
  for (std::size_t m = 0; m < filters_.size(); ++m) {
    const Filter& filter = filters_[m];
    double sum = 0.0;
    for (std::size_t j = 0; j < filter.weights.size(); ++j) {
      sum += filter.weights[j] * spectrum[filter.first_bin + j];
    }
    energies[m] = sum;
  }
}

MfccExtractor::MfccExtractor(const MfccConfig& cfg, int sample_rate)
    : cfg_((cfg.validate(sample_rate), cfg)),
      sample_rate_(sample_rate),
      fft_(static_cast<std::size_t>(cfg.n_fft)),
      filterbank_(cfg.n_mels, cfg.n_fft, sample_rate, cfg.fmin, cfg.upper_frequency(sample_rate)),
      window_(static_cast<std::size_t>(cfg.frame_len)),
      dct_basis_(static_cast<std::size_t>(cfg.n_mfcc), static_cast<std::size_t>(cfg.n_mels)) {
  const double denom = cfg.frame_len > 1 ? cfg.frame_len - 1 : 1;
  for (std::size_t n = 0; n < window_.size(); ++n) {
    window_[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  }
  const auto mels = static_cast<double>(cfg.n_mels);
  for (std::size_t k = 0; k < dct_basis_.rows(); ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / mels) : std::sqrt(2.0 / mels);
    for (std::size_t n = 0; n < dct_basis_.cols(); ++n) {
      dct_basis_(k, n) = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                          (2.0 * static_cast<double>(n) + 1.0) / (2.0 * mels));
    }
  }
}

void MfccExtractor::dct(std::span<const double> log_energies, std::span<double> out) const {
  // Rows k >= 1 of the basis sum to zero, so subtracting log_energies[0]
  // leaves them unchanged mathematically and maps constant input to exactly 0.
  const double anchor = log_energies[0];
  for (std::size_t k = 0; k < dct_basis_.rows(); ++k) {
    const auto basis = dct_basis_.row(k);
    double sum = 0.0;
    if (k == 0) {
      for (std::size_t n = 0; n < basis.size(); ++n) sum += log_energies[n];
      sum *= basis[0];
    } else {
      for (std::size_t n = 0; n < basis.size(); ++n) sum += basis[n] * (log_energies[n] - anchor);
    }
    out[k] = sum;
  }
}

MfccExtractor::Scratch MfccExtractor::make_scratch() const {
  Scratch s;
  s.frame.resize(window_.size());
  s.spectrum.resize(static_cast<std::size_t>(cfg_.n_fft) / 2 + 1);
  s.energies.resize(static_cast<std::size_t>(cfg_.n_mels));
  s.fft.resize(static_cast<std::size_t>(cfg_.n_fft));
  return s;
}

void MfccExtractor::check_length(const AudioClip& clip) const {
  if (clip.sample_rate != sample_rate_) {
    fail(ErrorCode::InvalidInput, "MFCC extractor built for " + std::to_string(sample_rate_) +
                                      " Hz, clip is " + std::to_string(clip.sample_rate) + " Hz");
  }
  if (clip.samples.size() < static_cast<std::size_t>(cfg_.frame_len)) {
    fail(ErrorCode::TooShort, "clip of " + std::to_string(clip.samples.size()) +
                                  " samples is shorter than one frame (" +
                                  std::to_string(cfg_.frame_len) + ")");
  }
}

std::vector<double> MfccExtractor::emphasize(const AudioClip& clip) const {
  const auto& x = clip.samples;
  std::vector<double> y(x.size());
  y[0] = x[0];
  for (std::size_t t = 1; t < x.size(); ++t) y[t] = x[t] - cfg_.pre_emphasis * x[t - 1];
  return y;
}

void MfccExtractor::frame_energies(std::span<const double> emphasized, std::size_t frame,
                                   Scratch& s) const {
  const std::size_t start = frame * static_cast<std::size_t>(cfg_.hop);
  for (std::size_t n = 0; n < window_.size(); ++n) s.frame[n] = emphasized[start + n] * window_[n];
  fft_.magnitude(s.frame, s.spectrum, s.fft);
  filterbank_.apply(s.spectrum, s.energies);
}

void MfccExtractor::frame_cepstrum(std::span<const double> emphasized, std::size_t frame,
                                   Scratch& s, std::span<double> out) const {
  frame_energies(emphasized, frame, s);
  for (double& e : s.energies) e = std::log(std::max(e, cfg_.log_floor));
  dct(s.energies, out);
}

Matrix MfccExtractor::mel_energies(const AudioClip& clip) const {
  check_length(clip);
  const auto emphasized = emphasize(clip);
  const std::size_t frames = frame_count(clip.samples.size(), cfg_.frame_len, cfg_.hop);
  Matrix out(frames, static_cast<std::size_t>(cfg_.n_mels));
  Scratch s = make_scratch();
  for (std::size_t t = 0; t < frames; ++t) {
    frame_energies(emphasized, t, s);
    std::copy(s.energies.begin(), s.energies.end(), out.row(t).begin());
  }
  return out;
}

Matrix MfccExtractor::compute(const AudioClip& clip) const {
  check_length(clip);
  const auto emphasized = emphasize(clip);
  const auto frames = static_cast<std::ptrdiff_t>(
      frame_count(clip.samples.size(), cfg_.frame_len, cfg_.hop));
  Matrix out(static_cast<std::size_t>(frames), static_cast<std::size_t>(cfg_.n_mfcc));

#pragma omp parallel
  {
    Scratch s = make_scratch();
#pragma omp for schedule(static)
    for (std::ptrdiff_t t = 0; t < frames; ++t) {
      const auto row = static_cast<std::size_t>(t);
      frame_cepstrum(emphasized, row, s, out.row(row));
    }
  }
  return out;
}

Matrix MfccExtractor::compute_serial(const AudioClip& clip) const {
  check_length(clip);
  const auto emphasized = emphasize(clip);
  const std::size_t frames = frame_count(clip.samples.size(), cfg_.frame_len, cfg_.hop);
  Matrix out(frames, static_cast<std::size_t>(cfg_.n_mfcc));
  Scratch s = make_scratch();
  for (std::size_t t = 0; t < frames; ++t) frame_cepstrum(emphasized, t, s, out.row(t));
  return out;
}

Matrix compute_mfcc(const AudioClip& clip, const MfccConfig& cfg) {
  if (clip.samples.size() < static_cast<std::size_t>(std::max(cfg.frame_len, 0))) {
    fail(ErrorCode::TooShort, "clip shorter than one frame");
  }
  return MfccExtractor(cfg, clip.sample_rate).compute(clip);
}

FeatureVector pool(const Matrix& frames, bool with_deltas) {
  if (frames.rows() == 0 || frames.cols() == 0) fail(ErrorCode::InvalidInput, "pool: empty frame matrix");
  const std::size_t T = frames.rows();
  const std::size_t C = frames.cols();
  const auto count = static_cast<double>(T);

  auto column_stats = [&](auto value_at, std::size_t col, double& mean, double& stddev) {
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) sum += value_at(t, col);
    mean = sum / count;
    double sq = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double d = value_at(t, col) - mean;
      sq += d * d;
    }
    stddev = std::sqrt(sq / count);
  };

  FeatureVector fv;
  fv.kind = FeatureKind::MfccPooled;
  fv.values.assign((with_deltas ? 4 : 2) * C, 0.0);
  const auto raw = [&](std::size_t t, std::size_t c) { return frames(t, c); };
  for (std::size_t c = 0; c < C; ++c) column_stats(raw, c, fv.values[c], fv.values[C + c]);

  if (with_deltas) {
    const auto delta = [&](std::size_t t, std::size_t c) {
      return t == 0 ? 0.0 : frames(t, c) - frames(t - 1, c);
    };
    for (std::size_t c = 0; c < C; ++c) {
      column_stats(delta, c, fv.values[2 * C + c], fv.values[3 * C + c]);
    }
  }
  return fv;
}

}  // namespace moodspring::dsp
