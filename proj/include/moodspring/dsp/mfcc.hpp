#pragma once

#include <optional>
#include <span>
#include <vector>

#include "moodspring/dsp/audio.hpp"
#include "moodspring/dsp/fft.hpp"
#include "moodspring/features.hpp"
#include "moodspring/matrix.hpp"

namespace moodspring::dsp {

struct MfccConfig {
  int frame_len = 400;  // 25 ms at 16 kHz
  int hop = 160;        // 10 ms
  int n_fft = 512;
  int n_mels = 26;
  int n_mfcc = 13;
  double pre_emphasis = 0.97;
  double fmin = 0.0;
  std::optional<double> fmax;  // defaults to sample_rate / 2
  double log_floor = 1e-10;

  /// Throws InvalidInput unless 0 < hop <= frame_len <= n_fft (power of two),
  /// 0 < n_mfcc <= n_mels and fmin < fmax.
  void validate(int sample_rate) const;
  double upper_frequency(int sample_rate) const {
    return fmax.value_or(sample_rate / 2.0);
  }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Number of whole frames; the trailing partial frame is dropped.
std::size_t frame_count(std::size_t length, int frame_len, int hop);

// Triangular filters on the HTK mel scale, evaluated at FFT bin frequencies.
class MelFilterbank {
 public:
  MelFilterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax);

  int size() const { return static_cast<int>(centers_hz_.size()); }
  const std::vector<double>& centers_hz() const { return centers_hz_; }

  // energies[m] = sum_k weight(m, k) * spectrum[k], spectrum has n_fft/2+1 bins.
  void apply(std::span<const double> spectrum, std::span<double> energies) const;

 private:
  struct Filter {
    std::size_t first_bin = 0;
    std::vector<double> weights;
  };
  std::vector<Filter> filters_;
  std::vector<double> centers_hz_;
};

/// Everything needed to process frames of one clip; immutable once built, so
/// one instance can be shared by all threads working on the clip.
class MfccExtractor {
 public:
  MfccExtractor(const MfccConfig& cfg, int sample_rate);

  const MfccConfig& config() const { return cfg_; }
  const MelFilterbank& filterbank() const { return filterbank_; }

  /// Mel filterbank energies (linear, before the log) of every frame.
  Matrix mel_energies(const AudioClip& clip) const;

  /// T x n_mfcc cepstra, frames processed in parallel with OpenMP.
  Matrix compute(const AudioClip& clip) const;

  /// Serial reference of compute(); produces bitwise-identical output.
  Matrix compute_serial(const AudioClip& clip) const;

  /// Orthonormal DCT-II of a log-energy vector, first n_mfcc coefficients.
  void dct(std::span<const double> log_energies, std::span<double> out) const;

 private:
  struct Scratch {
    std::vector<double> frame;
    std::vector<double> spectrum;
    std::vector<double> energies;
    std::vector<std::complex<double>> fft;
  };

  Scratch make_scratch() const;
  std::vector<double> emphasize(const AudioClip& clip) const;
  void frame_energies(std::span<const double> emphasized, std::size_t frame,
                      Scratch& scratch) const;
  void frame_cepstrum(std::span<const double> emphasized, std::size_t frame,
                      Scratch& scratch, std::span<double> out) const;
  void check_length(const AudioClip& clip) const;

  MfccConfig cfg_;
  int sample_rate_;
  FftPlan fft_;
  MelFilterbank filterbank_;
  std::vector<double> window_;
  Matrix dct_basis_;  // n_mfcc x n_mels, orthonormal scaling folded in
};

/// Convenience wrapper: builds an extractor and runs it in parallel.
/// Throws TooShort when the clip is shorter than one frame.
Matrix compute_mfcc(const AudioClip& clip, const MfccConfig& cfg = {});

/// Clip-level vector: [mean(c), std(c), mean(delta), std(delta)] with
/// population standard deviation and delta[0] = 0. Without deltas only the
/// first two blocks are produced.
FeatureVector pool(const Matrix& frames, bool with_deltas = true);

}  // namespace moodspring::dsp
