#include "moodspring/dsp/fft.hpp"

#include <cmath>
#include <numbers>

#include "moodspring/error.hpp"

namespace moodspring::dsp {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

FftPlan::FftPlan(std::size_t size) : size_(size) {
  if (!is_power_of_two(size)) {
    fail(ErrorCode::InvalidInput, "FFT size must be a power of two, got " + std::to_string(size));
  }
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < size) ++bits;

  bit_reverse_.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) {
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    }
    bit_reverse_[i] = r;
  }

  twiddles_.resize(size / 2);
  for (std::size_t k = 0; k < size / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(size);
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
}

void FftPlan::forward(std::span<std::complex<double>> data) const {
  for (std::size_t i = 0; i < size_; ++i) {
    const std::size_t j = bit_reverse_[i];
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= size_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = size_ / len;
    for (std::size_t start = 0; start < size_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> t = twiddles_[k * stride] * data[start + k + half];
        data[start + k + half] = data[start + k] - t;
        data[start + k] += t;
      }
    }
  }
}

void FftPlan::magnitude(std::span<const double> input, std::span<double> out,
                        std::vector<std::complex<double>>& scratch) const {
  scratch.assign(size_, {0.0, 0.0});
  const std::size_t n = std::min(input.size(), size_);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = {input[i], 0.0};
  forward(scratch);
  for (std::size_t k = 0; k <= size_ / 2; ++k) out[k] = std::abs(scratch[k]);
}

}  // namespace moodspring::dsp
