#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace moodspring::dsp {

// Iterative radix-2 complex FFT with precomputed twiddles and bit-reversal.
class FftPlan {
 public:
  explicit FftPlan(std::size_t size);

  std::size_t size() const { return size_; }

  // In-place forward transform; data.size() must equal size().
  void forward(std::span<std::complex<double>> data) const;

  // |X[k]| for k = 0..size/2 of a real input zero-padded to size().
  void magnitude(std::span<const double> input, std::span<double> out,
                 std::vector<std::complex<double>>& scratch) const;

 private:
  std::size_t size_;
  std::vector<std::size_t> bit_reverse_;
  std::vector<std::complex<double>> twiddles_;
};

bool is_power_of_two(std::size_t n);

}  // namespace moodspring::dsp
