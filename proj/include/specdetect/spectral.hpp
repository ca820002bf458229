#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "specdetect/signal.hpp"

namespace specdetect {

using Complex = std::complex<double>;

// Full length-n DFT plus the one-sided power P_k = |X_k|^2, k = 0..n/2
// (Nyquist bin included for even n).
struct Spectrum {
  std::vector<Complex> coefficients;
  std::vector<double> half_power;
  std::size_t n = 0;
};

Spectrum make_spectrum(std::vector<Complex> coefficients);

// Rows are time windows, columns are frequency bins 0..window_length-1.
struct Spectrogram {
  std::size_t frame_count = 0;
  std::size_t window_length = 0;
  std::size_t hop = 0;
  std::vector<double> window;
  std::vector<Complex> frames;  // row-major, frame_count * window_length

  Complex at(std::size_t t, std::size_t f) const { return frames[t * window_length + f]; }
  std::span<const Complex> frame(std::size_t t) const {
    return {frames.data() + t * window_length, window_length};
  }
};

// Build a spectrogram directly from frame rows (all rows equal length).
Spectrogram make_spectrogram(const std::vector<std::vector<Complex>>& rows, std::size_t hop = 1);

// Exact forward DFT of arbitrary length in O(n log n). Powers of two use an
// iterative radix-2 transform; other lengths go through Bluestein's chirp-z
// identity on a power-of-two convolution. The plan is immutable after
// construction and may be shared between threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  std::vector<Complex> forward(std::span<const Complex> input) const;
  std::vector<Complex> forward_real(std::span<const double> input) const;

 private:
  std::size_t n_;
  bool pow2_;
  std::size_t conv_size_ = 0;
  std::vector<Complex> twiddles_;  // radix-2 twiddles for n_ (or conv_size_)
  std::vector<Complex> chirp_;       // exp(-i*pi*k^2/n)
  std::vector<Complex> chirp_fft_;   // FFT of the conjugate chirp kernel
};

// Direct O(n^2) sum. Reference implementation; also used by tests.
Spectrum dft_naive(const CenteredSignal& centered);
Spectrum dft_fast(const CenteredSignal& centered);

// Periodic Hann taper w_m = 0.5 (1 - cos(2 pi m / L)).
std::vector<double> hann_window(std::size_t length);

struct StftParams {
  std::size_t window_length = 20;
  std::size_t hop = 10;
};

// Full windows only. A signal shorter than the window yields one frame that
// spans the whole signal with a Hann window of the signal's own length.
Spectrogram stft(const CenteredSignal& centered, std::size_t window_length = 20,
                 std::size_t hop = 10);
inline Spectrogram stft(const CenteredSignal& centered, const StftParams& params) {
  return stft(centered, params.window_length, params.hop);
}

// Number of full windows for a signal of length n.
std::size_t stft_frame_count(std::size_t n, std::size_t window_length, std::size_t hop);

}  // namespace specdetect
