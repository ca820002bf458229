#include "specdetect/spectral.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <utility>

#include "specdetect/error.hpp"

namespace specdetect {

namespace {

// exp(-2 pi i k / n), evaluated from the exact rational angle.
Complex unit_root(std::size_t k, std::size_t n) {
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

std::vector<Complex> radix2_twiddles(std::size_t m) {
  std::vector<Complex> tw(m / 2);
  for (std::size_t k = 0; k < tw.size(); ++k) tw[k] = unit_root(k, m);
  return tw;
}

// In-place iterative Cooley-Tukey; a.size() is a power of two and tw holds
// the size()/2 forward twiddles for that size.
void radix2_inplace(std::vector<Complex>& a, const std::vector<Complex>& tw) {
  const std::size_t m = a.size();
  if (m < 2) return;
  for (std::size_t i = 1, j = 0; i < m; ++i) {
    std::size_t bit = m >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= m; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t stride = m / len;
    for (std::size_t start = 0; start < m; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const Complex u = a[start + j];
        const Complex v = a[start + j + half] * tw[j * stride];
        a[start + j] = u + v;
        a[start + j + half] = u - v;
      }
    }
  }
}

void require_nonempty(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::EmptySignal, "transform of an empty signal");
}

}  // namespace

Spectrum make_spectrum(std::vector<Complex> coefficients) {
  Spectrum s;
  s.n = coefficients.size();
  s.coefficients = std::move(coefficients);
  s.half_power.reserve(s.n / 2 + 1);
  for (std::size_t k = 0; k <= s.n / 2 && k < s.n; ++k) s.half_power.push_back(std::norm(s.coefficients[k]));
  return s;
}

Spectrogram make_spectrogram(const std::vector<std::vector<Complex>>& rows, std::size_t hop) {
  Spectrogram sg;
  sg.frame_count = rows.size();
  sg.window_length = rows.empty() ? 0 : rows.front().size();
  sg.hop = hop;
  sg.window.assign(sg.window_length, 1.0);
  for (const auto& row : rows) {
    if (row.size() != sg.window_length) {
      throw Error(ErrorCode::InvalidConfig, "spectrogram rows must have equal length");
    }
    sg.frames.insert(sg.frames.end(), row.begin(), row.end());
  }
  return sg;
}

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(std::has_single_bit(n)) {
  require_nonempty(n);
  if (pow2_) {
    twiddles_ = radix2_twiddles(n);
    return;
  }
  conv_size_ = std::bit_ceil(2 * n - 1);
  twiddles_ = radix2_twiddles(conv_size_);
  // k^2 mod 2n keeps the chirp angle exact for large k.
  chirp_.resize(n);
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t kk = (static_cast<std::uint64_t>(k) * k) % two_n;
    const double angle = -std::numbers::pi * static_cast<double>(kk) / static_cast<double>(n);
    chirp_[k] = {std::cos(angle), std::sin(angle)};
  }
  chirp_fft_.assign(conv_size_, Complex{});
  chirp_fft_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    chirp_fft_[k] = std::conj(chirp_[k]);
    chirp_fft_[conv_size_ - k] = std::conj(chirp_[k]);
  }
  radix2_inplace(chirp_fft_, twiddles_);
}

std::vector<Complex> FftPlan::forward(std::span<const Complex> input) const {
  if (input.size() != n_) throw Error(ErrorCode::InvalidConfig, "input length does not match FFT plan");
  if (pow2_) {
    std::vector<Complex> a(input.begin(), input.end());
    radix2_inplace(a, twiddles_);
    return a;
  }
  std::vector<Complex> a(conv_size_, Complex{});
  for (std::size_t k = 0; k < n_; ++k) a[k] = input[k] * chirp_[k];
  radix2_inplace(a, twiddles_);
  for (std::size_t k = 0; k < conv_size_; ++k) a[k] = std::conj(a[k] * chirp_fft_[k]);
  radix2_inplace(a, twiddles_);  // conj(FFT(conj(.))) = M * IFFT(.)
  const double scale = 1.0 / static_cast<double>(conv_size_);
  std::vector<Complex> out(n_);
  for (std::size_t k = 0; k < n_; ++k) out[k] = std::conj(a[k]) * scale * chirp_[k];
  return out;
}

std::vector<Complex> FftPlan::forward_real(std::span<const double> input) const {
  std::vector<Complex> c(input.begin(), input.end());
  return forward(c);
}

Spectrum dft_naive(const CenteredSignal& centered) {
  const std::size_t n = centered.size();
  require_nonempty(n);
  std::vector<Complex> roots(n);
  for (std::size_t j = 0; j < n; ++j) roots[j] = unit_root(j, n);
  std::vector<Complex> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t m = 0; m < n; ++m) acc += centered.values[m] * roots[(k * m) % n];
    x[k] = acc;
  }
  return make_spectrum(std::move(x));
}

Spectrum dft_fast(const CenteredSignal& centered) {
  require_nonempty(centered.size());
  const FftPlan plan(centered.size());
  return make_spectrum(plan.forward_real(centered.values));
}

std::vector<double> hann_window(std::size_t length) {
  if (length == 0) throw Error(ErrorCode::InvalidWindowLength, "window length must be >= 1");
  std::vector<double> w(length);
  for (std::size_t m = 0; m < length; ++m) {
    w[m] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(m) /
                                 static_cast<double>(length)));
  }
  return w;
}

std::size_t stft_frame_count(std::size_t n, std::size_t window_length, std::size_t hop) {
  if (n < window_length) return 1;
  return (n - window_length) / hop + 1;
}

Spectrogram stft(const CenteredSignal& centered, std::size_t window_length, std::size_t hop) {
  const std::size_t n = centered.size();
  require_nonempty(n);
  if (window_length == 0) throw Error(ErrorCode::InvalidWindowLength, "window length must be >= 1");
  if (hop == 0) throw Error(ErrorCode::InvalidConfig, "hop must be >= 1");

  const std::size_t length = n < window_length ? n : window_length;
  Spectrogram sg;
  sg.window_length = length;
  sg.hop = hop;
  sg.window = hann_window(length);
  sg.frame_count = stft_frame_count(n, length, hop);
  sg.frames.reserve(sg.frame_count * length);

  const FftPlan plan(length);
  std::vector<Complex> buf(length);
  for (std::size_t t = 0; t < sg.frame_count; ++t) {
    const std::size_t offset = t * hop;
    for (std::size_t m = 0; m < length; ++m) buf[m] = centered.values[offset + m] * sg.window[m];
    const auto row = plan.forward(buf);
    sg.frames.insert(sg.frames.end(), row.begin(), row.end());
  }
  return sg;
}

}  // namespace specdetect
