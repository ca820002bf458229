#pragma once

#include <array>
#include <span>
#include <string_view>

#include "specdetect/signal.hpp"
#include "specdetect/spectral.hpp"

namespace specdetect {

// The six spectral descriptors of a log-probability signal. Energy features
// (e_dft, e_stft, mean_flux) track fluctuation amplitude; the rest describe
// spectral shape and are amplitude-invariant.
struct FeatureVector {
  double e_dft = 0.0;
  double e_stft = 0.0;
  double mean_flux = 0.0;
  double centroid = 0.0;          // frequency-index units
  double entropy = 0.0;           // bits
  double entropy_variance = 0.0;  // bits^2

  static constexpr std::size_t kSize = 6;
  static constexpr std::array<std::string_view, kSize> kNames = {
      "e_dft", "e_stft", "mean_flux", "centroid", "entropy", "entropy_variance"};

  std::array<double, kSize> as_array() const {
    return {e_dft, e_stft, mean_flux, centroid, entropy, entropy_variance};
  }
};

// Sum of P_k over k = 0..n/2.
double dft_total_energy(const Spectrum& spectrum);

// Sum of |S(f,t)|^2 over every frame and bin.
double stft_total_energy(const Spectrogram& sg);

// Mean over consecutive frame pairs of sum_f ||S(f,t)| - |S(f,t-1)||.
// Zero when there are fewer than two frames.
double mean_spectral_flux(const Spectrogram& sg);

// Power-weighted mean bin index over the half spectrum; 0 for zero power.
double spectral_centroid(const Spectrum& spectrum);

// Shannon entropy (bits) of the normalized half-spectrum power; 0 for zero power.
double spectral_entropy(const Spectrum& spectrum);

// Shannon entropy (bits) of an arbitrary non-negative power vector after
// normalization. Zero bins contribute nothing.
double normalized_entropy_bits(std::span<const double> power);

// Population variance over frames of the per-frame spectral entropy.
double spectral_entropy_variance(const Spectrogram& sg);

FeatureVector feature_vector(const CenteredSignal& centered, const StftParams& params = {});
FeatureVector feature_vector(const TokenSignal& signal, const StftParams& params = {});

}  // namespace specdetect
