#include "specdetect/features.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace specdetect {

double dft_total_energy(const Spectrum& spectrum) {
  return std::accumulate(spectrum.half_power.begin(), spectrum.half_power.end(), 0.0);
}

double stft_total_energy(const Spectrogram& sg) {
  double total = 0.0;
  for (const auto& c : sg.frames) total += std::norm(c);
  return total;
}

double mean_spectral_flux(const Spectrogram& sg) {
  if (sg.frame_count < 2) return 0.0;
  double total = 0.0;
  for (std::size_t t = 1; t < sg.frame_count; ++t) {
    for (std::size_t f = 0; f < sg.window_length; ++f) {
      total += std::fabs(std::abs(sg.at(t, f)) - std::abs(sg.at(t - 1, f)));
    }
  }
  return total / static_cast<double>(sg.frame_count - 1);
}

double spectral_centroid(const Spectrum& spectrum) {
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < spectrum.half_power.size(); ++k) {
    weighted += static_cast<double>(k) * spectrum.half_power[k];
    total += spectrum.half_power[k];
  }
  return total > 0.0 ? weighted / total : 0.0;
}

double normalized_entropy_bits(std::span<const double> power) {
  const double total = std::accumulate(power.begin(), power.end(), 0.0);
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double p : power) {
    if (p <= 0.0) continue;
    const double q = p / total;
    h -= q * std::log2(q);
  }
  // Rounding can leave a tiny negative value for single-bin spectra.
  return h > 0.0 ? h : 0.0;
}

double spectral_entropy(const Spectrum& spectrum) { return normalized_entropy_bits(spectrum.half_power); }

double spectral_entropy_variance(const Spectrogram& sg) {
  if (sg.frame_count < 2) return 0.0;
  std::vector<double> entropies;
  entropies.reserve(sg.frame_count);
  std::vector<double> power(sg.window_length);
  for (std::size_t t = 0; t < sg.frame_count; ++t) {
    const auto row = sg.frame(t);
    for (std::size_t f = 0; f < row.size(); ++f) power[f] = std::norm(row[f]);
    entropies.push_back(normalized_entropy_bits(power));
  }
  const double mean =
      std::accumulate(entropies.begin(), entropies.end(), 0.0) / static_cast<double>(entropies.size());
  double var = 0.0;
  for (double h : entropies) var += (h - mean) * (h - mean);
  return var / static_cast<double>(entropies.size());
}

FeatureVector feature_vector(const CenteredSignal& centered, const StftParams& params) {
  const Spectrum spectrum = dft_fast(centered);
  const Spectrogram sg = stft(centered, params);
  FeatureVector fv;
  fv.e_dft = dft_total_energy(spectrum);
  fv.e_stft = stft_total_energy(sg);
  fv.mean_flux = mean_spectral_flux(sg);
  fv.centroid = spectral_centroid(spectrum);
  fv.entropy = spectral_entropy(spectrum);
  fv.entropy_variance = spectral_entropy_variance(sg);
  return fv;
}

FeatureVector feature_vector(const TokenSignal& signal, const StftParams& params) {
  return feature_vector(center(signal), params);
}

}  // namespace specdetect
