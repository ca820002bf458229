#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "specdetect/signal.hpp"

namespace specdetect {

enum class Method { SpecDetect, SpecDetectPlusPlus, Likelihood, LogRank, Entropy, LRR };

inline constexpr Method kAllMethods[] = {Method::SpecDetect, Method::SpecDetectPlusPlus,
                                         Method::Likelihood, Method::LogRank,
                                         Method::Entropy,    Method::LRR};

// CLI/report spelling: specdetect, specdetect++, likelihood, logrank, entropy, lrr.
std::string_view method_name(Method method) noexcept;
std::optional<Method> parse_method(std::string_view name) noexcept;

// z-score decomposition of a SpecDetect++ result.
struct ZScoreParts {
  double base_score = 0.0;
  double sample_mean = 0.0;
  double sample_std = 0.0;
  std::size_t n_samples = 0;
};

// Every score is oriented so that higher means more likely human-written.
// `raw` is set only for SpecDetectPlusPlus.
struct DetectionResult {
  Method method = Method::SpecDetect;
  double score = 0.0;
  std::optional<ZScoreParts> raw;
};

struct SamplerConfig {
  std::size_t n_samples = 100;
  std::uint64_t rng_seed = 0;
  double min_std = 1e-12;

  void validate() const;  // n_samples >= 2, min_std > 0
};

// Half-spectrum DFT energy of the mean-removed sequence.
double spectral_energy(std::span<const double> logprobs);

DetectionResult specdetect_score(const TokenSignal& signal);

// Draws cfg.n_samples contrastive sequences from the stored top candidates.
// Draw order: samples ascending, positions ascending within a sample, one
// SeededRng(cfg.rng_seed).unit() per position. At position i the candidate
// weights are w_j = exp(lp_j - lp_0) over top_candidates[i]; with
// target = u * sum(w), the first j whose running weight sum exceeds target
// is chosen (the last candidate if rounding leaves none). The sampled value
// is that candidate's stored logprob.
std::vector<TokenSignal> sample_contrastive(const TokenSignal& signal, const SamplerConfig& cfg);

// z = (base - mean) / std with population std; DegenerateVariance below min_std.
DetectionResult zscore_result(double base_score, std::span<const double> sample_scores,
                              double min_std = 1e-12);

DetectionResult specdetect_pp_score(const TokenSignal& signal, const SamplerConfig& cfg);

// Variant for externally supplied contrast sequences (each the signal's length).
DetectionResult specdetect_pp_score(const TokenSignal& signal,
                                    std::span<const std::vector<double>> contrast,
                                    const SamplerConfig& cfg);

// Likelihood, LogRank, Entropy or LRR.
DetectionResult baseline_score(const TokenSignal& signal, Method method);

// sum(logprobs) / sum(log_ranks), i.e. the negated likelihood/log-rank ratio.
double log_rank_ratio_score(std::span<const double> logprobs, std::span<const double> log_ranks);

}  // namespace specdetect
