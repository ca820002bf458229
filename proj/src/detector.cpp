#include "specdetect/detector.hpp"

#include <cmath>
#include <numeric>

#include "specdetect/error.hpp"
#include "specdetect/features.hpp"
#include "specdetect/rng.hpp"
#include "specdetect/spectral.hpp"

namespace specdetect {

namespace {

double energy_with_plan(const FftPlan& plan, std::span<const double> values) {
  const CenteredSignal c = center(values);
  return dft_total_energy(make_spectrum(plan.forward_real(c.values)));
}

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

std::string_view method_name(Method method) noexcept {
  switch (method) {
    case Method::SpecDetect: return "specdetect";
    case Method::SpecDetectPlusPlus: return "specdetect++";
    case Method::Likelihood: return "likelihood";
    case Method::LogRank: return "logrank";
    case Method::Entropy: return "entropy";
    case Method::LRR: return "lrr";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

void SamplerConfig::validate() const {
  if (n_samples < 2) throw Error(ErrorCode::InvalidConfig, "n_samples must be >= 2");
  if (!(min_std > 0.0)) throw Error(ErrorCode::InvalidConfig, "min_std must be positive");
}

double spectral_energy(std::span<const double> logprobs) {
  return dft_total_energy(dft_fast(center(logprobs)));
}

DetectionResult specdetect_score(const TokenSignal& signal) {
  return {Method::SpecDetect, spectral_energy(signal.values), std::nullopt};
}

std::vector<TokenSignal> sample_contrastive(const TokenSignal& signal, const SamplerConfig& cfg) {
  cfg.validate();
  if (signal.values.empty()) throw Error(ErrorCode::EmptySignal, "cannot sample an empty signal");
  if (!signal.top_candidates || signal.top_candidates->size() != signal.size()) {
    throw Error(ErrorCode::MissingDistributions, "signal has no per-position candidate distributions");
  }
  const auto& candidates = *signal.top_candidates;
  const std::size_t n = signal.size();

  // Unnormalized weights relative to each position's top candidate.
  std::vector<std::vector<double>> weights(n);
  std::vector<double> totals(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& list = candidates[i];
    if (list.empty()) {
      throw Error(ErrorCode::MissingDistributions,
                  "position " + std::to_string(i) + " has no candidates");
    }
    double total = 0.0;
    for (const auto& c : list) {
      const double w = std::exp(c.logprob - list.front().logprob);
      weights[i].push_back(w);
      total += w;
    }
    if (!std::isfinite(total) || !(total > 0.0)) {
      throw Error(ErrorCode::InsufficientSupport,
                  "position " + std::to_string(i) + " has no usable probability mass");
    }
    totals[i] = total;
  }

  SeededRng rng(cfg.rng_seed);
  std::vector<TokenSignal> samples;
  samples.reserve(cfg.n_samples);
  for (std::size_t s = 0; s < cfg.n_samples; ++s) {
    TokenSignal sample;
    sample.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double target = rng.unit() * totals[i];
      const auto& w = weights[i];
      std::size_t pick = w.size() - 1;
      double running = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) {
        running += w[j];
        if (running > target) {
          pick = j;
          break;
        }
      }
      sample.values[i] = candidates[i][pick].logprob;
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

DetectionResult zscore_result(double base_score, std::span<const double> sample_scores, double min_std) {
  if (sample_scores.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "z-score needs at least two contrastive samples");
  }
  const double mu = mean_of(sample_scores);
  double var = 0.0;
  for (double s : sample_scores) var += (s - mu) * (s - mu);
  const double sigma = std::sqrt(var / static_cast<double>(sample_scores.size()));
  if (!(sigma >= min_std)) {
    throw Error(ErrorCode::DegenerateVariance, "contrastive score std below minimum");
  }
  DetectionResult r;
  r.method = Method::SpecDetectPlusPlus;
  r.score = (base_score - mu) / sigma;
  r.raw = ZScoreParts{base_score, mu, sigma, sample_scores.size()};
  return r;
}

DetectionResult specdetect_pp_score(const TokenSignal& signal, const SamplerConfig& cfg) {
  const auto samples = sample_contrastive(signal, cfg);
  const FftPlan plan(signal.size());
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& s : samples) scores.push_back(energy_with_plan(plan, s.values));
  return zscore_result(energy_with_plan(plan, signal.values), scores, cfg.min_std);
}

DetectionResult specdetect_pp_score(const TokenSignal& signal,
                                    std::span<const std::vector<double>> contrast,
                                    const SamplerConfig& cfg) {
  if (signal.values.empty()) throw Error(ErrorCode::EmptySignal, "cannot score an empty signal");
  const FftPlan plan(signal.size());
  std::vector<double> scores;
  scores.reserve(contrast.size());
  for (const auto& seq : contrast) {
    if (seq.size() != signal.size()) {
      throw validation_error("contrast_logprobs", "contrast sequence length differs from logprobs");
    }
    scores.push_back(energy_with_plan(plan, seq));
  }
  return zscore_result(energy_with_plan(plan, signal.values), scores, cfg.min_std);
}

double log_rank_ratio_score(std::span<const double> logprobs, std::span<const double> log_ranks) {
  const double log_likelihood = std::accumulate(logprobs.begin(), logprobs.end(), 0.0);
  const double log_rank = std::accumulate(log_ranks.begin(), log_ranks.end(), 0.0);
  if (log_rank == 0.0) {
    throw Error(ErrorCode::DegenerateRanks, "sum of log ranks is zero (every token has rank 1)");
  }
  return -((-log_likelihood) / log_rank);
}

DetectionResult baseline_score(const TokenSignal& signal, Method method) {
  if (signal.values.empty()) throw Error(ErrorCode::EmptySignal, "cannot score an empty signal");
  auto log_ranks = [&] {
    if (!signal.ranks) {
      Error e(ErrorCode::MissingField, "ranks are required for " + std::string(method_name(method)));
      e.field = "ranks";
      throw e;
    }
    std::vector<double> out;
    out.reserve(signal.ranks->size());
    for (auto r : *signal.ranks) out.push_back(std::log(static_cast<double>(r)));
    return out;
  };

  DetectionResult r;
  r.method = method;
  switch (method) {
    case Method::Likelihood:
      r.score = -mean_of(signal.values);
      break;
    case Method::LogRank:
      r.score = mean_of(log_ranks());
      break;
    case Method::Entropy:
      if (!signal.entropies) {
        Error e(ErrorCode::MissingField, "entropies are required for entropy");
        e.field = "entropies";
        throw e;
      }
      r.score = mean_of(*signal.entropies);
      break;
    case Method::LRR:
      r.score = log_rank_ratio_score(signal.values, log_ranks());
      break;
    default:
      throw Error(ErrorCode::InvalidConfig, std::string(method_name(method)) + " is not a baseline method");
  }
  return r;
}

}  // namespace specdetect
