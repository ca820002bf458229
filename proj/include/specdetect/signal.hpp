#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace specdetect {

// One entry of a truncated conditional distribution.
struct Candidate {
  std::string token;
  double logprob = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// A text's per-token natural-log probabilities treated as a discrete-time
// signal. values[i] is log p(token_{i+1} | prefix). Optional metadata is
// parallel to values when present.
struct TokenSignal {
  std::vector<double> values;
  std::optional<std::vector<std::string>> tokens;
  std::optional<std::vector<std::uint64_t>> ranks;  // 1-based
  std::optional<std::vector<double>> entropies;     // nats
  // Sorted by descending logprob; each list non-empty.
  std::optional<std::vector<std::vector<Candidate>>> top_candidates;

  std::size_t size() const noexcept { return values.size(); }

  // Throws Error(EmptySignal) or a ValidationError naming the field.
  void validate() const;
};

TokenSignal make_signal(std::vector<double> values);

// Zero-mean copy of a signal; the removed mean is kept for reference.
struct CenteredSignal {
  std::vector<double> values;
  double original_mean = 0.0;

  std::size_t size() const noexcept { return values.size(); }
};

CenteredSignal center(std::span<const double> values);
CenteredSignal center(const TokenSignal& signal);

}  // namespace specdetect
