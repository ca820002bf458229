#include "specdetect/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "specdetect/error.hpp"

namespace specdetect {

void TokenSignal::validate() const {
  if (values.empty()) throw Error(ErrorCode::EmptySignal, "signal has no values");
  const auto n = values.size();
  auto check_len = [n](std::size_t len, const char* field) {
    if (len != n) {
      throw validation_error(field, "length " + std::to_string(len) + " != " +
                                        std::to_string(n) + " values");
    }
  };
  if (tokens) check_len(tokens->size(), "tokens");
  if (ranks) {
    check_len(ranks->size(), "ranks");
    for (auto r : *ranks) {
      if (r == 0) throw validation_error("ranks", "ranks are 1-based");
    }
  }
  if (entropies) {
    check_len(entropies->size(), "entropies");
    for (double h : *entropies) {
      if (!(h >= 0.0) || !std::isfinite(h)) {
        throw validation_error("entropies", "entropy must be finite and >= 0");
      }
    }
  }
  if (top_candidates) {
    check_len(top_candidates->size(), "top_candidates");
    for (const auto& list : *top_candidates) {
      if (list.empty()) throw validation_error("top_candidates", "empty candidate list");
      for (std::size_t j = 1; j < list.size(); ++j) {
        if (list[j].logprob > list[j - 1].logprob) {
          throw validation_error("top_candidates", "candidates not sorted by descending logprob");
        }
      }
    }
  }
}

TokenSignal make_signal(std::vector<double> values) {
  TokenSignal s;
  s.values = std::move(values);
  return s;
}

CenteredSignal center(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptySignal, "cannot center an empty signal");
  // Kahan summation.
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double mean = sum / static_cast<double>(values.size());
  // A constant signal centers to exact zeros, not rounding residue.
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    mean = values.front();
  }
  CenteredSignal out;
  out.original_mean = mean;
  out.values.reserve(values.size());
  for (double v : values) out.values.push_back(v - mean);
  return out;
}

CenteredSignal center(const TokenSignal& signal) { return center(std::span<const double>(signal.values)); }

}  // namespace specdetect
