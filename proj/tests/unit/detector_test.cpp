#include "specdetect/detector.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>

#include "specdetect/error.hpp"
#include "test_support.hpp"

using namespace specdetect;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidInput;
}

TokenSignal with_candidates(std::vector<double> values, std::vector<std::vector<Candidate>> lists) {
  TokenSignal s = make_signal(std::move(values));
  s.top_candidates = std::move(lists);
  return s;
}

// Independent replay of the sampler contract plus the half-spectrum energy.
double oracle_energy(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  std::vector<double> c;
  for (double v : x) c.push_back(v - mean);
  const auto X = test_support::reference_dft(c);
  long double e = 0.0L;
  for (std::size_t k = 0; k <= x.size() / 2; ++k) e += std::norm(X[k]);
  return static_cast<double>(e);
}

double oracle_zscore(const TokenSignal& s, std::size_t n_samples, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  const auto& lists = *s.top_candidates;
  std::vector<double> scores;
  for (std::size_t sample = 0; sample < n_samples; ++sample) {
    std::vector<double> seq;
    for (const auto& list : lists) {
      const double u = static_cast<double>(engine() >> 11) / 9007199254740992.0;
      std::vector<double> w;
      double total = 0.0;
      for (const auto& c : list) {
        w.push_back(std::exp(c.logprob - list[0].logprob));
        total += w.back();
      }
      double run = 0.0;
      std::size_t pick = list.size() - 1;
      for (std::size_t j = 0; j < list.size(); ++j) {
        run += w[j];
        if (run > u * total) {
          pick = j;
          break;
        }
      }
      seq.push_back(list[pick].logprob);
    }
    scores.push_back(oracle_energy(seq));
  }
  double mu = 0.0;
  for (double v : scores) mu += v;
  mu /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double v : scores) var += (v - mu) * (v - mu);
  const double sigma = std::sqrt(var / static_cast<double>(scores.size()));
  return (oracle_energy(s.values) - mu) / sigma;
}

TokenSignal toy_record() {
  return with_candidates({-0.3, -2.9, -1.2}, {{{"a", -0.3}, {"b", -1.6}, {"c", -2.5}},
                                              {{"d", -0.7}, {"e", -1.1}, {"f", -2.9}},
                                              {{"g", -0.2}, {"h", -1.2}, {"i", -4.0}}});
}

}  // namespace

TEST(MethodNames, RoundTrip) {
  for (Method m : kAllMethods) EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_FALSE(parse_method("lastde").has_value());
}

TEST(SpecDetect, Examples) {
  EXPECT_NEAR(specdetect_score(make_signal({-1, -3})).score, 4.0, 1e-12);
  EXPECT_EQ(specdetect_score(make_signal({-2, -2, -2, -2, -2})).score, 0.0);
  EXPECT_NEAR(specdetect_score(make_signal({2, 4, 0, 2})).score, 24.0, 1e-12);
  const auto r = specdetect_score(make_signal({-1, -3}));
  EXPECT_EQ(r.method, Method::SpecDetect);
  EXPECT_FALSE(r.raw.has_value());
}

TEST(SpecDetect, EmptyThrows) {
  EXPECT_EQ(code_of([] { specdetect_score(make_signal({})); }), ErrorCode::EmptySignal);
}

TEST(Sampler, DeterministicForSeed) {
  const auto s = with_candidates({std::log(0.5), std::log(0.4)},
                                 {{{"a", std::log(0.5)}, {"b", std::log(0.3)}},
                                  {{"a", std::log(0.4)}, {"b", std::log(0.35)}}});
  SamplerConfig cfg;
  cfg.n_samples = 20;
  cfg.rng_seed = 77;
  const auto first = sample_contrastive(s, cfg);
  const auto second = sample_contrastive(s, cfg);
  ASSERT_EQ(first.size(), 20u);
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i].values, second[i].values);
  cfg.rng_seed = 78;
  const auto other = sample_contrastive(s, cfg);
  bool differs = false;
  for (std::size_t i = 0; i < first.size(); ++i) differs |= first[i].values != other[i].values;
  EXPECT_TRUE(differs);
}

TEST(Sampler, SingleCandidateIsForcedAndDegenerate) {
  const auto s = with_candidates({-1.0, -2.0, -0.5}, {{{"x", -1.0}}, {{"y", -2.0}}, {{"z", -0.5}}});
  SamplerConfig cfg;
  cfg.n_samples = 10;
  for (const auto& sample : sample_contrastive(s, cfg)) {
    EXPECT_EQ(sample.values, (std::vector<double>{-1.0, -2.0, -0.5}));
  }
  EXPECT_EQ(code_of([&] { specdetect_pp_score(s, cfg); }), ErrorCode::DegenerateVariance);
}

TEST(Sampler, FrequenciesMatchRenormalizedDistribution) {
  const std::vector<Candidate> list{{"hi", std::log(0.75)}, {"lo", std::log(0.25)}};
  const auto s = with_candidates({std::log(0.75), std::log(0.25)}, {list, list});
  SamplerConfig cfg;
  cfg.n_samples = 10000;
  cfg.rng_seed = 123;
  const auto samples = sample_contrastive(s, cfg);
  for (std::size_t pos = 0; pos < 2; ++pos) {
    std::size_t hi = 0;
    for (const auto& x : samples) hi += x.values[pos] == std::log(0.75) ? 1 : 0;
    const double freq = static_cast<double>(hi) / 10000.0;
    EXPECT_NEAR(freq, 0.75, 0.02);
  }
}

TEST(Sampler, TruncatedListIsRenormalized) {
  // Candidates cover only half of the mass; relative odds stay 3:1.
  const std::vector<Candidate> list{{"a", std::log(0.375)}, {"b", std::log(0.125)}};
  const auto s = with_candidates({std::log(0.375)}, {list});
  SamplerConfig cfg;
  cfg.n_samples = 10000;
  cfg.rng_seed = 5;
  std::size_t a = 0;
  for (const auto& x : sample_contrastive(s, cfg)) a += x.values[0] == std::log(0.375) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(a) / 10000.0, 0.75, 0.02);
}

TEST(Sampler, Errors) {
  SamplerConfig cfg;
  EXPECT_EQ(code_of([&] { sample_contrastive(make_signal({-1.0, -2.0}), cfg); }),
            ErrorCode::MissingDistributions);
  const double ninf = -std::numeric_limits<double>::infinity();
  const auto bad = with_candidates({-1.0}, {{{"a", ninf}, {"b", ninf}}});
  EXPECT_EQ(code_of([&] { sample_contrastive(bad, cfg); }), ErrorCode::InsufficientSupport);
  cfg.n_samples = 1;
  EXPECT_EQ(code_of([&] { sample_contrastive(toy_record(), cfg); }), ErrorCode::InvalidConfig);
}

TEST(SpecDetectPP, Arithmetic) {
  const std::vector<double> scores{2.0, 4.0};
  const auto r = zscore_result(5.0, scores);
  EXPECT_EQ(r.method, Method::SpecDetectPlusPlus);
  EXPECT_DOUBLE_EQ(r.score, 2.0);
  ASSERT_TRUE(r.raw.has_value());
  EXPECT_DOUBLE_EQ(r.raw->sample_mean, 3.0);
  EXPECT_DOUBLE_EQ(r.raw->sample_std, 1.0);
  EXPECT_EQ(r.raw->n_samples, 2u);
  EXPECT_EQ(zscore_result(3.0, scores).score, 0.0);
}

TEST(SpecDetectPP, MatchesReplayedRngOracle) {
  const auto s = toy_record();
  SamplerConfig cfg;
  cfg.n_samples = 100;
  cfg.rng_seed = 20240917;
  const auto r = specdetect_pp_score(s, cfg);
  const double expected = oracle_zscore(s, cfg.n_samples, cfg.rng_seed);
  EXPECT_NEAR(r.score, expected, 1e-9 * std::max(1.0, std::fabs(expected)));
  ASSERT_TRUE(r.raw.has_value());
  EXPECT_NEAR(r.score, (r.raw->base_score - r.raw->sample_mean) / r.raw->sample_std, 1e-12);
}

TEST(SpecDetectPP, ShiftInvariance) {
  auto s = toy_record();
  SamplerConfig cfg;
  cfg.rng_seed = 9;
  const auto base = specdetect_pp_score(s, cfg);
  for (auto& v : s.values) v -= 3.5;
  for (auto& list : *s.top_candidates) {
    for (auto& c : list) c.logprob -= 3.5;
  }
  const auto shifted = specdetect_pp_score(s, cfg);
  EXPECT_NEAR(shifted.score, base.score, 1e-9 * std::max(1.0, std::fabs(base.score)));
  EXPECT_NEAR(specdetect_score(s).score, base.raw->base_score, 1e-9 * base.raw->base_score);
}

TEST(SpecDetectPP, DeterministicSerialization) {
  SamplerConfig cfg;
  cfg.rng_seed = 42;
  char a[64], b[64];
  std::snprintf(a, sizeof a, "%.12g", specdetect_pp_score(toy_record(), cfg).score);
  std::snprintf(b, sizeof b, "%.12g", specdetect_pp_score(toy_record(), cfg).score);
  EXPECT_STREQ(a, b);
}

TEST(SpecDetectPP, PrecomputedContrastSet) {
  const auto s = make_signal({-1.0, -3.0});  // S = 4
  const std::vector<std::vector<double>> contrast{{-1.0, -2.0}, {-2.0, -4.0}};
  // Contrast energies 1 and 4: mean 2.5, std 1.5.
  const auto r = specdetect_pp_score(s, contrast, SamplerConfig{});
  EXPECT_NEAR(r.score, 1.0, 1e-12);
  const std::vector<std::vector<double>> wrong{{-1.0}};
  EXPECT_EQ(code_of([&] { specdetect_pp_score(s, wrong, SamplerConfig{}); }), ErrorCode::ValidationError);
}

TEST(Baselines, Examples) {
  EXPECT_DOUBLE_EQ(baseline_score(make_signal({-1, -2, -3}), Method::Likelihood).score, 2.0);
  TokenSignal s = make_signal({-1, -2, -3});
  s.ranks = std::vector<std::uint64_t>{1, 1, 1};
  EXPECT_EQ(baseline_score(s, Method::LogRank).score, 0.0);
  const std::vector<double> lp{-1.0, -1.0};
  const std::vector<double> log_ranks{1.0, 1.0};  // ranks e, e
  EXPECT_DOUBLE_EQ(log_rank_ratio_score(lp, log_ranks), -1.0);
}

TEST(Baselines, OrientedValues) {
  TokenSignal s = make_signal({-0.5, -2.0});
  s.ranks = std::vector<std::uint64_t>{1, 4};
  s.entropies = std::vector<double>{0.2, 1.0};
  EXPECT_DOUBLE_EQ(baseline_score(s, Method::LogRank).score, std::log(4.0) / 2.0);
  EXPECT_DOUBLE_EQ(baseline_score(s, Method::Entropy).score, 0.6);
  EXPECT_DOUBLE_EQ(baseline_score(s, Method::LRR).score, -2.5 / std::log(4.0));
}

TEST(Baselines, Errors) {
  const auto s = make_signal({-1.0, -2.0});
  EXPECT_EQ(code_of([&] { baseline_score(s, Method::LogRank); }), ErrorCode::MissingField);
  EXPECT_EQ(code_of([&] { baseline_score(s, Method::LRR); }), ErrorCode::MissingField);
  EXPECT_EQ(code_of([&] { baseline_score(s, Method::Entropy); }), ErrorCode::MissingField);
  TokenSignal ones = s;
  ones.ranks = std::vector<std::uint64_t>{1, 1};
  EXPECT_EQ(code_of([&] { baseline_score(ones, Method::LRR); }), ErrorCode::DegenerateRanks);
  EXPECT_EQ(code_of([&] { baseline_score(s, Method::SpecDetect); }), ErrorCode::InvalidConfig);
}

TEST(Baselines, SanityOnRandomRecords) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::uint64_t> rank(1, 5000);
  std::uniform_real_distribution<double> ent(0.0, 8.0);
  for (int trial = 0; trial < 100; ++trial) {
    TokenSignal s = make_signal(test_support::random_signal(rng, 40, 2.0));
    for (auto& v : s.values) v = -std::fabs(v);
    std::vector<std::uint64_t> ranks;
    std::vector<double> ents;
    for (int i = 0; i < 40; ++i) {
      ranks.push_back(rank(rng));
      ents.push_back(ent(rng));
    }
    s.ranks = ranks;
    s.entropies = ents;
    EXPECT_TRUE(std::isfinite(baseline_score(s, Method::Likelihood).score));
    EXPECT_GE(baseline_score(s, Method::LogRank).score, 0.0);
    EXPECT_GE(baseline_score(s, Method::Entropy).score, 0.0);
  }
}
