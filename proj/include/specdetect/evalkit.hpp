#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "specdetect/dataio.hpp"
#include "specdetect/detector.hpp"
#include "specdetect/features.hpp"

namespace specdetect {

// ROC-AUC with human as the positive class and ties counted one half,
// via the Mann-Whitney rank sum with midranks.
double auc(std::span<const double> human_scores, std::span<const double> machine_scores);

// Pearson r; 0 when either column is constant.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;  // row-major, labels.size()^2

  std::size_t size() const noexcept { return labels.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }
  double at(std::string_view a, std::string_view b) const;
};

CorrelationMatrix correlation_matrix(std::vector<std::string> labels,
                                     const std::vector<std::vector<double>>& columns);

// Correlations over the six feature columns; needs at least two vectors.
CorrelationMatrix pearson_matrix(std::span<const FeatureVector> vectors);

struct Failure {
  std::string record_id;
  std::string method;
  std::string error;    // ErrorCode label
  std::string message;
};

struct EvalReport {
  std::map<Method, double> per_method_auc;
  std::map<Method, std::string> auc_unavailable;  // why an AUC could not be formed
  std::size_t n_human = 0;
  std::size_t n_machine = 0;
  std::map<Method, double> runtime_ms_per_record;
  std::vector<Failure> failures;
  std::optional<CorrelationMatrix> correlations;
  std::vector<std::string> provenance;
};

// Scores one record. SpecDetect++ prefers the record's precomputed
// contrast_logprobs; otherwise it samples from top_logprobs with the
// per-record stream derive_stream_seed(cfg.rng_seed, record.id).
DetectionResult score_record(const DatasetRecord& record, Method method, const SamplerConfig& cfg);

// Scores every record with every method. Per-record errors become
// failures and never abort the run. Timing covers scoring only.
EvalReport evaluate(std::span<const DatasetRecord> corpus, std::span<const Method> methods,
                    const SamplerConfig& cfg, bool with_correlations = true);

// key: value lines, one metric per line.
std::string format_report(const EvalReport& report);
nlohmann::ordered_json report_to_json(const EvalReport& report);

struct BenchRow {
  Method method = Method::SpecDetect;
  std::size_t records = 0;
  std::size_t repeats = 0;
  std::size_t failures = 0;
  double total_ms = 0.0;
  double ms_per_record = 0.0;
};

std::vector<BenchRow> benchmark(std::span<const DatasetRecord> corpus, std::span<const Method> methods,
                                const SamplerConfig& cfg, std::size_t repeats = 1);
std::string format_bench(const std::vector<BenchRow>& rows);

// printf("%.12g") without locale surprises.
std::string format_number(double value);

}  // namespace specdetect
