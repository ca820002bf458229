#include "specdetect/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "specdetect/error.hpp"
#include "specdetect/rng.hpp"

namespace specdetect {

namespace {

using Clock = std::chrono::steady_clock;

void require_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteScore, "scores must be finite");
  }
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

double auc(std::span<const double> human_scores, std::span<const double> machine_scores) {
  if (human_scores.empty() || machine_scores.empty()) {
    throw Error(ErrorCode::EmptyClass, "AUC needs at least one score per class");
  }
  require_finite(human_scores);
  require_finite(machine_scores);

  struct Entry {
    double score;
    bool human;
  };
  std::vector<Entry> all;
  all.reserve(human_scores.size() + machine_scores.size());
  for (double s : human_scores) all.push_back({s, true});
  for (double s : machine_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Sum of human ranks with midranks for ties; ranks are 1-based.
  double human_rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t humans = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      humans += all[j].human ? 1 : 0;
      ++j;
    }
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    human_rank_sum += midrank * static_cast<double>(humans);
    i = j;
  }
  const double nh = static_cast<double>(human_scores.size());
  const double nm = static_cast<double>(machine_scores.size());
  const double u = human_rank_sum - nh * (nh + 1.0) / 2.0;
  return u / (nh * nm);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidInput, "pearson columns differ in length");
  if (x.size() < 2) throw Error(ErrorCode::TooFewSamples, "pearson needs at least two samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double CorrelationMatrix::at(std::string_view a, std::string_view b) const {
  auto index = [this](std::string_view name) {
    const auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) throw Error(ErrorCode::InvalidInput, "unknown column " + std::string(name));
    return static_cast<std::size_t>(it - labels.begin());
  };
  return at(index(a), index(b));
}

CorrelationMatrix correlation_matrix(std::vector<std::string> labels,
                                     const std::vector<std::vector<double>>& columns) {
  if (labels.size() != columns.size()) throw Error(ErrorCode::InvalidInput, "one label per column required");
  const std::size_t k = columns.size();
  CorrelationMatrix m;
  m.labels = std::move(labels);
  m.values.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    m.values[i * k + i] = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double r = pearson(columns[i], columns[j]);
      m.values[i * k + j] = r;
      m.values[j * k + i] = r;
    }
  }
  return m;
}

CorrelationMatrix pearson_matrix(std::span<const FeatureVector> vectors) {
  if (vectors.size() < 2) throw Error(ErrorCode::TooFewSamples, "correlation needs at least two feature vectors");
  std::vector<std::vector<double>> columns(FeatureVector::kSize);
  for (const auto& v : vectors) {
    const auto a = v.as_array();
    for (std::size_t c = 0; c < a.size(); ++c) columns[c].push_back(a[c]);
  }
  std::vector<std::string> labels(FeatureVector::kNames.begin(), FeatureVector::kNames.end());
  return correlation_matrix(std::move(labels), columns);
}

DetectionResult score_record(const DatasetRecord& record, Method method, const SamplerConfig& cfg) {
  const TokenSignal signal = record.to_signal();
  DetectionResult r;
  switch (method) {
    case Method::SpecDetect:
      r = specdetect_score(signal);
      break;
    case Method::SpecDetectPlusPlus:
      if (record.contrast_logprobs && !record.contrast_logprobs->empty()) {
        r = specdetect_pp_score(signal, *record.contrast_logprobs, cfg);
      } else {
        SamplerConfig per_record = cfg;
        per_record.rng_seed = derive_stream_seed(cfg.rng_seed, record.id);
        r = specdetect_pp_score(signal, per_record);
      }
      break;
    default:
      r = baseline_score(signal, method);
      break;
  }
  if (!std::isfinite(r.score)) throw Error(ErrorCode::NonFiniteScore, "score is not finite");
  return r;
}

EvalReport evaluate(std::span<const DatasetRecord> corpus, std::span<const Method> methods,
                    const SamplerConfig& cfg, bool with_correlations) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no records");
  EvalReport report;
  std::set<std::string> provenance;
  for (const auto& rec : corpus) {
    (rec.label == Label::Human ? report.n_human : report.n_machine) += 1;
    const auto it = rec.extra.find("provenance");
    provenance.insert(it != rec.extra.end() && it->is_string() ? it->get<std::string>() : "unspecified");
  }
  report.provenance.assign(provenance.begin(), provenance.end());

  for (Method method : methods) {
    if (report.runtime_ms_per_record.count(method)) continue;
    std::vector<double> human, machine;
    const auto start = Clock::now();
    for (const auto& rec : corpus) {
      try {
        const double s = score_record(rec, method, cfg).score;
        (rec.label == Label::Human ? human : machine).push_back(s);
      } catch (const Error& e) {
        report.failures.push_back({rec.id, std::string(method_name(method)), std::string(e.label()), e.what()});
      }
    }
    report.runtime_ms_per_record[method] = elapsed_ms(start) / static_cast<double>(corpus.size());
    try {
      report.per_method_auc[method] = auc(human, machine);
    } catch (const Error& e) {
      report.auc_unavailable[method] = std::string(e.label()) + ": " + e.what();
    }
  }

  if (with_correlations && corpus.size() >= 2) {
    std::vector<FeatureVector> vectors;
    vectors.reserve(corpus.size());
    for (const auto& rec : corpus) vectors.push_back(feature_vector(rec.to_signal()));
    report.correlations = pearson_matrix(vectors);
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "records: " << report.n_human + report.n_machine << '\n';
  out << "n_human: " << report.n_human << '\n';
  out << "n_machine: " << report.n_machine << '\n';
  out << "timing: scoring only, logprob extraction excluded\n";
  out << "provenance:";
  for (const auto& p : report.provenance) out << ' ' << p;
  out << '\n';
  for (const auto& [method, ms] : report.runtime_ms_per_record) {
    const auto name = method_name(method);
    if (auto it = report.per_method_auc.find(method); it != report.per_method_auc.end()) {
      out << "auc." << name << ": " << format_number(it->second) << '\n';
    } else {
      out << "auc." << name << ": unavailable (" << report.auc_unavailable.at(method) << ")\n";
    }
    out << "runtime_ms_per_record." << name << ": " << format_number(ms) << '\n';
  }
  out << "failures: " << report.failures.size() << '\n';
  for (const auto& f : report.failures) {
    out << "failure: " << f.record_id << ' ' << f.method << ' ' << f.error << ": " << f.message << '\n';
  }
  if (report.correlations) {
    const auto& m = *report.correlations;
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = i + 1; j < m.size(); ++j) {
        out << "corr." << m.labels[i] << '.' << m.labels[j] << ": " << format_number(m.at(i, j)) << '\n';
      }
    }
  }
  return out.str();
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["records"] = report.n_human + report.n_machine;
  j["n_human"] = report.n_human;
  j["n_machine"] = report.n_machine;
  j["timing"] = "scoring only, logprob extraction excluded";
  j["provenance"] = report.provenance;
  j["auc"] = nlohmann::ordered_json::object();
  j["auc_unavailable"] = nlohmann::ordered_json::object();
  j["runtime_ms_per_record"] = nlohmann::ordered_json::object();
  for (const auto& [method, ms] : report.runtime_ms_per_record) {
    const std::string name(method_name(method));
    if (auto it = report.per_method_auc.find(method); it != report.per_method_auc.end()) {
      j["auc"][name] = it->second;
    } else {
      j["auc_unavailable"][name] = report.auc_unavailable.at(method);
    }
    j["runtime_ms_per_record"][name] = ms;
  }
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : report.failures) {
    j["failures"].push_back({{"id", f.record_id}, {"method", f.method}, {"error", f.error}, {"message", f.message}});
  }
  if (report.correlations) {
    j["correlations"] = {{"labels", report.correlations->labels}, {"values", report.correlations->values}};
  }
  return j;
}

std::vector<BenchRow> benchmark(std::span<const DatasetRecord> corpus, std::span<const Method> methods,
                                const SamplerConfig& cfg, std::size_t repeats) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no records");
  repeats = std::max<std::size_t>(repeats, 1);
  std::vector<BenchRow> rows;
  for (Method method : methods) {
    BenchRow row;
    row.method = method;
    row.records = corpus.size();
    row.repeats = repeats;
    volatile double sink = 0.0;
    const auto start = Clock::now();
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      for (const auto& rec : corpus) {
        try {
          sink = sink + score_record(rec, method, cfg).score;
        } catch (const Error&) {
          if (rep == 0) ++row.failures;
        }
      }
    }
    row.total_ms = elapsed_ms(start);
    row.ms_per_record = row.total_ms / static_cast<double>(corpus.size() * repeats);
    rows.push_back(row);
  }
  return rows;
}

std::string format_bench(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %8s %8s %9s %12s %14s\n", "method", "records", "repeats", "failures",
                "total_ms", "ms_per_record");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-14s %8zu %8zu %9zu %12.3f %14.6f\n",
                  std::string(method_name(r.method)).c_str(), r.records, r.repeats, r.failures, r.total_ms,
                  r.ms_per_record);
    out << line;
  }
  out << "timing: scoring only, logprob extraction excluded\n";
  return out.str();
}

}  // namespace specdetect
