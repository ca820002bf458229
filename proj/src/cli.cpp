#include "specdetect/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <ostream>
#include <sstream>

#include "specdetect/apiclient.hpp"
#include "specdetect/dataio.hpp"
#include "specdetect/detector.hpp"
#include "specdetect/error.hpp"
#include "specdetect/evalkit.hpp"

namespace specdetect::cli {

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kIo = 2;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::HttpError:
    case ErrorCode::AuthError:
    case ErrorCode::RateLimited:
    case ErrorCode::TimeoutError:
      return kIo;
    default:
      return kValidation;
  }
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> methods;
  for (const auto& name : names) {
    const auto m = parse_method(name);
    if (!m) throw Error(ErrorCode::InvalidInput, "unknown method \"" + name + "\"");
    if (std::find(methods.begin(), methods.end(), *m) == methods.end()) methods.push_back(*m);
  }
  if (methods.empty()) throw Error(ErrorCode::InvalidInput, "no methods requested");
  return methods;
}

// Writes to `path`, or to `fallback` when path is empty.
void emit(const std::string& path, const std::string& content, std::ostream& fallback) {
  if (path.empty()) {
    fallback << content;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  f << content;
  f.close();
  if (!f) throw Error(ErrorCode::IoError, "failed to write " + path);
}

nlohmann::ordered_json result_line(const DatasetRecord& rec, const DetectionResult& r) {
  nlohmann::ordered_json j;
  j["id"] = rec.id;
  j["label"] = label_name(rec.label);
  j["method"] = method_name(r.method);
  j["score"] = r.score;
  if (r.raw) {
    j["base_score"] = r.raw->base_score;
    j["sample_mean"] = r.raw->sample_mean;
    j["sample_std"] = r.raw->sample_std;
    j["n_samples"] = r.raw->n_samples;
  }
  return j;
}

nlohmann::ordered_json failure_line(const DatasetRecord& rec, Method method, const Error& e) {
  nlohmann::ordered_json j;
  j["id"] = rec.id;
  j["label"] = label_name(rec.label);
  j["method"] = method_name(method);
  j["error"] = e.label();
  j["message"] = e.what();
  return j;
}

struct SamplerFlags {
  std::size_t n_samples = 100;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--n-samples", n_samples, "Contrastive samples for specdetect++")->capture_default_str();
    cmd->add_option("--seed", seed, "Sampler seed")->capture_default_str();
  }
  SamplerConfig config() const {
    SamplerConfig cfg;
    cfg.n_samples = n_samples;
    cfg.rng_seed = seed;
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral-energy detector for machine-generated text", "specdetect"};
  app.require_subcommand(1);

  // synth
  SyntheticSpec synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic AR(1) corpus");
  synth_cmd->add_option("--out", synth_out, "Output corpus (JSONL)")->required();
  synth_cmd->add_option("--per-class", synth.n_records_per_class, "Records per class")->capture_default_str();
  synth_cmd->add_option("--length", synth.length, "Tokens per record")->capture_default_str();
  synth_cmd->add_option("--human-sigma", synth.human_sigma, "Innovation std, human class")->capture_default_str();
  synth_cmd->add_option("--machine-sigma", synth.machine_sigma, "Innovation std, machine class")->capture_default_str();
  synth_cmd->add_option("--ar", synth.ar_coefficient, "AR(1) coefficient in (-1, 1)")->capture_default_str();
  synth_cmd->add_option("--mean", synth.mean, "Common mean logprob")->capture_default_str();
  synth_cmd->add_option("--candidates", synth.candidates_per_position,
                        "Synthetic top candidates per position (0 = none)")->capture_default_str();
  synth_cmd->add_option("--seed", synth.rng_seed, "Generator seed")->capture_default_str();

  // score
  std::string score_input, score_out, score_method;
  SamplerFlags score_sampler;
  auto* score_cmd = app.add_subcommand("score", "Score every record with one method");
  score_cmd->add_option("--input", score_input, "Corpus (JSONL)")->required();
  score_cmd->add_option("--method", score_method, "specdetect|specdetect++|likelihood|logrank|entropy|lrr")
      ->required();
  score_cmd->add_option("--out", score_out, "Scores (JSONL); stdout when omitted");
  score_sampler.attach(score_cmd);

  // detect
  std::string detect_input, detect_out, detect_method = "specdetect";
  double threshold = 0.0;
  SamplerFlags detect_sampler;
  auto* detect_cmd = app.add_subcommand("detect", "Label records human when score >= threshold");
  detect_cmd->add_option("--input", detect_input, "Corpus (JSONL)")->required();
  detect_cmd->add_option("--threshold", threshold, "Decision threshold on the oriented score")->required();
  detect_cmd->add_option("--method", detect_method, "Scoring method")->capture_default_str();
  detect_cmd->add_option("--out", detect_out, "Verdicts (JSONL); stdout when omitted");
  detect_sampler.attach(detect_cmd);

  // eval
  std::string eval_input, eval_out, eval_json;
  std::vector<std::string> eval_methods{"specdetect"};
  bool no_corr = false;
  SamplerFlags eval_sampler;
  auto* eval_cmd = app.add_subcommand("eval", "AUC, runtime and feature correlations");
  eval_cmd->add_option("--input", eval_input, "Corpus (JSONL)")->required();
  eval_cmd->add_option("--methods", eval_methods, "Comma-separated methods")->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "Also write the text report here");
  eval_cmd->add_option("--json", eval_json, "Write the report as JSON");
  eval_cmd->add_flag("--no-correlations", no_corr, "Skip the feature correlation matrix");
  eval_sampler.attach(eval_cmd);

  // bench
  std::string bench_input;
  std::vector<std::string> bench_methods{"specdetect"};
  std::size_t repeats = 3;
  SamplerFlags bench_sampler;
  auto* bench_cmd = app.add_subcommand("bench", "Per-record scoring time");
  bench_cmd->add_option("--input", bench_input, "Corpus (JSONL)")->required();
  bench_cmd->add_option("--methods", bench_methods, "Comma-separated methods")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--repeats", repeats, "Passes over the corpus")->capture_default_str();
  bench_sampler.attach(bench_cmd);

  // extract
  std::string extract_input, extract_out;
  EndpointConfig endpoint;
  endpoint.top_logprobs_k = 20;
  auto* extract_cmd = app.add_subcommand("extract", "Fetch token logprobs from a completions endpoint");
  extract_cmd->add_option("--input", extract_input, "Texts (JSONL rows {id, label, text})")->required();
  extract_cmd->add_option("--out", extract_out, "Output corpus (JSONL)")->required();
  extract_cmd->add_option("--base-url", endpoint.base_url, std::string("Endpoint base URL (or ") + kBaseUrlEnv + ")");
  extract_cmd->add_option("--model", endpoint.model, "Model name")->required();
  extract_cmd->add_option("--top-k", endpoint.top_logprobs_k, "Candidates per position, 0-20")->capture_default_str();
  extract_cmd->add_option("--max-concurrent", endpoint.max_concurrent, "Requests in flight")->capture_default_str();
  extract_cmd->add_option("--timeout", endpoint.timeout_s, "Per-request timeout, seconds")->capture_default_str();
  extract_cmd->add_option("--retries", endpoint.max_retries, "Retries on 429/5xx")->capture_default_str();
  extract_cmd->add_option("--backoff-ms", endpoint.backoff_base_ms, "Base backoff delay")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return kValidation;
  }

  try {
    if (*synth_cmd) {
      write_corpus(generate_synthetic(synth), synth_out);
      err << "synth: wrote " << 2 * synth.n_records_per_class << " records to " << synth_out << '\n';
      return kOk;
    }

    if (*score_cmd || *detect_cmd) {
      const bool detecting = static_cast<bool>(*detect_cmd);
      const auto methods = parse_methods({detecting ? detect_method : score_method});
      const Method method = methods.front();
      const SamplerConfig cfg = (detecting ? detect_sampler : score_sampler).config();
      const auto corpus = read_corpus(detecting ? detect_input : score_input);
      std::ostringstream lines;
      std::size_t failures = 0, human = 0, machine = 0;
      for (const auto& rec : corpus) {
        try {
          const auto r = score_record(rec, method, cfg);
          auto j = result_line(rec, r);
          if (detecting) {
            const bool is_human = r.score >= threshold;
            j["verdict"] = is_human ? "human" : "machine";
            (is_human ? human : machine) += 1;
          }
          lines << j.dump() << '\n';
        } catch (const Error& e) {
          ++failures;
          lines << failure_line(rec, method, e).dump() << '\n';
        }
      }
      emit(detecting ? detect_out : score_out, lines.str(), out);
      err << (detecting ? "detect" : "score") << ": " << corpus.size() << " records, " << failures << " failures";
      if (detecting) err << ", " << human << " human, " << machine << " machine";
      err << '\n';
      return kOk;
    }

    if (*eval_cmd) {
      const auto methods = parse_methods(eval_methods);
      const SamplerConfig cfg = eval_sampler.config();
      const auto corpus = read_corpus(eval_input);
      const auto report = evaluate(corpus, methods, cfg, !no_corr);
      const std::string text = format_report(report);
      out << text;
      if (!eval_out.empty()) emit(eval_out, text, out);
      if (!eval_json.empty()) emit(eval_json, report_to_json(report).dump(2) + "\n", out);
      return kOk;
    }

    if (*bench_cmd) {
      const auto methods = parse_methods(bench_methods);
      const auto corpus = read_corpus(bench_input);
      out << format_bench(benchmark(corpus, methods, bench_sampler.config(), repeats));
      return kOk;
    }

    if (*extract_cmd) {
      apply_environment(endpoint);
      const auto items = read_text_items(extract_input);
      const CompletionsClient client(endpoint);
      const auto report = client.fetch_corpus(items);
      write_corpus(report.records, extract_out);
      for (const auto& f : report.failures) err << "extract failure: " << f.id << ' ' << f.error << ": " << f.message << '\n';
      const auto m = client.metrics();
      err << "extract: " << report.records.size() << " records, " << report.failures.size() << " failures, "
          << m.requests << " requests, " << m.retries << " retries\n";
      if (!items.empty() && report.records.empty()) return kIo;
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.label() << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
  err << app.help();
  return kValidation;
}

}  // namespace specdetect::cli
