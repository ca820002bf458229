#include "specdetect/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "specdetect/error.hpp"
#include "specdetect/rng.hpp"

namespace specdetect {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kKnownKeys[] = {"id",       "label",     "source_model", "text",
                                      "tokens",   "logprobs",  "ranks",        "entropies",
                                      "top_logprobs", "contrast_logprobs"};

bool is_known_key(const std::string& key) {
  for (const char* k : kKnownKeys) {
    if (key == k) return true;
  }
  return false;
}

double finite_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw validation_error(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw validation_error(field, "expected a finite number");
  return d;
}

std::vector<double> number_array(const json& v, const std::string& field) {
  if (!v.is_array()) throw validation_error(field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(finite_number(x, field));
  return out;
}

std::string string_value(const json& v, const std::string& field) {
  if (!v.is_string()) throw validation_error(field, "expected a string");
  return v.get<std::string>();
}

}  // namespace

std::string_view label_name(Label label) noexcept { return label == Label::Human ? "human" : "machine"; }

std::optional<Label> parse_label(std::string_view name) noexcept {
  if (name == "human") return Label::Human;
  if (name == "machine") return Label::Machine;
  return std::nullopt;
}

TokenSignal DatasetRecord::to_signal() const {
  TokenSignal s;
  s.values = logprobs;
  s.tokens = tokens;
  s.ranks = ranks;
  s.entropies = entropies;
  s.top_candidates = top_logprobs;
  return s;
}

void validate_record(const DatasetRecord& record) {
  if (record.id.empty()) throw validation_error("id", "id must be non-empty");
  if (record.logprobs.empty()) throw validation_error("logprobs", "logprobs must be non-empty");
  for (double v : record.logprobs) {
    if (!std::isfinite(v)) throw validation_error("logprobs", "logprobs must be finite");
  }
  const auto n = record.logprobs.size();
  auto check_len = [n](std::size_t len, const char* field) {
    if (len != n) {
      throw validation_error(field, "length " + std::to_string(len) + " does not match " +
                                        std::to_string(n) + " logprobs");
    }
  };
  if (record.tokens) check_len(record.tokens->size(), "tokens");
  if (record.ranks) {
    check_len(record.ranks->size(), "ranks");
    for (auto r : *record.ranks) {
      if (r == 0) throw validation_error("ranks", "ranks must be positive integers");
    }
  }
  if (record.entropies) {
    check_len(record.entropies->size(), "entropies");
    for (double h : *record.entropies) {
      if (!std::isfinite(h) || h < 0.0) throw validation_error("entropies", "entropies must be finite and >= 0");
    }
  }
  if (record.top_logprobs) {
    check_len(record.top_logprobs->size(), "top_logprobs");
    for (const auto& list : *record.top_logprobs) {
      if (list.empty()) throw validation_error("top_logprobs", "candidate list must be non-empty");
      for (std::size_t j = 0; j < list.size(); ++j) {
        if (!std::isfinite(list[j].logprob)) throw validation_error("top_logprobs", "logprob must be finite");
        if (j > 0 && list[j].logprob > list[j - 1].logprob) {
          throw validation_error("top_logprobs", "candidates must be sorted by descending logprob");
        }
      }
    }
  }
  if (record.contrast_logprobs) {
    for (const auto& seq : *record.contrast_logprobs) {
      check_len(seq.size(), "contrast_logprobs");
      for (double v : seq) {
        if (!std::isfinite(v)) throw validation_error("contrast_logprobs", "values must be finite");
      }
    }
  }
  if (!record.extra.is_object()) throw validation_error("extra", "unknown keys must form an object");
}

DatasetRecord record_from_json(const json& j) {
  if (!j.is_object()) throw validation_error("record", "expected a JSON object");
  DatasetRecord r;
  auto require = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) throw validation_error(key, "missing required field");
    return *it;
  };
  r.id = string_value(require("id"), "id");
  const auto label = parse_label(string_value(require("label"), "label"));
  if (!label) throw validation_error("label", "label must be \"human\" or \"machine\"");
  r.label = *label;
  if (auto it = j.find("source_model"); it != j.end()) r.source_model = string_value(*it, "source_model");
  r.logprobs = number_array(require("logprobs"), "logprobs");

  if (auto it = j.find("text"); it != j.end() && !it->is_null()) r.text = string_value(*it, "text");
  if (auto it = j.find("tokens"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw validation_error("tokens", "expected an array of strings");
    std::vector<std::string> toks;
    for (const auto& t : *it) toks.push_back(string_value(t, "tokens"));
    r.tokens = std::move(toks);
  }
  if (auto it = j.find("ranks"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw validation_error("ranks", "expected an array of positive integers");
    std::vector<std::uint64_t> ranks;
    for (const auto& x : *it) {
      if (!x.is_number_integer() || x.get<std::int64_t>() < 1) {
        throw validation_error("ranks", "ranks must be positive integers");
      }
      ranks.push_back(x.get<std::uint64_t>());
    }
    r.ranks = std::move(ranks);
  }
  if (auto it = j.find("entropies"); it != j.end() && !it->is_null()) r.entropies = number_array(*it, "entropies");
  if (auto it = j.find("top_logprobs"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw validation_error("top_logprobs", "expected an array of candidate lists");
    std::vector<std::vector<Candidate>> lists;
    for (const auto& pos : *it) {
      if (!pos.is_array()) throw validation_error("top_logprobs", "expected a candidate list");
      std::vector<Candidate> list;
      for (const auto& c : pos) {
        if (!c.is_object() || !c.contains("token") || !c.contains("logprob")) {
          throw validation_error("top_logprobs", "candidates need \"token\" and \"logprob\"");
        }
        list.push_back({string_value(c["token"], "top_logprobs"), finite_number(c["logprob"], "top_logprobs")});
      }
      lists.push_back(std::move(list));
    }
    r.top_logprobs = std::move(lists);
  }
  if (auto it = j.find("contrast_logprobs"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw validation_error("contrast_logprobs", "expected an array of sequences");
    std::vector<std::vector<double>> seqs;
    for (const auto& seq : *it) seqs.push_back(number_array(seq, "contrast_logprobs"));
    r.contrast_logprobs = std::move(seqs);
  }
  for (const auto& [key, value] : j.items()) {
    if (!is_known_key(key)) r.extra[key] = value;
  }
  validate_record(r);
  return r;
}

ordered_json record_to_json(const DatasetRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["label"] = label_name(r.label);
  j["source_model"] = r.source_model;
  if (r.text) j["text"] = *r.text;
  if (r.tokens) j["tokens"] = *r.tokens;
  j["logprobs"] = r.logprobs;
  if (r.ranks) j["ranks"] = *r.ranks;
  if (r.entropies) j["entropies"] = *r.entropies;
  if (r.top_logprobs) {
    ordered_json lists = ordered_json::array();
    for (const auto& list : *r.top_logprobs) {
      ordered_json pos = ordered_json::array();
      for (const auto& c : list) pos.push_back({{"token", c.token}, {"logprob", c.logprob}});
      lists.push_back(std::move(pos));
    }
    j["top_logprobs"] = std::move(lists);
  }
  if (r.contrast_logprobs) j["contrast_logprobs"] = *r.contrast_logprobs;
  for (const auto& [key, value] : r.extra.items()) j[key] = ordered_json::parse(value.dump());
  return j;
}

std::vector<DatasetRecord> parse_corpus(std::istream& in) {
  std::vector<DatasetRecord> records;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      Error err(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
      err.line = line_no;
      throw err;
    }
    DatasetRecord r;
    try {
      r = record_from_json(j);
    } catch (Error& e) {
      Error err(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
      err.line = line_no;
      err.field = e.field;
      throw err;
    }
    if (!ids.insert(r.id).second) {
      Error err(ErrorCode::DuplicateId, "line " + std::to_string(line_no) + ": duplicate id \"" + r.id + "\"");
      err.line = line_no;
      err.field = "id";
      throw err;
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<DatasetRecord> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_corpus(in);
}

void write_corpus(const std::vector<DatasetRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed");
}

void write_corpus(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_corpus(records, out);
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "failed to write " + path.string());
}

void SyntheticSpec::validate() const {
  if (n_records_per_class == 0) throw Error(ErrorCode::InvalidConfig, "n_records_per_class must be >= 1");
  if (length == 0) throw Error(ErrorCode::InvalidConfig, "length must be >= 1");
  if (!(human_sigma >= 0.0) || !(machine_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "sigmas must be non-negative");
  }
  if (!(ar_coefficient > -1.0 && ar_coefficient < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "ar_coefficient must lie in (-1, 1)");
  }
  if (!std::isfinite(mean)) throw Error(ErrorCode::InvalidConfig, "mean must be finite");
  if (candidates_per_position == 1) {
    throw Error(ErrorCode::InvalidConfig, "candidates_per_position must be 0 or >= 2");
  }
}

std::vector<DatasetRecord> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<DatasetRecord> out;
  out.reserve(2 * spec.n_records_per_class);
  const double stationary = 1.0 / std::sqrt(1.0 - spec.ar_coefficient * spec.ar_coefficient);
  for (Label label : {Label::Human, Label::Machine}) {
    const double sigma = label == Label::Human ? spec.human_sigma : spec.machine_sigma;
    for (std::size_t i = 0; i < spec.n_records_per_class; ++i) {
      std::ostringstream id;
      id << label_name(label) << '-' << i;
      DatasetRecord r;
      r.id = id.str();
      r.label = label;
      r.source_model = "synthetic-ar1";
      SeededRng rng(derive_stream_seed(spec.rng_seed, r.id));
      r.logprobs.resize(spec.length);
      std::vector<std::vector<Candidate>> lists;
      double prev = 0.0;
      for (std::size_t t = 0; t < spec.length; ++t) {
        const double predicted = t == 0 ? 0.0 : spec.ar_coefficient * prev;
        const double scale = t == 0 ? stationary : 1.0;
        const double x = predicted + sigma * scale * rng.normal();
        r.logprobs[t] = spec.mean + x;
        prev = x;
        if (spec.candidates_per_position >= 2) {
          std::vector<double> values{r.logprobs[t]};
          for (std::size_t k = 1; k < spec.candidates_per_position; ++k) {
            values.push_back(spec.mean + predicted + spec.machine_sigma * scale * rng.normal());
          }
          std::sort(values.begin(), values.end(), std::greater<>());
          std::vector<Candidate> list;
          for (std::size_t k = 0; k < values.size(); ++k) list.push_back({"c" + std::to_string(k), values[k]});
          lists.push_back(std::move(list));
        }
      }
      if (spec.candidates_per_position >= 2) r.top_logprobs = std::move(lists);
      out.push_back(std::move(r));
    }
  }
  return out;
}

DatasetRecord truncate_record(const DatasetRecord& record, std::size_t n_tokens) {
  if (n_tokens == 0) throw Error(ErrorCode::InvalidInput, "truncation length must be >= 1");
  DatasetRecord r = record;
  r.id = record.id + "_trunc" + std::to_string(n_tokens);
  const std::size_t keep = std::min(n_tokens, record.logprobs.size());
  if (keep == record.logprobs.size()) return r;
  auto cut = [keep](auto& seq) { seq.resize(keep); };
  cut(r.logprobs);
  if (r.tokens) cut(*r.tokens);
  if (r.ranks) cut(*r.ranks);
  if (r.entropies) cut(*r.entropies);
  if (r.top_logprobs) cut(*r.top_logprobs);
  if (r.contrast_logprobs) {
    for (auto& seq : *r.contrast_logprobs) cut(seq);
  }
  r.text.reset();
  return r;
}

}  // namespace specdetect
