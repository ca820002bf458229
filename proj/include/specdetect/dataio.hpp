#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "specdetect/signal.hpp"

namespace specdetect {

enum class Label { Human, Machine };

std::string_view label_name(Label label) noexcept;
std::optional<Label> parse_label(std::string_view name) noexcept;

// One JSONL corpus row. Keys are the snake_case field names below; keys the
// schema does not know are kept in `extra` and written back unchanged.
struct DatasetRecord {
  std::string id;
  Label label = Label::Human;
  std::string source_model;
  std::optional<std::string> text;
  std::optional<std::vector<std::string>> tokens;
  std::vector<double> logprobs;
  std::optional<std::vector<std::uint64_t>> ranks;
  std::optional<std::vector<double>> entropies;
  std::optional<std::vector<std::vector<Candidate>>> top_logprobs;
  std::optional<std::vector<std::vector<double>>> contrast_logprobs;
  nlohmann::json extra = nlohmann::json::object();

  TokenSignal to_signal() const;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

// Throws ValidationError naming the offending field.
void validate_record(const DatasetRecord& record);

// Throws ValidationError for schema violations (type or invariant).
DatasetRecord record_from_json(const nlohmann::json& j);
nlohmann::ordered_json record_to_json(const DatasetRecord& record);

// Blank lines are skipped. Errors carry the 1-based line number.
std::vector<DatasetRecord> parse_corpus(std::istream& in);
std::vector<DatasetRecord> read_corpus(const std::filesystem::path& path);

void write_corpus(const std::vector<DatasetRecord>& records, std::ostream& out);
void write_corpus(const std::vector<DatasetRecord>& records, const std::filesystem::path& path);

// Seeded AR(1) Gaussian log-probability signals for both classes:
//   x_0 = sigma / sqrt(1 - ar^2) * z_0,  x_t = ar * x_{t-1} + sigma * z_t,
//   logprob_t = mean + x_t
// with sigma = human_sigma or machine_sigma. Each record draws from its own
// stream, SeededRng(derive_stream_seed(rng_seed, id)).
//
// When candidates_per_position >= 2 every position also gets a synthetic
// top-candidate list: the realized value plus candidates_per_position - 1
// alternatives drawn from the same conditional with machine_sigma as the
// innovation std (the "proxy model" distribution), sorted descending.
struct SyntheticSpec {
  std::size_t n_records_per_class = 50;
  std::size_t length = 128;
  double human_sigma = 1.0;
  double machine_sigma = 0.2;
  double ar_coefficient = 0.0;
  std::uint64_t rng_seed = 0;
  double mean = -3.0;
  std::size_t candidates_per_position = 0;

  void validate() const;
};

std::vector<DatasetRecord> generate_synthetic(const SyntheticSpec& spec);

// Keeps the first min(n_tokens, length) positions of every parallel
// sequence; the id gains a "_trunc<n>" suffix. The text is dropped when
// positions are actually removed, since it no longer matches.
DatasetRecord truncate_record(const DatasetRecord& record, std::size_t n_tokens);

}  // namespace specdetect
