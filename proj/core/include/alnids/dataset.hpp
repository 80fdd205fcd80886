#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "alnids/matrix.hpp"
#include "json.hpp"

namespace alnids {

inline constexpr std::size_t kNumFeatures = 41;
inline constexpr std::size_t kNumFields = kNumFeatures + 1;  // features + label
inline constexpr std::string_view kNormalLabel = "normal.";

// KDD Cup 1999 column names, in file order.
extern const std::array<std::string_view, kNumFeatures> kFeatureNames;

// protocol_type, service and flag.
inline constexpr std::array<std::size_t, 3> kCategoricalFeatures = {1, 2, 3};

bool is_categorical(std::size_t feature);
// Position of `feature` within kCategoricalFeatures, or -1.
int categorical_slot(std::size_t feature);
// Index of a named column; throws InvalidArgument for unknown names.
std::size_t feature_index(std::string_view name);

// One connection record as it appears in the KDD file.
struct RawRecord {
  // Continuous values by feature index; NaN marks a blank (missing) field.
  // Entries at categorical positions are unused.
  std::array<double, kNumFeatures> numeric{};
  // protocol_type, service, flag; empty string marks a blank field.
  std::array<std::string, 3> categorical;
  std::string label;

  bool is_normal() const { return label == kNormalLabel; }
};

// Parses comma-separated KDD lines (41 features + label, no header).
// Blank lines are skipped. Throws ParseError carrying the 1-based line number.
std::vector<RawRecord> parse_kdd(std::istream& in);
std::vector<RawRecord> parse_kdd(std::string_view text);
std::vector<RawRecord> parse_kdd_file(const std::filesystem::path& path);

// Normal traffic plus the records of a single attack type. Records are shared
// with the parsed corpus and addressed by index.
struct BinaryDataset {
  std::shared_ptr<const std::vector<RawRecord>> source;
  std::vector<std::size_t> rows;
  std::string attack_label;
  std::size_t attacks = 0;
  std::size_t normals = 0;

  std::size_t size() const { return rows.size(); }
  const RawRecord& record(std::size_t i) const { return (*source)[rows[i]]; }
  double prevalence() const {
    return static_cast<double>(attacks) / static_cast<double>(attacks + normals);
  }
};

// Per-label occurrence counts, largest first (ties by name).
std::vector<std::pair<std::string, std::size_t>> label_counts(const std::vector<RawRecord>& records);

// One dataset per attack label occurring at least `min_occurrences` times,
// ordered by descending attack count. Throws if there are no normal records.
std::vector<BinaryDataset> build_attack_datasets(
    std::shared_ptr<const std::vector<RawRecord>> records, std::size_t min_occurrences = 100);

struct EncodedDataset {
  Matrix matrix;
  std::vector<std::uint8_t> labels;  // 1 = attack
  std::vector<std::string> feature_names;

  std::size_t size() const { return labels.size(); }
  std::size_t dimension() const { return matrix.cols(); }
  std::size_t positives() const;
};

// Human-readable view of an encoded row: original column name -> text value.
using DecodedRecord = std::vector<std::pair<std::string, std::string>>;

// One-hot encoder for the three categorical columns. Vocabulary is ordered by
// first appearance; columns appear in file order with each categorical column
// expanded in place as `name=value`.
class Encoder {
 public:
  using Vocabulary = std::array<std::vector<std::string>, kCategoricalFeatures.size()>;

  Encoder() = default;
  Encoder(Vocabulary vocabulary, std::string attack_label);

  static Encoder fit(const BinaryDataset& dataset);

  std::size_t dimension() const { return names_.size(); }
  const std::vector<std::string>& feature_names() const { return names_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  const std::string& attack_label() const { return attack_label_; }

  // Missing continuous values and unseen or blank categorical values encode as 0.
  void encode_into(const RawRecord& record, std::span<float> out) const;
  std::vector<float> encode(const RawRecord& record) const;
  std::uint8_t encode_label(const RawRecord& record) const;

  DecodedRecord decode(std::span<const float> row) const;

  nlohmann::json to_json() const;
  static Encoder from_json(const nlohmann::json& doc);

 private:
  void build_layout();

  Vocabulary vocabulary_;
  std::string attack_label_;
  std::vector<std::string> names_;
  // Column offset of each original feature (start of the group for categoricals).
  std::array<std::size_t, kNumFeatures> offset_{};
};

struct EncodeResult {
  EncodedDataset data;
  Encoder encoder;
};

// Fits the vocabulary on the whole dataset, then encodes every record.
EncodeResult encode(const BinaryDataset& dataset);

struct Splits {
  EncodedDataset train;
  EncodedDataset dev;
  EncodedDataset test;
  std::uint64_t seed = 0;
};

struct SplitSizes {
  std::size_t train, dev, test;
};

// floor(0.8n) / floor(0.1n) / remainder.
SplitSizes split_sizes(std::size_t n);

// Seeded uniform shuffle followed by an 80/10/10 cut. Throws for n < 10.
Splits split(const EncodedDataset& encoded, std::uint64_t seed);

EncodedDataset subset(const EncodedDataset& data, std::span<const std::size_t> rows);

// Columnar CSV: header of feature names plus a trailing `label` column.
void write_encoded_csv(std::ostream& out, const EncodedDataset& data);
EncodedDataset read_encoded_csv(std::istream& in);

// A per-attack dataset as persisted by `prepare`: train.csv, dev.csv,
// test.csv and metadata.json in one directory.
struct PreparedDataset {
  std::string name;
  Splits splits;
  Encoder encoder;
  nlohmann::json metadata;
};

nlohmann::json dataset_metadata(const BinaryDataset& dataset, const Encoder& encoder,
                                const Splits& splits);
void save_prepared(const std::filesystem::path& dir, const PreparedDataset& prepared);
PreparedDataset load_prepared(const std::filesystem::path& dir);

// Directory-safe name for an attack label ("smurf." -> "smurf").
std::string dataset_name(std::string_view attack_label);

}  // namespace alnids
