#include "alnids/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>

#include "alnids/error.hpp"
#include "alnids/random.hpp"

namespace alnids {

const std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
};

bool is_categorical(std::size_t feature) { return categorical_slot(feature) >= 0; }

int categorical_slot(std::size_t feature) {
  for (std::size_t s = 0; s < kCategoricalFeatures.size(); ++s) {
    if (kCategoricalFeatures[s] == feature) return static_cast<int>(s);
  }
  return -1;
}

std::size_t feature_index(std::string_view name) {
  const auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
  if (it == kFeatureNames.end()) {
    throw InvalidArgument("unknown feature '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - kFeatureNames.begin());
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

RawRecord parse_line(std::string_view line, std::size_t line_no) {
  std::array<std::string_view, kNumFields> fields;
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::string_view field =
        line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (count < kNumFields) fields[count] = field;
    ++count;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (count != kNumFields) {
    throw ParseError(line_no, "expected " + std::to_string(kNumFields) + " fields, found " +
                                  std::to_string(count));
  }

  RawRecord record;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const std::string_view value = trim(fields[f]);
    const int slot = categorical_slot(f);
    if (slot >= 0) {
      record.categorical[static_cast<std::size_t>(slot)] = std::string(value);
      record.numeric[f] = 0.0;
      continue;
    }
    if (value.empty()) {
      record.numeric[f] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double parsed = 0.0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (ec != std::errc() || end != value.data() + value.size() || !std::isfinite(parsed)) {
      throw ParseError(line_no, "field " + std::string(kFeatureNames[f]) + ": cannot parse '" +
                                    std::string(value) + "' as a number");
    }
    record.numeric[f] = parsed;
  }
  record.label = std::string(trim(fields[kNumFeatures]));
  if (record.label.empty()) throw ParseError(line_no, "empty label");
  return record;
}

}  // namespace

std::vector<RawRecord> parse_kdd(std::istream& in) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    records.push_back(parse_line(line, line_no));
  }
  return records;
}

std::vector<RawRecord> parse_kdd(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_kdd(in);
}

std::vector<RawRecord> parse_kdd_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return parse_kdd(in);
}

std::vector<std::pair<std::string, std::size_t>> label_counts(const std::vector<RawRecord>& records) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[r.label];
  std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(), counts.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return sorted;
}

std::vector<BinaryDataset> build_attack_datasets(
    std::shared_ptr<const std::vector<RawRecord>> records, std::size_t min_occurrences) {
  if (!records) throw InvalidArgument("null record set");
  if (min_occurrences < 1) throw InvalidArgument("min_occurrences must be at least 1");

  std::vector<std::size_t> normal_rows;
  std::map<std::string, std::vector<std::size_t>> attack_rows;
  for (std::size_t i = 0; i < records->size(); ++i) {
    const RawRecord& r = (*records)[i];
    if (r.is_normal()) {
      normal_rows.push_back(i);
    } else {
      attack_rows[r.label].push_back(i);
    }
  }
  if (normal_rows.empty()) {
    throw InvalidArgument("no normal records; prevalence is undefined");
  }

  std::vector<BinaryDataset> datasets;
  for (auto& [label, rows] : attack_rows) {
    if (rows.size() < min_occurrences) continue;
    BinaryDataset ds;
    ds.source = records;
    ds.attack_label = label;
    ds.attacks = rows.size();
    ds.normals = normal_rows.size();
    ds.rows.reserve(rows.size() + normal_rows.size());
    // Keep the corpus order so encoding sees records as they appear in the file.
    std::merge(normal_rows.begin(), normal_rows.end(), rows.begin(), rows.end(),
               std::back_inserter(ds.rows));
    datasets.push_back(std::move(ds));
  }
  std::stable_sort(datasets.begin(), datasets.end(),
                   [](const BinaryDataset& a, const BinaryDataset& b) { return a.attacks > b.attacks; });
  return datasets;
}

std::size_t EncodedDataset::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

SplitSizes split_sizes(std::size_t n) {
  const std::size_t train = n * 8 / 10;
  const std::size_t dev = n / 10;
  return {train, dev, n - train - dev};
}

EncodedDataset subset(const EncodedDataset& data, std::span<const std::size_t> rows) {
  EncodedDataset out;
  out.feature_names = data.feature_names;
  out.matrix = Matrix(0, data.dimension());
  out.matrix.reserve_rows(rows.size());
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    out.matrix.append_row(data.matrix.row(r));
    out.labels.push_back(data.labels[r]);
  }
  return out;
}

Splits split(const EncodedDataset& encoded, std::uint64_t seed) {
  const std::size_t n = encoded.size();
  if (n < 10) {
    throw InvalidArgument("cannot split " + std::to_string(n) + " rows: need at least 10");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x5011));
  shuffle(std::span<std::size_t>(order), rng);

  const SplitSizes sizes = split_sizes(n);
  const std::span<const std::size_t> all(order);
  Splits out;
  out.seed = seed;
  out.train = subset(encoded, all.subspan(0, sizes.train));
  out.dev = subset(encoded, all.subspan(sizes.train, sizes.dev));
  out.test = subset(encoded, all.subspan(sizes.train + sizes.dev));
  return out;
}

std::string dataset_name(std::string_view attack_label) {
  std::string name(attack_label);
  while (!name.empty() && name.back() == '.') name.pop_back();
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return name;
}

}  // namespace alnids
