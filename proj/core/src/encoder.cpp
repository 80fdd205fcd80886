#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "alnids/dataset.hpp"
#include "alnids/error.hpp"

namespace alnids {

namespace {

void append_float(std::string& out, float v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  out.append(buf, end);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

Encoder::Encoder(Vocabulary vocabulary, std::string attack_label)
    : vocabulary_(std::move(vocabulary)), attack_label_(std::move(attack_label)) {
  build_layout();
}

void Encoder::build_layout() {
  names_.clear();
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    offset_[f] = names_.size();
    const int slot = categorical_slot(f);
    if (slot < 0) {
      names_.emplace_back(kFeatureNames[f]);
      continue;
    }
    for (const auto& value : vocabulary_[static_cast<std::size_t>(slot)]) {
      names_.push_back(std::string(kFeatureNames[f]) + "=" + value);
    }
  }
}

Encoder Encoder::fit(const BinaryDataset& dataset) {
  Vocabulary vocabulary;
  std::array<std::unordered_map<std::string, std::size_t>, kCategoricalFeatures.size()> seen;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const RawRecord& r = dataset.record(i);
    for (std::size_t s = 0; s < kCategoricalFeatures.size(); ++s) {
      const std::string& v = r.categorical[s];
      if (v.empty()) continue;
      if (seen[s].emplace(v, vocabulary[s].size()).second) vocabulary[s].push_back(v);
    }
  }
  return Encoder(std::move(vocabulary), dataset.attack_label);
}

void Encoder::encode_into(const RawRecord& record, std::span<float> out) const {
  if (out.size() != dimension()) throw InvalidArgument("encode: output width mismatch");
  std::fill(out.begin(), out.end(), 0.0f);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const int slot = categorical_slot(f);
    if (slot < 0) {
      const double v = record.numeric[f];
      out[offset_[f]] = std::isnan(v) ? 0.0f : static_cast<float>(v);
      continue;
    }
    const auto& vocab = vocabulary_[static_cast<std::size_t>(slot)];
    const std::string& value = record.categorical[static_cast<std::size_t>(slot)];
    // Vocabularies are tiny (service has ~70 entries); a linear scan is fine.
    const auto it = std::find(vocab.begin(), vocab.end(), value);
    if (it != vocab.end()) out[offset_[f] + static_cast<std::size_t>(it - vocab.begin())] = 1.0f;
  }
}

std::vector<float> Encoder::encode(const RawRecord& record) const {
  std::vector<float> out(dimension());
  encode_into(record, out);
  return out;
}

std::uint8_t Encoder::encode_label(const RawRecord& record) const {
  return record.label == attack_label_ ? 1 : 0;
}

DecodedRecord Encoder::decode(std::span<const float> row) const {
  if (row.size() != dimension()) throw InvalidArgument("decode: row width mismatch");
  DecodedRecord out;
  out.reserve(kNumFeatures);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const int slot = categorical_slot(f);
    std::string text;
    if (slot < 0) {
      append_float(text, row[offset_[f]]);
    } else {
      const auto& vocab = vocabulary_[static_cast<std::size_t>(slot)];
      for (std::size_t v = 0; v < vocab.size(); ++v) {
        if (row[offset_[f] + v] == 1.0f) {
          text = vocab[v];
          break;
        }
      }
    }
    out.emplace_back(std::string(kFeatureNames[f]), std::move(text));
  }
  return out;
}

nlohmann::json Encoder::to_json() const {
  nlohmann::json vocab = nlohmann::json::object();
  for (std::size_t s = 0; s < kCategoricalFeatures.size(); ++s) {
    vocab[std::string(kFeatureNames[kCategoricalFeatures[s]])] = vocabulary_[s];
  }
  return {{"attack_label", attack_label_}, {"vocabulary", vocab}};
}

Encoder Encoder::from_json(const nlohmann::json& doc) {
  Vocabulary vocabulary;
  for (std::size_t s = 0; s < kCategoricalFeatures.size(); ++s) {
    vocabulary[s] = doc.at("vocabulary")
                        .at(std::string(kFeatureNames[kCategoricalFeatures[s]]))
                        .get<std::vector<std::string>>();
  }
  return Encoder(std::move(vocabulary), doc.at("attack_label").get<std::string>());
}

EncodeResult encode(const BinaryDataset& dataset) {
  if (dataset.size() == 0) throw InvalidArgument("cannot encode an empty dataset");
  EncodeResult result{{}, Encoder::fit(dataset)};
  EncodedDataset& data = result.data;
  data.feature_names = result.encoder.feature_names();
  data.matrix = Matrix(dataset.size(), result.encoder.dimension());
  data.labels.resize(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const RawRecord& r = dataset.record(i);
    result.encoder.encode_into(r, data.matrix.row(i));
    data.labels[i] = result.encoder.encode_label(r);
  }
  return result;
}

void write_encoded_csv(std::ostream& out, const EncodedDataset& data) {
  std::string buf;
  for (const auto& name : data.feature_names) {
    buf += name;
    buf += ',';
  }
  buf += "label\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (float v : data.matrix.row(r)) {
      append_float(buf, v);
      buf += ',';
    }
    buf += data.labels[r] ? '1' : '0';
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

EncodedDataset read_encoded_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_commas(line);
  if (header.empty() || header.back() != "label") throw ParseError(1, "last column must be 'label'");

  EncodedDataset data;
  for (std::size_t i = 0; i + 1 < header.size(); ++i) data.feature_names.emplace_back(header[i]);
  const std::size_t d = data.feature_names.size();
  data.matrix = Matrix(0, d);
  std::vector<float> row(d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != d + 1) throw ParseError(line_no, "column count mismatch");
    for (std::size_t c = 0; c <= d; ++c) {
      float v = 0.0f;
      const auto [end, ec] = std::from_chars(fields[c].data(), fields[c].data() + fields[c].size(), v);
      if (ec != std::errc() || end != fields[c].data() + fields[c].size()) {
        throw ParseError(line_no, "cannot parse '" + std::string(fields[c]) + "'");
      }
      if (c < d) {
        row[c] = v;
      } else if (v == 0.0f || v == 1.0f) {
        data.labels.push_back(static_cast<std::uint8_t>(v));
      } else {
        throw ParseError(line_no, "label must be 0 or 1");
      }
    }
    data.matrix.append_row(row);
  }
  return data;
}

nlohmann::json dataset_metadata(const BinaryDataset& dataset, const Encoder& encoder,
                                const Splits& splits) {
  return {
      {"schema_version", 1},
      {"attack_label", dataset.attack_label},
      {"attacks", dataset.attacks},
      {"normals", dataset.normals},
      {"records", dataset.size()},
      {"prevalence", dataset.prevalence()},
      {"seed", splits.seed},
      {"split_sizes",
       {{"train", splits.train.size()}, {"dev", splits.dev.size()}, {"test", splits.test.size()}}},
      {"encoder", encoder.to_json()},
  };
}

namespace {

void write_csv_file(const std::filesystem::path& path, const EncodedDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_encoded_csv(out, data);
}

EncodedDataset read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return read_encoded_csv(in);
}

}  // namespace

void save_prepared(const std::filesystem::path& dir, const PreparedDataset& prepared) {
  std::filesystem::create_directories(dir);
  write_csv_file(dir / "train.csv", prepared.splits.train);
  write_csv_file(dir / "dev.csv", prepared.splits.dev);
  write_csv_file(dir / "test.csv", prepared.splits.test);
  std::ofstream meta(dir / "metadata.json", std::ios::binary);
  meta << prepared.metadata.dump(2) << '\n';
}

PreparedDataset load_prepared(const std::filesystem::path& dir) {
  const auto meta_path = dir / "metadata.json";
  std::ifstream meta(meta_path);
  if (!meta) throw InvalidArgument("no prepared dataset at " + dir.string());
  PreparedDataset out;
  out.metadata = nlohmann::json::parse(meta);
  out.encoder = Encoder::from_json(out.metadata.at("encoder"));
  out.name = dataset_name(out.encoder.attack_label());
  out.splits.seed = out.metadata.at("seed").get<std::uint64_t>();
  out.splits.train = read_csv_file(dir / "train.csv");
  out.splits.dev = read_csv_file(dir / "dev.csv");
  out.splits.test = read_csv_file(dir / "test.csv");
  if (out.splits.train.feature_names != out.encoder.feature_names()) {
    throw InvalidArgument(dir.string() + ": CSV header does not match encoder vocabulary");
  }
  return out;
}

}  // namespace alnids
