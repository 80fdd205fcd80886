#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "alnids/dataset.hpp"
#include "alnids/error.hpp"
#include "test_support.hpp"

using namespace alnids;
using alnids::testing::kFirstKddLine;

namespace {

std::string line_with_label(const std::string& protocol, const std::string& service, const std::string& flag,
                            const std::string& label, const std::string& src_bytes = "100") {
  std::string line = "0," + protocol + "," + service + "," + flag + "," + src_bytes;
  for (int i = 5; i < 41; ++i) line += ",0";
  return line + "," + label;
}

}  // namespace

TEST(ParseKdd, FirstRecordOfTheTenPercentFile) {
  const auto records = parse_kdd(std::string(kFirstKddLine) + "\n");
  ASSERT_EQ(records.size(), 1u);
  const RawRecord& r = records[0];
  EXPECT_EQ(r.numeric[feature_index("duration")], 0.0);
  EXPECT_EQ(r.categorical[0], "tcp");
  EXPECT_EQ(r.categorical[1], "http");
  EXPECT_EQ(r.categorical[2], "SF");
  EXPECT_EQ(r.numeric[feature_index("src_bytes")], 181.0);
  EXPECT_EQ(r.numeric[feature_index("dst_bytes")], 5450.0);
  EXPECT_EQ(r.numeric[feature_index("dst_host_srv_count")], 9.0);
  EXPECT_EQ(r.label, "normal.");
  EXPECT_TRUE(r.is_normal());
}

TEST(ParseKdd, EmptyInputGivesNoRecords) {
  EXPECT_TRUE(parse_kdd(std::string_view{}).empty());
  EXPECT_TRUE(parse_kdd("\n\n").empty());
}

TEST(ParseKdd, WrongFieldCountNamesTheLine) {
  std::string short_line = kFirstKddLine;
  short_line = short_line.substr(short_line.find(',') + 1);  // 41 fields
  const std::string text = std::string(kFirstKddLine) + "\n" + short_line + "\n";
  try {
    parse_kdd(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseKdd, FortyFieldsIsAnError) {
  std::string line = "0,tcp,http,SF";
  for (int i = 4; i < 39; ++i) line += ",0";
  line += ",normal.";
  EXPECT_THROW(parse_kdd(line), ParseError);
}

TEST(ParseKdd, UnparseableNumberIsAnError) {
  EXPECT_THROW(parse_kdd(line_with_label("tcp", "http", "SF", "normal.", "12abc")), ParseError);
}

TEST(ParseKdd, EmptyLabelIsAnError) {
  EXPECT_THROW(parse_kdd(line_with_label("tcp", "http", "SF", "")), ParseError);
}

TEST(ParseKdd, BlankNumericFieldIsMissing) {
  const auto records = parse_kdd(line_with_label("tcp", "http", "SF", "normal.", ""));
  EXPECT_TRUE(std::isnan(records[0].numeric[feature_index("src_bytes")]));
}

TEST(BuildAttackDatasets, KeepsOnlyAttacksAtTheThreshold) {
  std::ostringstream text;
  for (int i = 0; i < 5; ++i) text << line_with_label("tcp", "http", "SF", "normal.") << "\n";
  for (int i = 0; i < 99; ++i) text << line_with_label("icmp", "ecr_i", "SF", "rare.") << "\n";
  for (int i = 0; i < 100; ++i) text << line_with_label("icmp", "eco_i", "SF", "common.") << "\n";
  auto records = std::make_shared<const std::vector<RawRecord>>(parse_kdd(text.str()));
  const auto datasets = build_attack_datasets(records);
  ASSERT_EQ(datasets.size(), 1u);
  EXPECT_EQ(datasets[0].attack_label, "common.");
  EXPECT_EQ(datasets[0].attacks, 100u);
  EXPECT_EQ(datasets[0].normals, 5u);
  EXPECT_EQ(datasets[0].size(), 105u);
  for (std::size_t i = 0; i < datasets[0].size(); ++i) {
    const auto& label = datasets[0].record(i).label;
    EXPECT_TRUE(label == "normal." || label == "common.");
  }
}

TEST(BuildAttackDatasets, NinetyNineOccurrencesExcluded) {
  std::ostringstream text;
  text << line_with_label("tcp", "http", "SF", "normal.") << "\n";
  for (int i = 0; i < 99; ++i) text << line_with_label("icmp", "ecr_i", "SF", "rare.") << "\n";
  auto records = std::make_shared<const std::vector<RawRecord>>(parse_kdd(text.str()));
  EXPECT_TRUE(build_attack_datasets(records).empty());
}

TEST(BuildAttackDatasets, NoNormalsIsAnError) {
  std::ostringstream text;
  for (int i = 0; i < 100; ++i) text << line_with_label("icmp", "ecr_i", "SF", "smurf.") << "\n";
  auto records = std::make_shared<const std::vector<RawRecord>>(parse_kdd(text.str()));
  EXPECT_THROW(build_attack_datasets(records), InvalidArgument);
}

TEST(BuildAttackDatasets, RejectsZeroThreshold) {
  auto records = std::make_shared<const std::vector<RawRecord>>(parse_kdd(kFirstKddLine));
  EXPECT_THROW(build_attack_datasets(records, 0), InvalidArgument);
}

TEST(Encode, OneHotFollowsFirstAppearance) {
  std::ostringstream text;
  text << line_with_label("tcp", "http", "SF", "normal.") << "\n"
       << line_with_label("udp", "private", "SF", "normal.") << "\n"
       << line_with_label("icmp", "ecr_i", "SF", "smurf.") << "\n";
  auto records = std::make_shared<const std::vector<RawRecord>>(parse_kdd(text.str()));
  const auto result = encode(build_attack_datasets(records, 1).front());
  const auto& names = result.data.feature_names;
  const auto col = [&](const std::string& n) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  ASSERT_LT(col("protocol_type=tcp"), names.size());
  EXPECT_EQ(col("protocol_type=udp"), col("protocol_type=tcp") + 1);
  EXPECT_EQ(col("protocol_type=icmp"), col("protocol_type=tcp") + 2);
  const auto tcp = col("protocol_type=tcp");
  EXPECT_EQ(result.data.matrix(0, tcp), 1.0f);
  EXPECT_EQ(result.data.matrix(0, tcp + 1), 0.0f);
  EXPECT_EQ(result.data.matrix(0, tcp + 2), 0.0f);
  EXPECT_EQ(result.data.matrix(0, col("src_bytes")), 100.0f);
  EXPECT_EQ(result.data.labels, (std::vector<std::uint8_t>{0, 0, 1}));
  EXPECT_EQ(result.data.dimension(), 38u + 3u + 3u + 1u);
}

TEST(Encode, BlankNumericBecomesZero) {
  std::ostringstream text;
  text << line_with_label("tcp", "http", "SF", "normal.", "") << "\n"
       << line_with_label("icmp", "ecr_i", "SF", "smurf.") << "\n";
  auto records = std::make_shared<const std::vector<RawRecord>>(parse_kdd(text.str()));
  const auto result = encode(build_attack_datasets(records, 1).front());
  const auto& names = result.data.feature_names;
  const auto src = static_cast<std::size_t>(std::find(names.begin(), names.end(), "src_bytes") - names.begin());
  EXPECT_EQ(result.data.matrix(0, src), 0.0f);
}

TEST(Encode, EveryOneHotGroupSumsToOne) {
  const auto corpus = alnids::testing::small_corpus({"normal.", "satan.", "nmap."}, 0.05);
  for (const auto& ds : build_attack_datasets(corpus, 1)) {
    const auto result = encode(ds);
    const auto& names = result.data.feature_names;
    for (std::size_t r = 0; r < result.data.size(); ++r) {
      for (std::size_t f : kCategoricalFeatures) {
        const std::string prefix = std::string(kFeatureNames[f]) + "=";
        float sum = 0.0f;
        for (std::size_t j = 0; j < names.size(); ++j) {
          if (names[j].rfind(prefix, 0) == 0) sum += result.data.matrix(r, j);
        }
        ASSERT_EQ(sum, 1.0f) << "row " << r << " group " << prefix;
      }
    }
  }
}

TEST(Encode, UnseenCategoryEncodesAllZero) {
  const auto corpus = alnids::testing::small_corpus({"normal.", "teardrop."}, 0.01);
  const auto result = encode(build_attack_datasets(corpus, 1).front());
  RawRecord r = parse_kdd(line_with_label("tcp", "no_such_service", "SF", "normal.")).front();
  const auto row = result.encoder.encode(r);
  const auto& names = result.encoder.feature_names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j].rfind("service=", 0) == 0) {
      EXPECT_EQ(row[j], 0.0f) << names[j];
    }
  }
}

TEST(Encode, DecodeRestoresReadableValues) {
  auto records = std::make_shared<const std::vector<RawRecord>>(
      parse_kdd(std::string(kFirstKddLine) + "\n" + line_with_label("icmp", "ecr_i", "SF", "smurf.")));
  const auto result = encode(build_attack_datasets(records, 1).front());
  const auto decoded = result.encoder.decode(result.data.matrix.row(0));
  ASSERT_EQ(decoded.size(), kNumFeatures);
  EXPECT_EQ(decoded[1].first, "protocol_type");
  EXPECT_EQ(decoded[1].second, "tcp");
  EXPECT_EQ(decoded[2].second, "http");
  EXPECT_EQ(decoded[4].first, "src_bytes");
  EXPECT_EQ(decoded[4].second, "181");
}

TEST(Encode, EncoderJsonRoundTrip) {
  const auto corpus = alnids::testing::small_corpus({"normal.", "pod."}, 0.02);
  const auto result = encode(build_attack_datasets(corpus, 1).front());
  const Encoder back = Encoder::from_json(result.encoder.to_json());
  EXPECT_EQ(back.feature_names(), result.encoder.feature_names());
  EXPECT_EQ(back.attack_label(), "pod.");
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& rec = (*corpus)[i];
    EXPECT_EQ(back.encode(rec), result.encoder.encode(rec));
  }
}

TEST(Split, SmurfSizedSplit) {
  const SplitSizes s = split_sizes(378068);
  EXPECT_EQ(s.train, 302454u);
  EXPECT_EQ(s.dev, 37806u);
  EXPECT_EQ(s.test, 37808u);
  EXPECT_EQ(s.train + s.dev + s.test, 378068u);
}

TEST(Split, FloorRuleForEverySize) {
  for (std::size_t n = 10; n < 2000; ++n) {
    const SplitSizes s = split_sizes(n);
    EXPECT_EQ(s.train, n * 8 / 10);
    EXPECT_EQ(s.dev, n / 10);
    EXPECT_EQ(s.train + s.dev + s.test, n);
  }
}

TEST(Split, TooSmallIsAnError) {
  const auto d = alnids::testing::make_encoded({{1}, {2}, {3}, {4}, {5}}, {0, 1, 0, 1, 0});
  EXPECT_THROW(split(d, 0), InvalidArgument);
}

TEST(Split, IsABijectionAndDeterministic) {
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 537; ++i) {
    rows.push_back({static_cast<float>(i), static_cast<float>(i % 7)});
    labels.push_back(i % 3 == 0 ? 1 : 0);
  }
  const auto d = alnids::testing::make_encoded(rows, labels);
  const Splits a = split(d, 42);
  const Splits b = split(d, 42);
  EXPECT_EQ(a.train.matrix, b.train.matrix);
  EXPECT_EQ(a.dev.matrix, b.dev.matrix);
  EXPECT_EQ(a.test.matrix, b.test.matrix);
  EXPECT_EQ(a.train.labels, b.train.labels);

  std::multiset<float> seen;
  for (const auto* part : {&a.train, &a.dev, &a.test}) {
    for (std::size_t r = 0; r < part->size(); ++r) {
      seen.insert(part->matrix(r, 0));
      EXPECT_EQ(part->labels[r], static_cast<int>(part->matrix(r, 0)) % 3 == 0 ? 1 : 0);
    }
  }
  std::multiset<float> expected;
  for (int i = 0; i < 537; ++i) expected.insert(static_cast<float>(i));
  EXPECT_EQ(seen, expected);

  const Splits c = split(d, 43);
  EXPECT_NE(a.train.matrix, c.train.matrix);
}

TEST(EncodedCsv, RoundTripIsExact) {
  const auto p = alnids::testing::small_prepared("pod.", 0.02);
  std::stringstream buf;
  write_encoded_csv(buf, p.splits.dev);
  const EncodedDataset back = read_encoded_csv(buf);
  EXPECT_EQ(back.feature_names, p.splits.dev.feature_names);
  EXPECT_EQ(back.labels, p.splits.dev.labels);
  EXPECT_EQ(back.matrix, p.splits.dev.matrix);
}

TEST(PreparedDataset, SaveAndLoad) {
  const auto p = alnids::testing::small_prepared("pod.", 0.02);
  const auto dir = std::filesystem::temp_directory_path() / "alnids_prepared_test";
  std::filesystem::remove_all(dir);
  save_prepared(dir, p);
  const PreparedDataset back = load_prepared(dir);
  EXPECT_EQ(back.name, "pod");
  EXPECT_EQ(back.splits.train.matrix, p.splits.train.matrix);
  EXPECT_EQ(back.splits.test.labels, p.splits.test.labels);
  EXPECT_EQ(back.metadata.at("attack_label"), "pod.");
  EXPECT_EQ(back.metadata.at("attacks"), p.metadata.at("attacks"));
  std::filesystem::remove_all(dir);
}

TEST(DatasetName, StripsTheTrailingDot) {
  EXPECT_EQ(dataset_name("smurf."), "smurf");
  EXPECT_EQ(dataset_name("smurf"), "smurf");
}
