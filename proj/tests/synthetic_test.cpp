#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "alnids/dataset.hpp"
#include "alnids/synthetic.hpp"

using namespace alnids;

namespace {

const std::vector<RawRecord>& full_corpus() {
  static const std::vector<RawRecord> records = generate_kdd_like({});
  return records;
}

}  // namespace

TEST(Synthetic, LabelCountsMatchTheTenPercentFile) {
  std::size_t total = 0;
  for (const auto& [label, n] : kdd10_label_counts()) total += n;
  EXPECT_EQ(total, 494021u);

  std::map<std::string, std::size_t> counts;
  for (const auto& r : full_corpus()) ++counts[r.label];
  for (const auto& [label, n] : kdd10_label_counts()) EXPECT_EQ(counts[label], n) << label;
}

TEST(Synthetic, TenAttacksReachTheThresholdWithPublishedPrevalence) {
  auto records = std::make_shared<const std::vector<RawRecord>>(full_corpus());
  const auto datasets = build_attack_datasets(records);
  ASSERT_EQ(datasets.size(), 10u);
  const std::map<std::string, std::pair<std::size_t, double>> expected = {
      {"smurf.", {378068, 0.742697}}, {"nmap.", {97509, 0.002369}}, {"neptune.", {204479, 0.524264}},
      {"back.", {99481, 0.022145}},   {"pod.", {97542, 0.002707}}};
  for (const auto& ds : datasets) {
    EXPECT_EQ(ds.attacks + ds.normals, ds.size());
    EXPECT_EQ(ds.normals, 97278u);
    const auto it = expected.find(ds.attack_label);
    if (it == expected.end()) continue;
    EXPECT_EQ(ds.size(), it->second.first) << ds.attack_label;
    EXPECT_NEAR(ds.prevalence(), it->second.second, 5e-7) << ds.attack_label;
  }
  EXPECT_EQ(datasets.front().attack_label, "smurf.");
  EXPECT_EQ(datasets.back().attack_label, "nmap.");
}

TEST(Synthetic, WrittenCorpusParsesBack) {
  SyntheticOptions o;
  o.scale = 0.002;
  const auto records = generate_kdd_like(o);
  std::stringstream buf;
  write_kdd(buf, records);
  const auto back = parse_kdd(buf);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].label, records[i].label);
    EXPECT_EQ(back[i].categorical, records[i].categorical);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (is_categorical(f)) continue;
      EXPECT_EQ(back[i].numeric[f], records[i].numeric[f]);
    }
  }
}

TEST(Synthetic, SameSeedSameCorpus) {
  SyntheticOptions o;
  o.scale = 0.001;
  std::stringstream a, b;
  write_kdd(a, generate_kdd_like(o));
  write_kdd(b, generate_kdd_like(o));
  EXPECT_EQ(a.str(), b.str());
  o.seed = 2;
  std::stringstream c;
  write_kdd(c, generate_kdd_like(o));
  EXPECT_NE(a.str(), c.str());
}
