#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "alnids/dataset.hpp"

namespace alnids {

// Label counts of the KDD Cup 1999 10% file: 97,278 normal records, the ten
// attacks with at least 100 occurrences, and twelve rarer attacks.
const std::vector<std::pair<std::string, std::size_t>>& kdd10_label_counts();

struct SyntheticOptions {
  std::uint64_t seed = 1999;
  // Multiplies every label count (rounded, minimum 1).
  double scale = 1.0;
  // Restrict generation to these labels (empty = all).
  std::vector<std::string> labels;
};

// Generates a KDD-format corpus with the counts above and per-label traffic
// profiles (protocol/service/flag mix, byte volumes, host-window statistics)
// resembling the original capture. Records are shuffled.
std::vector<RawRecord> generate_kdd_like(const SyntheticOptions& options);

// Writes records back in KDD line format (41 features + label).
void write_kdd(std::ostream& out, const std::vector<RawRecord>& records);

}  // namespace alnids
