#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "alnids/matrix.hpp"
#include "alnids/random.hpp"
#include "json.hpp"

namespace alnids {

// Flat binary tree shared by the classification, regression and isolation
// builders. Rows with x[feature] <= threshold descend left.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::int32_t left = -1;
  std::int32_t right = -1;
  double threshold = 0.0;
  double weight = 0.0;    // (bootstrap-weighted) samples reaching the node
  double positive = 0.0;  // weighted positives; classification trees only
  double value = 0.0;     // regression output, or isolation path adjustment
  double gain = 0.0;      // weighted impurity decrease at split nodes

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& root() const { return nodes.front(); }
  const TreeNode& leaf(std::span<const float> row) const;
  // Depth of the leaf reached by `row` (root = 0).
  std::size_t depth(std::span<const float> row) const;
  std::size_t max_depth() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

nlohmann::json to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& doc);

// One training example as seen by a builder: row in the matrix, label or
// target, and an integer multiplicity (bootstrap count).
struct ClassificationParams {
  std::size_t max_features = 0;  // 0 = all features
  std::size_t max_depth = 0;     // 0 = unlimited
};

// Gini-impurity CART tree. `labels` and `weights` are aligned with `rows`.
// Among equally good splits the lowest feature index wins, then the lowest
// threshold. Split quality is compared in exact integer arithmetic.
Tree build_classification_tree(const Matrix& x, std::span<const std::size_t> rows,
                               std::span<const std::uint8_t> labels,
                               std::span<const std::uint32_t> weights,
                               const ClassificationParams& params, Rng& rng);

// Least-squares regression tree on `targets`. Leaf values are
// sum(targets) / sum(hessians) over the leaf's rows (a Newton step), or 0 when
// the hessian sum vanishes.
Tree build_regression_tree(const Matrix& x, std::span<const std::size_t> rows,
                           std::span<const double> targets, std::span<const double> hessians,
                           std::size_t max_depth);

// Random-feature, random-threshold isolation tree. Leaves store c(size) so
// that depth + value is the adjusted path length.
Tree build_isolation_tree(const Matrix& x, std::span<const std::size_t> rows, std::size_t max_depth,
                          Rng& rng);

// H(n) = 1 + 1/2 + ... + 1/n.
double harmonic_number(std::size_t n);
// Average unsuccessful-search path length in a BST of n items:
// c(n) = 2 H(n-1) - 2 (n-1) / n, with c(0) = c(1) = 0.
double average_path_length(std::size_t n);

}  // namespace alnids
