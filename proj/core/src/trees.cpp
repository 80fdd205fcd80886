#include "alnids/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alnids/error.hpp"

namespace alnids {

const TreeNode& Tree::leaf(std::span<const float> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                           : n.right);
  }
  return nodes[i];
}

std::size_t Tree::depth(std::span<const float> row) const {
  std::size_t i = 0;
  std::size_t d = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                           : n.right);
    ++d;
  }
  return d;
}

std::size_t Tree::max_depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> depth(nodes.size(), 0);
  std::size_t deepest = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes[i].is_leaf()) {
      depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
    }
  }
  return deepest;
}

nlohmann::json to_json(const Tree& tree) {
  nlohmann::json feature = nlohmann::json::array(), left = nlohmann::json::array(),
                 right = nlohmann::json::array(), threshold = nlohmann::json::array(),
                 weight = nlohmann::json::array(), positive = nlohmann::json::array(),
                 value = nlohmann::json::array(), gain = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    left.push_back(n.left);
    right.push_back(n.right);
    threshold.push_back(n.threshold);
    weight.push_back(n.weight);
    positive.push_back(n.positive);
    value.push_back(n.value);
    gain.push_back(n.gain);
  }
  return {{"feature", feature}, {"left", left},         {"right", right}, {"threshold", threshold},
          {"weight", weight},   {"positive", positive}, {"value", value}, {"gain", gain}};
}

Tree tree_from_json(const nlohmann::json& doc) {
  const auto& feature = doc.at("feature");
  Tree tree;
  tree.nodes.resize(feature.size());
  for (std::size_t i = 0; i < feature.size(); ++i) {
    TreeNode& n = tree.nodes[i];
    n.feature = feature[i].get<std::int32_t>();
    n.left = doc.at("left")[i].get<std::int32_t>();
    n.right = doc.at("right")[i].get<std::int32_t>();
    n.threshold = doc.at("threshold")[i].get<double>();
    n.weight = doc.at("weight")[i].get<double>();
    n.positive = doc.at("positive")[i].get<double>();
    n.value = doc.at("value")[i].get<double>();
    n.gain = doc.at("gain")[i].get<double>();
  }
  if (tree.nodes.empty()) throw InvalidArgument("tree with no nodes");
  return tree;
}

double harmonic_number(std::size_t n) {
  double h = 0.0;
  for (std::size_t k = n; k >= 1; --k) h += 1.0 / static_cast<double>(k);
  return h;
}

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  const auto m = static_cast<double>(n);
  return 2.0 * harmonic_number(n - 1) - 2.0 * (m - 1.0) / m;
}

namespace {

struct Frame {
  std::size_t node;
  std::size_t begin;
  std::size_t end;
  std::size_t depth;
};

std::int32_t add_node(Tree& tree) {
  tree.nodes.emplace_back();
  return static_cast<std::int32_t>(tree.nodes.size() - 1);
}

// Sum over children of (sum_k count_k^2) / weight, kept as an exact fraction.
struct SplitScore {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
};

bool better(const SplitScore& a, const SplitScore& b) {
  using u128 = unsigned __int128;
  return static_cast<u128>(a.num) * b.den > static_cast<u128>(b.num) * a.den;
}

struct ClassSample {
  std::uint32_t row;
  std::uint32_t weight;
  std::uint8_t label;
};

}  // namespace

Tree build_classification_tree(const Matrix& x, std::span<const std::size_t> rows,
                               std::span<const std::uint8_t> labels,
                               std::span<const std::uint32_t> weights,
                               const ClassificationParams& params, Rng& rng) {
  if (rows.size() != labels.size() || rows.size() != weights.size()) {
    throw InvalidArgument("build_classification_tree: misaligned inputs");
  }
  const std::size_t d = x.cols();
  const std::size_t max_features =
      params.max_features == 0 ? d : std::min(params.max_features, d);

  std::vector<ClassSample> samples;
  samples.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (weights[i] == 0) continue;
    samples.push_back({static_cast<std::uint32_t>(rows[i]), weights[i], labels[i]});
  }

  Tree tree;
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::pair<float, std::uint32_t>> sorted;  // (value, sample position)

  add_node(tree);
  std::vector<Frame> stack{{0, 0, samples.size(), 0}};
  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();

    std::uint64_t w0 = 0, w1 = 0;
    for (std::size_t i = fr.begin; i < fr.end; ++i) {
      (samples[i].label ? w1 : w0) += samples[i].weight;
    }
    {
      TreeNode& node = tree.nodes[fr.node];
      node.weight = static_cast<double>(w0 + w1);
      node.positive = static_cast<double>(w1);
    }
    const bool depth_capped = params.max_depth != 0 && fr.depth >= params.max_depth;
    if (w0 == 0 || w1 == 0 || depth_capped || fr.end - fr.begin < 2) continue;

    bool found = false;
    SplitScore best;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    std::size_t evaluated = 0;
    for (std::size_t k = 0; k < d && evaluated < max_features; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(uniform_below(rng, d - k));
      std::swap(perm[k], perm[j]);
      const std::size_t f = perm[k];

      sorted.clear();
      for (std::size_t i = fr.begin; i < fr.end; ++i) {
        sorted.emplace_back(x(samples[i].row, f), static_cast<std::uint32_t>(i));
      }
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;  // constant here
      ++evaluated;

      std::uint64_t l0 = 0, l1 = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const ClassSample& s = samples[sorted[i].second];
        (s.label ? l1 : l0) += s.weight;
        if (sorted[i + 1].first == sorted[i].first) continue;
        const std::uint64_t r0 = w0 - l0, r1 = w1 - l1;
        const std::uint64_t wl = l0 + l1, wr = r0 + r1;
        const std::uint64_t al = l0 * l0 + l1 * l1, ar = r0 * r0 + r1 * r1;
        const SplitScore score{al * wr + ar * wl, wl * wr};
        const double threshold =
            (static_cast<double>(sorted[i].first) + static_cast<double>(sorted[i + 1].first)) * 0.5;
        bool take = !found || better(score, best);
        if (!take && !better(best, score)) {
          take = f < best_feature || (f == best_feature && threshold < best_threshold);
        }
        if (take) {
          found = true;
          best = score;
          best_feature = f;
          best_threshold = threshold;
        }
      }
    }
    if (!found) continue;

    const auto mid = std::partition(samples.begin() + static_cast<std::ptrdiff_t>(fr.begin),
                                    samples.begin() + static_cast<std::ptrdiff_t>(fr.end),
                                    [&](const ClassSample& s) {
                                      return x(s.row, best_feature) <= best_threshold;
                                    });
    const auto split_at = static_cast<std::size_t>(mid - samples.begin());
    const std::int32_t left = add_node(tree);
    const std::int32_t right = add_node(tree);
    TreeNode& node = tree.nodes[fr.node];
    node.feature = static_cast<std::int32_t>(best_feature);
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    const long double total = static_cast<long double>(w0 + w1);
    const long double parent = (static_cast<long double>(w0) * w0 + static_cast<long double>(w1) * w1) / total;
    node.gain = static_cast<double>(static_cast<long double>(best.num) / best.den - parent);
    // Right first so the left subtree is built (and numbered) first.
    stack.push_back({static_cast<std::size_t>(right), split_at, fr.end, fr.depth + 1});
    stack.push_back({static_cast<std::size_t>(left), fr.begin, split_at, fr.depth + 1});
  }
  return tree;
}

namespace {
struct RegSample {
  std::uint32_t row;
  double target;
  double hessian;
};
}  // namespace

Tree build_regression_tree(const Matrix& x, std::span<const std::size_t> rows,
                           std::span<const double> targets, std::span<const double> hessians,
                           std::size_t max_depth) {
  if (rows.size() != targets.size() || rows.size() != hessians.size()) {
    throw InvalidArgument("build_regression_tree: misaligned inputs");
  }
  const std::size_t d = x.cols();
  std::vector<RegSample> samples(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    samples[i] = {static_cast<std::uint32_t>(rows[i]), targets[i], hessians[i]};
  }

  Tree tree;
  std::vector<std::pair<float, std::uint32_t>> sorted;
  add_node(tree);
  std::vector<Frame> stack{{0, 0, samples.size(), 0}};
  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();
    const std::size_t n = fr.end - fr.begin;
    double sum = 0.0, hess = 0.0;
    for (std::size_t i = fr.begin; i < fr.end; ++i) {
      sum += samples[i].target;
      hess += samples[i].hessian;
    }
    {
      TreeNode& node = tree.nodes[fr.node];
      node.weight = static_cast<double>(n);
      node.value = std::abs(hess) < 1e-150 ? 0.0 : sum / hess;
    }
    if (fr.depth >= max_depth || n < 2) continue;

    const double parent = sum * sum / static_cast<double>(n);
    double best_score = parent;
    bool found = false;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < d; ++f) {
      sorted.clear();
      for (std::size_t i = fr.begin; i < fr.end; ++i) {
        sorted.emplace_back(x(samples[i].row, f), static_cast<std::uint32_t>(i));
      }
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_sum += samples[sorted[i].second].target;
        if (sorted[i + 1].first == sorted[i].first) continue;
        const auto nl = static_cast<double>(i + 1);
        const auto nr = static_cast<double>(n - i - 1);
        const double right_sum = sum - left_sum;
        const double score = left_sum * left_sum / nl + right_sum * right_sum / nr;
        if (score > best_score + 1e-12 * (1.0 + std::abs(best_score))) {
          found = true;
          best_score = score;
          best_feature = f;
          best_threshold =
              (static_cast<double>(sorted[i].first) + static_cast<double>(sorted[i + 1].first)) * 0.5;
        }
      }
    }
    if (!found) continue;

    const auto mid = std::partition(
        samples.begin() + static_cast<std::ptrdiff_t>(fr.begin),
        samples.begin() + static_cast<std::ptrdiff_t>(fr.end),
        [&](const RegSample& s) { return x(s.row, best_feature) <= best_threshold; });
    const auto split_at = static_cast<std::size_t>(mid - samples.begin());
    const std::int32_t left = add_node(tree);
    const std::int32_t right = add_node(tree);
    TreeNode& node = tree.nodes[fr.node];
    node.feature = static_cast<std::int32_t>(best_feature);
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    node.gain = best_score - parent;
    stack.push_back({static_cast<std::size_t>(right), split_at, fr.end, fr.depth + 1});
    stack.push_back({static_cast<std::size_t>(left), fr.begin, split_at, fr.depth + 1});
  }
  return tree;
}

Tree build_isolation_tree(const Matrix& x, std::span<const std::size_t> rows, std::size_t max_depth,
                          Rng& rng) {
  const std::size_t d = x.cols();
  std::vector<std::size_t> samples(rows.begin(), rows.end());
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  Tree tree;
  add_node(tree);
  std::vector<Frame> stack{{0, 0, samples.size(), 0}};
  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();
    const std::size_t n = fr.end - fr.begin;
    {
      TreeNode& node = tree.nodes[fr.node];
      node.weight = static_cast<double>(n);
      node.value = average_path_length(n);
    }
    if (fr.depth >= max_depth || n <= 1) continue;

    // Draw features without replacement until one varies within the node.
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    for (std::size_t k = 0; k < d && !found; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(uniform_below(rng, d - k));
      std::swap(perm[k], perm[j]);
      const std::size_t f = perm[k];
      float lo = x(samples[fr.begin], f), hi = lo;
      for (std::size_t i = fr.begin + 1; i < fr.end; ++i) {
        lo = std::min(lo, x(samples[i], f));
        hi = std::max(hi, x(samples[i], f));
      }
      if (lo == hi) continue;
      found = true;
      feature = f;
      threshold = lo + uniform_unit(rng) * (static_cast<double>(hi) - lo);
      if (threshold >= hi) threshold = lo;
    }
    if (!found) continue;

    const auto mid = std::partition(samples.begin() + static_cast<std::ptrdiff_t>(fr.begin),
                                    samples.begin() + static_cast<std::ptrdiff_t>(fr.end),
                                    [&](std::size_t r) { return x(r, feature) <= threshold; });
    const auto split_at = static_cast<std::size_t>(mid - samples.begin());
    const std::int32_t left = add_node(tree);
    const std::int32_t right = add_node(tree);
    TreeNode& node = tree.nodes[fr.node];
    node.feature = static_cast<std::int32_t>(feature);
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    node.value = 0.0;
    stack.push_back({static_cast<std::size_t>(right), split_at, fr.end, fr.depth + 1});
    stack.push_back({static_cast<std::size_t>(left), fr.begin, split_at, fr.depth + 1});
  }
  return tree;
}

}  // namespace alnids
