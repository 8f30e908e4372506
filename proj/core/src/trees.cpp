#include "mcboost/trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

namespace mcboost::trees {

namespace {

using nlohmann::json;

// Column-wise argsort of x, shared by all trees of one fit call.
std::vector<std::vector<std::uint32_t>> presort_columns(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<std::vector<std::uint32_t>> sorted(d);
  for (std::size_t f = 0; f < d; ++f) {
    auto& idx = sorted[f];
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double xa = x(a, f), xb = x(b, f);
      if (xa != xb) return xa < xb;
      return a < b;
    });
  }
  return sorted;
}

struct NodeStats {
  double weight = 0.0;  // multiset size routed here
  double sum = 0.0;
  double sumsq = 0.0;

  double sse() const {
    if (weight <= 0.0) return 0.0;
    return std::max(0.0, sumsq - sum * sum / weight);
  }
  double mean() const { return weight > 0.0 ? sum / weight : 0.0; }
};

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double children_sse = std::numeric_limits<double>::infinity();
};

// Weighted CART fitter over a shared presort. Row weights are bootstrap
// multiplicities (all ones for a plain fit); zero-weight rows are invisible.
class TreeFitter {
 public:
  TreeFitter(const Matrix& x, const std::vector<std::vector<std::uint32_t>>& sorted)
      : x_(x), sorted_(sorted) {}

  RegressionTree fit(const Vector& target, const std::vector<double>& weights,
                     std::size_t max_depth, std::size_t min_leaf) const {
    const std::size_t n = x_.rows();
    require(target.size() == n, "fit_tree: target length must match row count");
    require(min_leaf >= 1, "fit_tree: min_leaf must be at least 1");

    std::vector<TreeNode> nodes;
    std::vector<std::int32_t> node_of_row(n, 0);
    NodeStats root;
    for (std::size_t i = 0; i < n; ++i) {
      root.weight += weights[i];
      root.sum += weights[i] * target[i];
      root.sumsq += weights[i] * target[i] * target[i];
    }
    require(root.weight > 0.0, "fit_tree: empty training sample");
    nodes.push_back(TreeNode{true, 0, 0.0, root.mean(), -1, -1});
    std::vector<std::int32_t> active = {0};
    std::vector<NodeStats> stats = {root};  // indexed like nodes

    for (std::size_t depth = 0; depth < max_depth && !active.empty(); ++depth) {
      std::vector<SplitChoice> best(nodes.size());
      std::vector<NodeStats> left_acc(nodes.size());
      std::vector<double> last_value(nodes.size(), 0.0);
      std::vector<bool> seen(nodes.size(), false);
      std::vector<bool> is_active(nodes.size(), false);
      for (std::int32_t nid : active) is_active[nid] = true;

      for (std::size_t f = 0; f < x_.cols(); ++f) {
        for (std::int32_t nid : active) {
          left_acc[nid] = NodeStats{};
          seen[nid] = false;
        }
        for (std::uint32_t i : sorted_[f]) {
          const std::int32_t nid = node_of_row[i];
          if (nid < 0 || !is_active[nid] || weights[i] <= 0.0) continue;
          const double xv = x_(i, f);
          if (seen[nid] && xv != last_value[nid]) {
            const NodeStats& l = left_acc[nid];
            const double right_w = stats[nid].weight - l.weight;
            if (l.weight >= static_cast<double>(min_leaf) &&
                right_w >= static_cast<double>(min_leaf)) {
              NodeStats r;
              r.weight = right_w;
              r.sum = stats[nid].sum - l.sum;
              r.sumsq = stats[nid].sumsq - l.sumsq;
              const double sse = l.sse() + r.sse();
              if (sse < best[nid].children_sse) {
                best[nid].found = true;
                best[nid].feature = f;
                best[nid].threshold = 0.5 * (last_value[nid] + xv);
                best[nid].children_sse = sse;
              }
            }
          }
          left_acc[nid].weight += weights[i];
          left_acc[nid].sum += weights[i] * target[i];
          left_acc[nid].sumsq += weights[i] * target[i] * target[i];
          last_value[nid] = xv;
          seen[nid] = true;
        }
      }

      std::vector<std::int32_t> next_active;
      std::vector<std::int32_t> left_child(nodes.size(), -1);
      for (std::int32_t nid : active) {
        const SplitChoice c = best[nid];  // by value: best grows below
        const double parent_sse = stats[nid].sse();
        if (!c.found || !(c.children_sse < parent_sse - 1e-12 * (1.0 + parent_sse))) {
          continue;  // no improving split: stays a leaf
        }
        const std::int32_t l = static_cast<std::int32_t>(nodes.size());
        nodes[nid].is_leaf = false;
        nodes[nid].feature = c.feature;
        nodes[nid].threshold = c.threshold;
        nodes[nid].left = l;
        nodes[nid].right = l + 1;
        nodes.push_back(TreeNode{});
        nodes.push_back(TreeNode{});
        stats.push_back(NodeStats{});
        stats.push_back(NodeStats{});
        best.push_back(SplitChoice{});
        best.push_back(SplitChoice{});
        left_child[nid] = l;
        next_active.push_back(l);
        next_active.push_back(l + 1);
      }
      if (next_active.empty()) break;

      for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t nid = node_of_row[i];
        if (nid < 0 || left_child.size() <= static_cast<std::size_t>(nid) ||
            left_child[nid] < 0) {
          continue;
        }
        const TreeNode& nd = nodes[nid];
        const std::int32_t child =
            x_(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
        node_of_row[i] = child;
        if (weights[i] > 0.0) {
          stats[child].weight += weights[i];
          stats[child].sum += weights[i] * target[i];
          stats[child].sumsq += weights[i] * target[i] * target[i];
        }
      }
      for (std::int32_t nid : next_active) {
        nodes[nid].value = stats[nid].mean();
      }
      active = std::move(next_active);
    }
    return RegressionTree(std::move(nodes), x_.cols(), max_depth);
  }

 private:
  const Matrix& x_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
};

json node_to_json(const std::vector<TreeNode>& nodes, int id) {
  const TreeNode& n = nodes[id];
  if (n.is_leaf) return json{{"value", n.value}};
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", node_to_json(nodes, n.left)},
              {"right", node_to_json(nodes, n.right)}};
}

int node_from_json(const json& j, std::vector<TreeNode>& nodes) {
  const int id = static_cast<int>(nodes.size());
  nodes.push_back(TreeNode{});
  if (j.contains("value")) {
    nodes[id].value = j.at("value").get<double>();
    return id;
  }
  nodes[id].is_leaf = false;
  nodes[id].feature = j.at("feature").get<std::size_t>();
  nodes[id].threshold = j.at("threshold").get<double>();
  const int l = node_from_json(j.at("left"), nodes);
  const int r = node_from_json(j.at("right"), nodes);
  nodes[id].left = l;
  nodes[id].right = r;
  return id;
}

}  // namespace

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, std::size_t n_features,
                               std::size_t max_depth)
    : nodes_(std::move(nodes)), n_features_(n_features), max_depth_(max_depth) {
  require(!nodes_.empty(), "RegressionTree: empty node list");
}

double RegressionTree::predict_row(std::span<const double> x) const {
  require(x.size() == n_features_, "RegressionTree: feature count mismatch");
  int id = 0;
  while (!nodes_[id].is_leaf) {
    id = x[nodes_[id].feature] <= nodes_[id].threshold ? nodes_[id].left : nodes_[id].right;
  }
  return nodes_[id].value;
}

std::size_t RegressionTree::depth() const {
  // iterative depth over the node array
  std::vector<std::pair<int, std::size_t>> stack = {{0, 0}};
  std::size_t d = 0;
  while (!stack.empty()) {
    auto [id, dep] = stack.back();
    stack.pop_back();
    d = std::max(d, dep);
    if (!nodes_[id].is_leaf) {
      stack.push_back({nodes_[id].left, dep + 1});
      stack.push_back({nodes_[id].right, dep + 1});
    }
  }
  return d;
}

RegressionTree fit_tree(const Matrix& x, const Vector& target, std::size_t max_depth,
                        std::size_t min_leaf) {
  require(x.rows() == target.size() && x.rows() >= 1, "fit_tree: empty or mismatched input");
  const auto sorted = presort_columns(x);
  TreeFitter fitter(x, sorted);
  return fitter.fit(target, std::vector<double>(x.rows(), 1.0), max_depth, min_leaf);
}

TreeEnsemble gbm_fit(const Matrix& x, const Vector& target, std::size_t n_trees,
                     double learn_rate, std::size_t max_depth, std::size_t min_leaf) {
  require(n_trees >= 1, "gbm_fit: n_trees must be at least 1");
  require(learn_rate > 0.0 && learn_rate <= 1.0, "gbm_fit: learn_rate must be in (0,1]");
  require(x.rows() == target.size() && x.rows() >= 1, "gbm_fit: empty or mismatched input");

  const auto sorted = presort_columns(x);
  TreeFitter fitter(x, sorted);
  const std::vector<double> unit_weights(x.rows(), 1.0);

  TreeEnsemble ens;
  ens.base_value = 0.0;
  ens.n_features = x.cols();
  Vector residual = target;
  for (std::size_t t = 0; t < n_trees; ++t) {
    RegressionTree tree = fitter.fit(residual, unit_weights, max_depth, min_leaf);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      residual[i] -= learn_rate * tree.predict_row(x.row(i));
    }
    ens.trees.push_back(std::move(tree));
    ens.tree_weights.push_back(learn_rate);
  }
  return ens;
}

TreeEnsemble bagged_fit(const Matrix& x, const Vector& y,
                        const std::vector<std::vector<std::size_t>>& samples,
                        std::size_t max_depth, std::size_t min_leaf) {
  require(!samples.empty(), "bagged_fit: needs at least one sample");
  require(x.rows() == y.size() && x.rows() >= 1, "bagged_fit: empty or mismatched input");
  const auto sorted = presort_columns(x);
  TreeFitter fitter(x, sorted);

  TreeEnsemble ens;
  ens.base_value = 0.0;
  ens.n_features = x.cols();
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto& sample : samples) {
    std::vector<double> weights(x.rows(), 0.0);
    for (std::size_t i : sample) {
      require(i < x.rows(), "bagged_fit: sample index out of range");
      weights[i] += 1.0;
    }
    ens.trees.push_back(fitter.fit(y, weights, max_depth, min_leaf));
    ens.tree_weights.push_back(w);
  }
  return ens;
}

TreeEnsemble rf_fit(const Matrix& x, const Vector& y, std::size_t n_trees,
                    std::size_t max_depth, std::uint64_t seed, std::size_t min_leaf) {
  require(n_trees >= 1, "rf_fit: n_trees must be at least 1");
  const std::size_t n = x.rows();
  std::vector<std::vector<std::size_t>> samples(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::mt19937_64 rng(mix_seed(seed, t));
    samples[t].resize(n);
    for (std::size_t i = 0; i < n; ++i) samples[t][i] = rng() % n;
  }
  return bagged_fit(x, y, samples, max_depth, min_leaf);
}

double predict_row(const TreeEnsemble& ens, std::span<const double> x) {
  double out = ens.base_value;
  for (std::size_t t = 0; t < ens.trees.size(); ++t) {
    out += ens.tree_weights[t] * ens.trees[t].predict_row(x);
  }
  return out;
}

Vector predict(const TreeEnsemble& ens, const Matrix& x) {
  if (!ens.trees.empty()) {
    require(x.cols() == ens.n_features, "predict: feature count mismatch");
  }
  Vector out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(ens, x.row(i));
  return out;
}

Matrix tree_evaluation_matrix(const TreeEnsemble& ens, const Matrix& x) {
  require(!ens.trees.empty(), "tree_evaluation_matrix: empty ensemble");
  require(x.cols() == ens.n_features, "tree_evaluation_matrix: feature count mismatch");
  Matrix b(x.rows(), ens.trees.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (std::size_t t = 0; t < ens.trees.size(); ++t) {
      b(i, t) = ens.trees[t].predict_row(row);
    }
  }
  return b;
}

std::string ensemble_to_json(const TreeEnsemble& ens) {
  json j;
  j["base_value"] = ens.base_value;
  j["n_features"] = ens.n_features;
  j["trees"] = json::array();
  for (std::size_t t = 0; t < ens.trees.size(); ++t) {
    j["trees"].push_back(json{{"weight", ens.tree_weights[t]},
                              {"max_depth", ens.trees[t].max_depth()},
                              {"root", node_to_json(ens.trees[t].nodes(), 0)}});
  }
  return j.dump();
}

TreeEnsemble ensemble_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("ensemble_from_json: ") + e.what());
  }
  TreeEnsemble ens;
  ens.base_value = j.at("base_value").get<double>();
  ens.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& jt : j.at("trees")) {
    std::vector<TreeNode> nodes;
    node_from_json(jt.at("root"), nodes);
    ens.trees.emplace_back(std::move(nodes), ens.n_features,
                           jt.at("max_depth").get<std::size_t>());
    ens.tree_weights.push_back(jt.at("weight").get<double>());
  }
  return ens;
}

}  // namespace mcboost::trees
