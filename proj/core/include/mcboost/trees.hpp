#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcboost/linalg.hpp"

namespace mcboost::trees {

struct TreeNode {
  bool is_leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, std::size_t n_features, std::size_t max_depth);

  double predict_row(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t max_depth() const { return max_depth_; }
  std::size_t depth() const;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
  std::size_t max_depth_ = 0;
};

struct TreeEnsemble {
  std::vector<RegressionTree> trees;
  std::vector<double> tree_weights;
  double base_value = 0.0;
  std::size_t n_features = 0;
};

// Greedy variance-reduction CART. Split candidates are midpoints between
// consecutive distinct sorted feature values; ties in impurity are broken by
// (lowest feature index, lowest threshold). Leaves predict the mean of the
// targets routed to them. max_depth = 0 yields the mean stump.
RegressionTree fit_tree(const Matrix& x, const Vector& target, std::size_t max_depth,
                        std::size_t min_leaf = 1);

// Stagewise squared-error boosting of the residual target: base_value 0,
// every tree fitted to the running inner residual and added with weight
// learn_rate. Runs the full tree budget with no early stopping.
TreeEnsemble gbm_fit(const Matrix& x, const Vector& target, std::size_t n_trees,
                     double learn_rate, std::size_t max_depth, std::size_t min_leaf = 1);

// Bootstrap-bagged trees with equal weights 1/n_trees and base_value 0.
// Per-tree sample indices are derived deterministically from (seed, tree).
TreeEnsemble rf_fit(const Matrix& x, const Vector& y, std::size_t n_trees,
                    std::size_t max_depth, std::uint64_t seed, std::size_t min_leaf = 1);

// Bagging backend with explicit per-tree row multisets (also the test seam
// for forcing a particular bootstrap).
TreeEnsemble bagged_fit(const Matrix& x, const Vector& y,
                        const std::vector<std::vector<std::size_t>>& samples,
                        std::size_t max_depth, std::size_t min_leaf = 1);

double predict_row(const TreeEnsemble& ens, std::span<const double> x);
Vector predict(const TreeEnsemble& ens, const Matrix& x);

// Raw per-tree evaluations (no weights, no base): column j = tree_j applied
// to every row. These columns are the realized weak learners of the ensemble.
Matrix tree_evaluation_matrix(const TreeEnsemble& ens, const Matrix& x);

std::string ensemble_to_json(const TreeEnsemble& ens);
TreeEnsemble ensemble_from_json(const std::string& text);

}  // namespace mcboost::trees
