#pragma once

// Internal CART builder shared by the random forest and the boosted trees.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "nidslabel/classifiers.hpp"
#include "nidslabel/random.hpp"

namespace nidslabel::detail {

using ColumnMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

enum class SplitCriterion {
  gini,    // stats (weight, weight * y), leaf = positive fraction
  newton,  // stats (hessian, gradient), leaf = -G / (H + lambda)
};

struct TreeConfig {
  SplitCriterion criterion = SplitCriterion::gini;
  int max_depth = 0;        // 0 = unlimited
  double min_leaf = 1.0;    // minimum stat `a` (weight or hessian count) per child
  int max_features = -1;    // -1 = all features
  double l2 = 1.0;          // newton only
};

// Grows one tree over the samples with a[i] > 0.
DecisionTree grow_tree(const ColumnMatrix& x, std::span<const double> a, std::span<const double> b,
                       std::span<const double> counts, const TreeConfig& config, Rng& rng);

}  // namespace nidslabel::detail
