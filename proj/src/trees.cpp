#include "trees.hpp"

#include <algorithm>
#include <numeric>

namespace nidslabel::detail {

namespace {

struct Entry {
  double value;
  double a;
  double b;
  double c;
};

class Builder {
 public:
  Builder(const ColumnMatrix& x, std::span<const double> a, std::span<const double> b,
          std::span<const double> counts, const TreeConfig& config, Rng& rng)
      : x_(x), a_(a), b_(b), c_(counts), config_(config), rng_(rng),
        stamp_(static_cast<std::size_t>(x.rows()), 0), side_(static_cast<std::size_t>(x.rows()), 0),
        features_(static_cast<std::size_t>(x.cols())) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree run() {
    std::vector<int> samples;
    for (std::size_t i = 0; i < c_.size(); ++i)
      if (c_[i] > 0) samples.push_back(static_cast<int>(i));
    build(samples, 0);
    return std::move(tree_);
  }

 private:
  double loss(double a, double b) const {
    if (config_.criterion == SplitCriterion::gini) return a <= 0 ? 0.0 : 2.0 * b * (a - b) / a;
    return -b * b / (a + config_.l2);
  }

  double leaf_value(double a, double b) const {
    if (config_.criterion == SplitCriterion::gini) return a > 0 ? b / a : 0.0;
    return -b / (a + config_.l2);
  }

  int add_leaf(double value) {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.value.push_back(value);
    return static_cast<int>(tree_.feature.size()) - 1;
  }

  int build(std::vector<int>& samples, int depth) {
    double sa = 0, sb = 0, sc = 0;
    for (int s : samples) {
      sa += a_[s];
      sb += b_[s];
      sc += c_[s];
    }
    const int node = add_leaf(leaf_value(sa, sb));
    const bool depth_ok = config_.max_depth <= 0 || depth < config_.max_depth;
    if (!depth_ok || samples.size() < 2 || sc < 2 * config_.min_leaf) return node;
    if (config_.criterion == SplitCriterion::gini && (sb <= 1e-12 * sa || sa - sb <= 1e-12 * sa)) return node;

    ++current_;
    for (int s : samples) stamp_[s] = current_;

    const std::size_t nfeat = features_.size();
    const std::size_t k = config_.max_features < 0
                              ? nfeat
                              : std::min(nfeat, static_cast<std::size_t>(config_.max_features));
    if (k < nfeat) {
      for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng_.uniform_index(nfeat - i));
        std::swap(features_[i], features_[j]);
      }
    }

    const double parent = loss(sa, sb);
    double best_gain = config_.criterion == SplitCriterion::gini ? -1e-12 : 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t fi = 0; fi < k; ++fi) {
      const int f = features_[fi];
      entries_.clear();
      double na = 0, nb = 0, nc = 0;
      for (ColumnMatrix::InnerIterator it(x_, f); it; ++it) {
        const auto r = static_cast<std::size_t>(it.row());
        if (stamp_[r] != current_) continue;
        entries_.push_back({it.value(), a_[r], b_[r], c_[r]});
        na += a_[r];
        nb += b_[r];
        nc += c_[r];
      }
      if (entries_.empty()) continue;
      if (entries_.size() < samples.size()) entries_.push_back({0.0, sa - na, sb - nb, sc - nc});
      std::sort(entries_.begin(), entries_.end(), [](const Entry& l, const Entry& r) { return l.value < r.value; });
      double la = 0, lb = 0, lc = 0;
      for (std::size_t i = 0; i + 1 < entries_.size(); ++i) {
        la += entries_[i].a;
        lb += entries_[i].b;
        lc += entries_[i].c;
        if (entries_[i].value == entries_[i + 1].value) continue;
        if (lc < config_.min_leaf || sc - lc < config_.min_leaf) continue;
        const double gain = parent - loss(la, lb) - loss(sa - la, sb - lb);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (entries_[i].value + entries_[i + 1].value);
        }
      }
    }
    if (best_feature < 0) return node;

    const char zero_side = 0.0 <= best_threshold ? 0 : 1;
    for (int s : samples) side_[s] = zero_side;
    for (ColumnMatrix::InnerIterator it(x_, best_feature); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row());
      if (stamp_[r] == current_) side_[r] = it.value() <= best_threshold ? 0 : 1;
    }
    std::vector<int> left_samples, right_samples;
    for (int s : samples) (side_[s] == 0 ? left_samples : right_samples).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    tree_.feature[node] = best_feature;
    tree_.threshold[node] = best_threshold;
    const int l = build(left_samples, depth + 1);
    const int r = build(right_samples, depth + 1);
    tree_.left[node] = l;
    tree_.right[node] = r;
    return node;
  }

  const ColumnMatrix& x_;
  std::span<const double> a_, b_, c_;
  const TreeConfig& config_;
  Rng& rng_;
  std::vector<int> stamp_;
  std::vector<char> side_;
  std::vector<int> features_;
  std::vector<Entry> entries_;
  int current_ = 0;
  DecisionTree tree_;
};

}  // namespace

DecisionTree grow_tree(const ColumnMatrix& x, std::span<const double> a, std::span<const double> b,
                       std::span<const double> counts, const TreeConfig& config, Rng& rng) {
  return Builder(x, a, b, counts, config, rng).run();
}

}  // namespace nidslabel::detail
