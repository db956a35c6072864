#ifndef LADDERKIT_GBT_HPP_
#define LADDERKIT_GBT_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ladderkit {

// Dense training data, row-major. No NaN/Inf entries allowed.
struct TrainMatrix {
  size_t rows = 0;
  size_t feature_count = 0;
  std::vector<double> features;  // rows * feature_count
  std::vector<double> targets;   // rows

  double at(size_t row, size_t feature) const {
    return features[row * feature_count + feature];
  }
  void push_row(std::span<const double> x, double y);
  void push_row(std::initializer_list<double> x, double y) {
    push_row(std::span<const double>(x.begin(), x.size()), y);
  }
  void validate() const;  // throws ConfigError
};

// One binary regression tree, nodes in a flat array, node 0 the root.
// Leaves have feature == -1 and carry the (unscaled) leaf value.
struct TreeNode {
  int32_t feature = -1;
  double threshold = 0.0;
  int32_t left = -1;
  int32_t right = -1;
  double leaf = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  // Routing rule: go left when x[feature] < threshold, right otherwise.
  double value_at(std::span<const double> x) const {
    const TreeNode* node = nodes.data();
    while (node->feature >= 0) {
      node = nodes.data() + (x[node->feature] < node->threshold ? node->left
                                                                : node->right);
    }
    return node->leaf;
  }
};

struct GbtParams {
  int max_depth = 10;
  int n_trees = 400;
  double learning_rate = 0.1;
  int min_samples_leaf = 2;
};

// Squared-error gradient-boosted tree ensemble.
// prediction(x) = base_score + learning_rate * sum of leaf values.
class TreeEnsemble {
 public:
  double base_score = 0.0;
  double learning_rate = 0.1;
  size_t feature_count = 0;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const;
  double predict(std::initializer_list<double> x) const {
    return predict(std::span<const double>(x.begin(), x.size()));
  }
};

// Read-only evaluation form of an ensemble: every tree flattened into a
// single packed node array (16 bytes per node, the left child stored
// adjacent to its parent) so a walk touches half the memory of the
// authoring structure. Predictions are bit-identical to the source.
class CompiledEnsemble {
 public:
  CompiledEnsemble() = default;
  explicit CompiledEnsemble(const TreeEnsemble& model);

  bool ready() const { return feature_count_ != 0; }
  double predict(std::span<const double> x) const;
  double predict(std::initializer_list<double> x) const {
    return predict(std::span<const double>(x.begin(), x.size()));
  }

 private:
  struct Node {
    double value = 0.0;     // split threshold, or leaf value when feature < 0
    int32_t feature = -1;
    int32_t right = -1;     // left child is the next node in the array
  };
  std::vector<Node> nodes_;
  std::vector<int32_t> roots_;
  double base_score_ = 0.0;
  double learning_rate_ = 0.0;
  size_t feature_count_ = 0;
};

// Exact greedy squared-error boosting. Splits maximize variance
// reduction; ties break to the lowest feature index, then the lowest
// threshold. Fully deterministic: identical data and parameters yield a
// byte-identical serialized model. All-equal targets produce a
// base-score-only ensemble with zero trees.
TreeEnsemble fit(const TrainMatrix& data, const GbtParams& params);

// JSON model file, schema version "1". load(save(m)) predicts
// bit-identically to m.
void save_model(const TreeEnsemble& model, const std::string& path);
TreeEnsemble load_model(const std::string& path);

// In-memory flavors of the same schema (used by the bundle store).
std::string model_to_json(const TreeEnsemble& model);
TreeEnsemble model_from_json(const std::string& text,
                             const std::string& origin);

}  // namespace ladderkit

#endif  // LADDERKIT_GBT_HPP_
