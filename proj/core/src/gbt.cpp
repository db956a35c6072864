#include "ladderkit/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ladderkit/errors.hpp"

namespace ladderkit {

using json = nlohmann::json;

void TrainMatrix::push_row(std::span<const double> x, double y) {
  if (feature_count == 0) feature_count = x.size();
  features.insert(features.end(), x.begin(), x.end());
  targets.push_back(y);
  ++rows;
}

void TrainMatrix::validate() const {
  if (rows < 1 || feature_count < 1) {
    throw ConfigError("training matrix needs at least 1 row and 1 feature");
  }
  if (features.size() != rows * feature_count || targets.size() != rows) {
    throw ConfigError("training matrix shape mismatch");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw ConfigError("non-finite feature value");
  }
  for (double v : targets) {
    if (!std::isfinite(v)) throw ConfigError("non-finite target value");
  }
}

double TreeEnsemble::predict(std::span<const double> x) const {
  if (x.size() != feature_count) {
    throw ModelError("feature dimension mismatch: model expects " +
                     std::to_string(feature_count) + ", got " +
                     std::to_string(x.size()));
  }
  double acc = 0.0;
  for (const RegressionTree& tree : trees) acc += tree.value_at(x);
  return base_score + learning_rate * acc;
}

CompiledEnsemble::CompiledEnsemble(const TreeEnsemble& model)
    : base_score_(model.base_score),
      learning_rate_(model.learning_rate),
      feature_count_(model.feature_count) {
  size_t total = 0;
  for (const RegressionTree& tree : model.trees) total += tree.nodes.size();
  nodes_.reserve(total);
  roots_.reserve(model.trees.size());
  for (const RegressionTree& tree : model.trees) {
    if (tree.nodes.empty()) continue;
    roots_.push_back(static_cast<int32_t>(nodes_.size()));
    // Pre-order emission keeps each left child adjacent to its parent;
    // only the right-child index needs storing.
    const auto emit = [&](auto&& self, int32_t src) -> int32_t {
      const TreeNode& node = tree.nodes[static_cast<size_t>(src)];
      const int32_t at = static_cast<int32_t>(nodes_.size());
      nodes_.push_back(
          {node.feature < 0 ? node.leaf : node.threshold, node.feature, -1});
      if (node.feature >= 0) {
        self(self, node.left);
        nodes_[static_cast<size_t>(at)].right = self(self, node.right);
      }
      return at;
    };
    emit(emit, 0);
  }
}

double CompiledEnsemble::predict(std::span<const double> x) const {
  if (x.size() != feature_count_) {
    throw ModelError("feature dimension mismatch: model expects " +
                     std::to_string(feature_count_) + ", got " +
                     std::to_string(x.size()));
  }
  double acc = 0.0;
  const Node* nodes = nodes_.data();
  for (const int32_t root : roots_) {
    const Node* node = nodes + root;
    while (node->feature >= 0) {
      node = x[static_cast<size_t>(node->feature)] < node->value
                 ? node + 1
                 : nodes + node->right;
    }
    acc += node->value;
  }
  return base_score_ + learning_rate_ * acc;
}

namespace {

struct NodeStats {
  long count = 0;
  double sum = 0.0;
};

struct SplitChoice {
  double gain = 0.0;  // variance-reduction score; > 0 required to split
  int feature = -1;
  double threshold = 0.0;
};

// Scan state per frontier node while sweeping one feature in sorted
// order.
struct ScanState {
  long count_left = 0;
  double sum_left = 0.0;
  double prev_value = 0.0;
  bool has_prev = false;
};

// Grows one tree over the current residuals, level by level.
// `leaf_value_of` receives each sample's leaf value for the residual
// update. Candidate thresholds sit at midpoints between consecutive
// distinct feature values of a node's samples.
RegressionTree build_tree(const TrainMatrix& data,
                          const std::vector<double>& residuals,
                          const std::vector<std::vector<uint32_t>>& order,
                          const GbtParams& params,
                          std::vector<double>& leaf_value_of) {
  const size_t n = data.rows;
  const size_t n_features = data.feature_count;
  const long msl = params.min_samples_leaf;

  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<NodeStats> stats(1);
  stats[0].count = static_cast<long>(n);
  double root_sum = 0.0;
  for (size_t i = 0; i < n; ++i) root_sum += residuals[i];
  stats[0].sum = root_sum;

  std::vector<int32_t> node_of(n, 0);
  std::vector<int32_t> frontier{0};
  // slot_of[node] indexes the per-level scratch arrays, -1 off-frontier.
  std::vector<int32_t> slot_of{0};

  for (int depth = 0; depth < params.max_depth && !frontier.empty();
       ++depth) {
    const size_t k = frontier.size();
    std::vector<SplitChoice> best(k);
    std::vector<ScanState> scan(k);

    for (size_t f = 0; f < n_features; ++f) {
      std::fill(scan.begin(), scan.end(), ScanState{});
      for (uint32_t idx : order[f]) {
        const int32_t node = node_of[idx];
        const int32_t slot = slot_of[node];
        if (slot < 0) continue;
        const double value = data.at(idx, f);
        ScanState& s = scan[slot];
        if (s.has_prev && value > s.prev_value) {
          const long n_left = s.count_left;
          const long n_right = stats[node].count - n_left;
          if (n_left >= msl && n_right >= msl) {
            const double sum_left = s.sum_left;
            const double sum_right = stats[node].sum - sum_left;
            const double gain = sum_left * sum_left / n_left +
                                sum_right * sum_right / n_right -
                                stats[node].sum * stats[node].sum /
                                    stats[node].count;
            // Strict > keeps the first candidate on ties; features and
            // thresholds are visited in ascending order.
            if (gain > best[slot].gain) {
              best[slot] = {gain, static_cast<int>(f),
                            (s.prev_value + value) / 2.0};
            }
          }
        }
        ++s.count_left;
        s.sum_left += residuals[idx];
        s.prev_value = value;
        s.has_prev = true;
      }
    }

    // Apply the chosen splits; everything else becomes a leaf.
    std::vector<int32_t> next_frontier;
    for (size_t slot = 0; slot < k; ++slot) {
      const int32_t node = frontier[slot];
      if (best[slot].feature >= 0 && best[slot].gain > 0.0) {
        const int32_t left = static_cast<int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        tree.nodes[node].feature = best[slot].feature;
        tree.nodes[node].threshold = best[slot].threshold;
        tree.nodes[node].left = left;
        tree.nodes[node].right = left + 1;
        stats.resize(tree.nodes.size());
        next_frontier.push_back(left);
        next_frontier.push_back(left + 1);
      } else {
        tree.nodes[node].leaf = stats[node].sum / stats[node].count;
      }
    }

    // Re-route samples and rebuild child stats in sample-index order so
    // sums accumulate deterministically.
    slot_of.assign(tree.nodes.size(), -1);
    for (size_t i = 0; i < next_frontier.size(); ++i) {
      slot_of[next_frontier[i]] = static_cast<int32_t>(i);
    }
    for (size_t i = 0; i < n; ++i) {
      const int32_t node = node_of[i];
      const TreeNode& tn = tree.nodes[node];
      if (tn.feature < 0) continue;
      const int32_t child =
          data.at(i, tn.feature) < tn.threshold ? tn.left : tn.right;
      node_of[i] = child;
      ++stats[child].count;
      stats[child].sum += residuals[i];
    }
    frontier = std::move(next_frontier);
  }

  // Depth cap: any surviving frontier nodes finish as leaves.
  for (int32_t node : frontier) {
    tree.nodes[node].leaf = stats[node].sum / stats[node].count;
  }

  for (size_t i = 0; i < n; ++i) {
    leaf_value_of[i] = tree.nodes[node_of[i]].leaf;
  }
  return tree;
}

}  // namespace

TreeEnsemble fit(const TrainMatrix& data, const GbtParams& params) {
  data.validate();
  if (params.max_depth < 1 || params.n_trees < 1 ||
      params.min_samples_leaf < 1 || params.learning_rate <= 0.0 ||
      params.learning_rate > 1.0) {
    throw ConfigError("invalid boosting hyperparameters");
  }

  TreeEnsemble model;
  model.learning_rate = params.learning_rate;
  model.feature_count = data.feature_count;

  double sum = 0.0;
  for (double y : data.targets) sum += y;
  model.base_score = sum / static_cast<double>(data.rows);

  // Presort each feature once by (value, row) so scans are total-ordered.
  std::vector<std::vector<uint32_t>> order(data.feature_count);
  for (size_t f = 0; f < data.feature_count; ++f) {
    auto& idx = order[f];
    idx.resize(data.rows);
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(), [&](uint32_t a, uint32_t b) {
      const double va = data.at(a, f);
      const double vb = data.at(b, f);
      return va < vb || (va == vb && a < b);
    });
  }

  std::vector<double> residuals(data.rows);
  for (size_t i = 0; i < data.rows; ++i) {
    residuals[i] = data.targets[i] - model.base_score;
  }

  std::vector<double> leaf_value_of(data.rows);
  for (int m = 0; m < params.n_trees; ++m) {
    RegressionTree tree =
        build_tree(data, residuals, order, params, leaf_value_of);
    if (tree.nodes.size() == 1 && tree.nodes[0].leaf == 0.0) {
      break;  // residuals fully fitted, nothing left to boost
    }
    for (size_t i = 0; i < data.rows; ++i) {
      residuals[i] -= params.learning_rate * leaf_value_of[i];
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

namespace {

json tree_to_json(const RegressionTree& tree) {
  json nodes = json::array();
  for (const TreeNode& n : tree.nodes) {
    if (n.feature < 0) {
      nodes.push_back(json{{"leaf", n.leaf}});
    } else {
      nodes.push_back(json{{"feat", n.feature},
                           {"thr", n.threshold},
                           {"left", n.left},
                           {"right", n.right}});
    }
  }
  return json{{"nodes", std::move(nodes)}};
}

RegressionTree tree_from_json(const json& jt, size_t feature_count,
                              const std::string& origin) {
  if (!jt.contains("nodes") || !jt["nodes"].is_array() ||
      jt["nodes"].empty()) {
    throw ModelError(origin + ": tree without nodes");
  }
  RegressionTree tree;
  const auto n_nodes = static_cast<int64_t>(jt["nodes"].size());
  for (const json& jn : jt["nodes"]) {
    TreeNode node;
    if (jn.contains("leaf")) {
      node.leaf = jn.at("leaf").get<double>();
    } else {
      node.feature = jn.at("feat").get<int32_t>();
      node.threshold = jn.at("thr").get<double>();
      node.left = jn.at("left").get<int32_t>();
      node.right = jn.at("right").get<int32_t>();
      if (node.feature < 0 ||
          static_cast<size_t>(node.feature) >= feature_count) {
        throw ModelError(origin + ": node feature index out of range");
      }
      if (node.left <= 0 || node.left >= n_nodes || node.right <= 0 ||
          node.right >= n_nodes) {
        throw ModelError(origin + ": node child index out of range");
      }
    }
    tree.nodes.push_back(node);
  }
  return tree;
}

}  // namespace

std::string model_to_json(const TreeEnsemble& model) {
  json j;
  j["version"] = "1";
  j["base_score"] = model.base_score;
  j["learning_rate"] = model.learning_rate;
  j["feature_count"] = model.feature_count;
  json trees = json::array();
  for (const RegressionTree& tree : model.trees) {
    trees.push_back(tree_to_json(tree));
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

TreeEnsemble model_from_json(const std::string& text,
                             const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(origin + ": parse error at byte " +
                     std::to_string(e.byte) + ": " + e.what());
  }
  try {
    const std::string version = j.at("version").get<std::string>();
    if (version != "1") {
      throw ModelError(origin + ": unsupported model schema version '" +
                       version + "' (expected \"1\")");
    }
    TreeEnsemble model;
    model.base_score = j.at("base_score").get<double>();
    model.learning_rate = j.at("learning_rate").get<double>();
    model.feature_count = j.at("feature_count").get<size_t>();
    if (model.feature_count < 1) {
      throw ModelError(origin + ": feature_count must be >= 1");
    }
    for (const json& jt : j.at("trees")) {
      model.trees.push_back(tree_from_json(jt, model.feature_count, origin));
    }
    return model;
  } catch (const json::exception& e) {
    throw ModelError(origin + ": malformed model file: " + e.what());
  }
}

void save_model(const TreeEnsemble& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << model_to_json(model) << "\n";
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

TreeEnsemble load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return model_from_json(text, path);
}

}  // namespace ladderkit
