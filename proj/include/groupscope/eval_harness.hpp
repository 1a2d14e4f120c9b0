#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "groupscope/contrastive.hpp"
#include "groupscope/corpus.hpp"
#include "groupscope/embeddings.hpp"
#include "groupscope/multitask_model.hpp"

namespace groupscope {

struct EvalRecord {
  std::string instance_id;
  Group truth = Group::red;
  Group predicted = Group::red;
  double blue_posterior = 0;
  bool correct = false;
  // Attribute prediction; absent for the tree.
  std::optional<double> attribute_prediction;  // continuous estimate or ordinal score
  std::optional<double> attribute_truth;
  std::optional<std::size_t> predicted_level;
  std::optional<std::size_t> true_level;
};

struct Metrics {
  std::size_t count = 0;
  double accuracy = 0;
  double f1 = 0;  // Red is the positive class
  std::optional<double> attribute_metric;  // Pearson r or level accuracy
  std::string attribute_metric_name;       // "pearson_r", "level_accuracy" or empty
};

struct Evaluation {
  std::string source;  // "neural" or "tree"
  std::string attribute;
  Metrics metrics;
  std::vector<EvalRecord> records;
};

double accuracy(const std::vector<EvalRecord>& records);
/// F1 for the Red class; 0 when the class is never predicted nor present.
double f1_red(const std::vector<EvalRecord>& records);
Metrics compute_metrics(const std::vector<EvalRecord>& records, bool categorical_attribute);

/// Test bucket evaluation (all instances when no split is assigned).
Evaluation evaluate(const TrainedAttributeModel& model, const Dataset& d, const EmbeddingPair& embeddings);
Evaluation evaluate(const DecisionTree& tree, const Dataset& d);

inline constexpr std::size_t kHistogramBins = 20;

struct HistogramBin {
  double lower = 0;
  double upper = 0;
  std::vector<std::string> correct;
  std::vector<std::string> wrong;
};

/// bins[0] covers [0, 0.05]; bin j > 0 covers (0.05 j, 0.05 (j + 1)].
struct DualHistogram {
  std::vector<HistogramBin> bins;
  std::size_t total = 0;
};

std::size_t histogram_bin(double blue_posterior);
DualHistogram dual_histogram(const std::vector<EvalRecord>& records);

struct BaselineRow {
  std::string name;
  std::optional<double> lambda;
  std::optional<double> attribute_metric;
  double group_accuracy = 0;
  double group_f1 = 0;
};

struct BaselineTable {
  std::string attribute;
  std::string attribute_metric_name;
  std::vector<BaselineRow> rows;  // tree, lambda 1, lambda 0, multi-task
};

/// Trains the three neural variants with cfg (lambda overridden) and fits the
/// attribute tree, then evaluates each on the test bucket.
BaselineTable compare_baselines(const Dataset& d, const std::string& attribute, const EmbeddingPair& embeddings,
                                const TrainingConfig& cfg, const TreeConfig& tree_cfg = {});
/// Builds the table from evaluations that already exist.
BaselineTable baseline_table(const std::string& attribute, const Evaluation& tree, const Evaluation& group_only,
                             const Evaluation& attribute_only, const Evaluation& multitask, double multitask_lambda);
/// Aligned text. The multi-task row shows deltas in parentheses: group
/// metrics against lambda = 1, the attribute metric against lambda = 0.
std::string render(const BaselineTable& t);

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const EvalRecord& r);
nlohmann::json to_json(const Evaluation& e);
nlohmann::json to_json(const DualHistogram& h);
nlohmann::json to_json(const BaselineTable& t);

}  // namespace groupscope
