#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "groupscope/corpus.hpp"
#include "groupscope/embeddings.hpp"

namespace groupscope {

/// One direction of the recurrent encoder. Gate rows are stacked as
/// input, forget, candidate, output (each hidden_size rows).
struct LstmWeights {
  Eigen::MatrixXd input;           // 4H x D
  Eigen::MatrixXd recurrent;       // 4H x H
  Eigen::MatrixXd bias;            // 4H x 1
  Eigen::MatrixXd initial_hidden;  // H x 1, trainable h_0
};

/// Parameters of one per-attribute multi-task network. The same type holds
/// gradients and optimizer moments.
struct ModelParams {
  LstmWeights forward;
  LstmWeights backward;
  Eigen::MatrixXd attention_weights;  // 2H x 1
  Eigen::MatrixXd attention_bias;     // 1 x 1
  Eigen::MatrixXd group_weights;      // 2 x 2H
  Eigen::MatrixXd group_bias;         // 2 x 1
  Eigen::MatrixXd attribute_weights;  // K x 2H (K = 1 continuous, #levels categorical)
  Eigen::MatrixXd attribute_bias;     // K x 1

  static ModelParams zeros(std::size_t input_dim, std::size_t hidden, std::size_t attribute_outputs);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights; h_0 starts at zero.
  static ModelParams initialized(std::size_t input_dim, std::size_t hidden, std::size_t attribute_outputs,
                                 std::uint64_t seed);

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(forward.input.cols()); }
  std::size_t hidden_size() const noexcept { return static_cast<std::size_t>(forward.recurrent.cols()); }
  std::size_t attribute_outputs() const noexcept { return static_cast<std::size_t>(attribute_bias.rows()); }

  /// Calls f(name, tensor) for every tensor in a fixed order.
  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const;
  bool all_finite() const;
  void set_zero();
  double squared_norm() const;
  void scale(double factor);
  /// this += factor * other
  void add_scaled(const ModelParams& other, double factor);

  bool operator==(const ModelParams& o) const;

private:
  template <class Self, class F>
  static void visit_impl(Self& p, F& f) {
    f("forward.input", p.forward.input);
    f("forward.recurrent", p.forward.recurrent);
    f("forward.bias", p.forward.bias);
    f("forward.initial_hidden", p.forward.initial_hidden);
    f("backward.input", p.backward.input);
    f("backward.recurrent", p.backward.recurrent);
    f("backward.bias", p.backward.bias);
    f("backward.initial_hidden", p.backward.initial_hidden);
    f("attention.weights", p.attention_weights);
    f("attention.bias", p.attention_bias);
    f("group.weights", p.group_weights);
    f("group.bias", p.group_bias);
    f("attribute.weights", p.attribute_weights);
    f("attribute.bias", p.attribute_bias);
  }
};

using ModelGradient = ModelParams;

struct TrainingConfig {
  double lambda = 0.5;
  double learning_rate = 0.005;
  std::size_t max_epochs = 30;
  std::size_t batch_size = 16;
  std::size_t early_stop_patience = 5;
  double gradient_clip_norm = 5.0;
  std::uint64_t seed = 7;
  std::size_t hidden_size = 32;

  void validate() const;
};

nlohmann::json to_json(const TrainingConfig& c);
/// Missing keys keep their defaults.
TrainingConfig training_config_from_json(const nlohmann::json& j);

/// Everything forward() computes for one sequence.
struct AttentionTrace {
  std::string instance_id;
  Eigen::MatrixXd hidden;         // 2H x n, column t = [h_fwd_t; h_bwd_t]
  Eigen::VectorXd scores;         // e_t
  Eigen::VectorXd weights;        // a_t
  Eigen::VectorXd summary;        // sum_t a_t h_t
  std::array<double, 2> group_posterior{};  // indexed by Group
  Eigen::VectorXd attribute_output;  // continuous: 1 raw output; categorical: level probabilities

  std::size_t length() const noexcept { return static_cast<std::size_t>(weights.size()); }
};

AttentionTrace forward(const ModelParams& params, const EmbeddedSequence& x);

/// Joint loss lambda * CE(group) + (1 - lambda) * attribute loss, where the
/// attribute loss is squared error (continuous) or cross-entropy (categorical).
double loss(const AttentionTrace& trace, Group label, const AttributeValue& target, double lambda);

/// Adds scale * d(loss)/d(params) into grad and returns the unscaled loss.
double accumulate_gradient(const ModelParams& params, const EmbeddedSequence& x, Group label,
                           const AttributeValue& target, double lambda, double scale, ModelGradient& grad);

/// Gradient of scale * loss with respect to every parameter.
ModelGradient backward(const ModelParams& params, const EmbeddedSequence& x, Group label,
                       const AttributeValue& target, double lambda, double scale = 1.0);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0;
  double validation_loss = 0;
  double validation_group_accuracy = 0;
  double validation_attribute_metric = 0;  // Pearson r or level accuracy
};

nlohmann::json to_json(const EpochRecord& r);

struct TrainedAttributeModel {
  AttributeSchema attribute;
  ModelParams params;
  TrainingConfig config;
  std::size_t embedding_dimension = 0;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;

  const EpochRecord& best() const { return log.at(best_epoch - 1); }
};

using ProgressCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on the train bucket with early stopping on validation loss.
/// Returns the parameters of the best validation epoch.
TrainedAttributeModel train(const Dataset& d, std::string_view attribute, const EmbeddingPair& embeddings,
                            const TrainingConfig& cfg, const ProgressCallback& progress = {});

/// 0.0, 0.1, ..., 1.0
std::vector<double> lambda_grid();

struct SweepResult {
  double lambda;
  TrainedAttributeModel model;
};
std::vector<SweepResult> sweep_lambda(const Dataset& d, std::string_view attribute, const EmbeddingPair& embeddings,
                                      const TrainingConfig& cfg);

struct Prediction {
  std::array<double, 2> group_posterior{};
  Group group = Group::red;
  /// Continuous estimate, or the ordinal score of the predicted level.
  double attribute_estimate = 0;
  std::optional<std::size_t> attribute_level;
  AttentionTrace trace;
};

Prediction predict(const TrainedAttributeModel& model, const Instance& instance, const EmbeddingPair& embeddings);

// Snapshots -----------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const TrainedAttributeModel& m);
TrainedAttributeModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedAttributeModel& m, const std::filesystem::path& path);
TrainedAttributeModel load_model(const std::filesystem::path& path);

}  // namespace groupscope
