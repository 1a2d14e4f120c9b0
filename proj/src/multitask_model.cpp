#include "groupscope/multitask_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "groupscope/errors.hpp"
#include "groupscope/stats.hpp"
#include "groupscope/util.hpp"

namespace groupscope {

using Eigen::ArrayXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

// Parameters ------------------------------------------------------------------

namespace {

LstmWeights zero_lstm(Index d, Index h) {
  return {MatrixXd::Zero(4 * h, d), MatrixXd::Zero(4 * h, h), MatrixXd::Zero(4 * h, 1), MatrixXd::Zero(h, 1)};
}

}  // namespace

ModelParams ModelParams::zeros(std::size_t input_dim, std::size_t hidden, std::size_t attribute_outputs) {
  const auto d = static_cast<Index>(input_dim), h = static_cast<Index>(hidden),
             k = static_cast<Index>(attribute_outputs);
  if (d == 0 || h == 0 || k == 0) throw ValidationError("model dimensions must be positive");
  ModelParams p;
  p.forward = zero_lstm(d, h);
  p.backward = zero_lstm(d, h);
  p.attention_weights = MatrixXd::Zero(2 * h, 1);
  p.attention_bias = MatrixXd::Zero(1, 1);
  p.group_weights = MatrixXd::Zero(2, 2 * h);
  p.group_bias = MatrixXd::Zero(2, 1);
  p.attribute_weights = MatrixXd::Zero(k, 2 * h);
  p.attribute_bias = MatrixXd::Zero(k, 1);
  return p;
}

ModelParams ModelParams::initialized(std::size_t input_dim, std::size_t hidden, std::size_t attribute_outputs,
                                     std::uint64_t seed) {
  auto p = zeros(input_dim, hidden, attribute_outputs);
  std::mt19937_64 rng(seed);
  const double lstm_in = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double lstm_rec = 1.0 / std::sqrt(static_cast<double>(hidden));
  const double head = 1.0 / std::sqrt(static_cast<double>(2 * hidden));
  auto fill = [&](MatrixXd& m, double bound) {
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) m(i, j) = uniform_real(rng, -bound, bound);
    }
  };
  for (auto* dir : {&p.forward, &p.backward}) {
    fill(dir->input, lstm_in);
    fill(dir->recurrent, lstm_rec);
    fill(dir->bias, lstm_rec);
  }
  fill(p.attention_weights, head);
  fill(p.attention_bias, head);
  fill(p.group_weights, head);
  fill(p.group_bias, head);
  fill(p.attribute_weights, head);
  fill(p.attribute_bias, head);
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  visit([&](std::string_view, const MatrixXd& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  visit([&](std::string_view, const MatrixXd& m) { ok = ok && m.allFinite(); });
  return ok;
}

void ModelParams::set_zero() {
  visit([](std::string_view, MatrixXd& m) { m.setZero(); });
}

double ModelParams::squared_norm() const {
  double s = 0;
  visit([&](std::string_view, const MatrixXd& m) { s += m.squaredNorm(); });
  return s;
}

void ModelParams::scale(double factor) {
  visit([&](std::string_view, MatrixXd& m) { m *= factor; });
}

void ModelParams::add_scaled(const ModelParams& other, double factor) {
  std::vector<const MatrixXd*> src;
  other.visit([&](std::string_view, const MatrixXd& m) { src.push_back(&m); });
  std::size_t k = 0;
  visit([&](std::string_view, MatrixXd& m) { m += factor * *src[k++]; });
}

bool ModelParams::operator==(const ModelParams& o) const {
  std::vector<const MatrixXd*> mine, theirs;
  visit([&](std::string_view, const MatrixXd& m) { mine.push_back(&m); });
  o.visit([&](std::string_view, const MatrixXd& m) { theirs.push_back(&m); });
  for (std::size_t k = 0; k < mine.size(); ++k) {
    if (mine[k]->rows() != theirs[k]->rows() || mine[k]->cols() != theirs[k]->cols() || *mine[k] != *theirs[k]) {
      return false;
    }
  }
  return true;
}

// Config ----------------------------------------------------------------------

void TrainingConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (max_epochs == 0) throw ValidationError("max_epochs must be positive");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (early_stop_patience == 0) throw ValidationError("early_stop_patience must be positive");
  if (!(gradient_clip_norm > 0.0)) throw ValidationError("gradient_clip_norm must be positive");
  if (hidden_size == 0) throw ValidationError("hidden_size must be positive");
}

json to_json(const TrainingConfig& c) {
  return {{"lambda", c.lambda},
          {"learning_rate", c.learning_rate},
          {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"early_stop_patience", c.early_stop_patience},
          {"gradient_clip_norm", c.gradient_clip_norm},
          {"seed", c.seed},
          {"hidden_size", c.hidden_size}};
}

TrainingConfig training_config_from_json(const json& j) {
  TrainingConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("training config must be a JSON object");
  try {
    c.lambda = j.value("lambda", c.lambda);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.gradient_clip_norm = j.value("gradient_clip_norm", c.gradient_clip_norm);
    c.seed = j.value("seed", c.seed);
    c.hidden_size = j.value("hidden_size", c.hidden_size);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad training config: ") + e.what());
  }
  c.validate();
  return c;
}

// Forward ---------------------------------------------------------------------

namespace {

struct DirectionCache {
  MatrixXd gates;   // 4H x n, activated, by step
  MatrixXd cells;   // H x (n+1), column 0 is c_0
  MatrixXd hidden;  // H x (n+1), column 0 is h_0
};

struct ForwardState {
  DirectionCache fwd;
  DirectionCache bwd;
  AttentionTrace trace;
};

ArrayXd sigmoid(const ArrayXd& x) { return 1.0 / (1.0 + (-x).exp()); }

VectorXd softmax(const VectorXd& logits) {
  const VectorXd shifted = (logits.array() - logits.maxCoeff()).exp().matrix();
  return shifted / shifted.sum();
}

void run_direction(const LstmWeights& w, const MatrixXd& x, bool reverse, DirectionCache& c) {
  const Index h = w.recurrent.cols();
  const Index n = x.cols();
  c.gates.resize(4 * h, n);
  c.cells.resize(h, n + 1);
  c.hidden.resize(h, n + 1);
  c.cells.col(0).setZero();
  c.hidden.col(0) = w.initial_hidden.col(0);
  VectorXd pre(4 * h);
  for (Index s = 0; s < n; ++s) {
    const Index t = reverse ? n - 1 - s : s;
    pre.noalias() = w.input * x.col(t);
    pre.noalias() += w.recurrent * c.hidden.col(s);
    pre += w.bias.col(0);
    auto gates = c.gates.col(s);
    gates.segment(0, h) = sigmoid(pre.segment(0, h).array()).matrix();
    gates.segment(h, h) = sigmoid(pre.segment(h, h).array()).matrix();
    gates.segment(2 * h, h) = pre.segment(2 * h, h).array().tanh().matrix();
    gates.segment(3 * h, h) = sigmoid(pre.segment(3 * h, h).array()).matrix();
    c.cells.col(s + 1) = (gates.segment(h, h).array() * c.cells.col(s).array() +
                          gates.segment(0, h).array() * gates.segment(2 * h, h).array())
                             .matrix();
    c.hidden.col(s + 1) = (gates.segment(3 * h, h).array() * c.cells.col(s + 1).array().tanh()).matrix();
  }
}

void check_input(const ModelParams& params, const EmbeddedSequence& x) {
  if (x.vectors.cols() == 0) throw ValidationError("cannot run the model on an empty sequence");
  if (static_cast<std::size_t>(x.vectors.rows()) != params.input_dim()) {
    throw ValidationError("embedding dimension " + std::to_string(x.vectors.rows()) +
                          " does not match model input dimension " + std::to_string(params.input_dim()));
  }
  if (!x.vectors.allFinite()) throw NumericalError("non-finite embedding input for '" + x.instance_id + "'");
}

ForwardState forward_state(const ModelParams& params, const EmbeddedSequence& x) {
  check_input(params, x);
  ForwardState st;
  const MatrixXd& xs = x.vectors;
  const Index h = static_cast<Index>(params.hidden_size());
  const Index n = xs.cols();
  run_direction(params.forward, xs, false, st.fwd);
  run_direction(params.backward, xs, true, st.bwd);

  auto& tr = st.trace;
  tr.instance_id = x.instance_id;
  tr.hidden.resize(2 * h, n);
  for (Index t = 0; t < n; ++t) {
    tr.hidden.col(t).head(h) = st.fwd.hidden.col(t + 1);
    tr.hidden.col(t).tail(h) = st.bwd.hidden.col(n - t);
  }
  tr.scores = tr.hidden.transpose() * params.attention_weights.col(0);
  tr.scores.array() += params.attention_bias(0, 0);
  tr.weights = softmax(tr.scores);
  tr.summary = tr.hidden * tr.weights;

  const VectorXd group = softmax(params.group_weights * tr.summary + params.group_bias.col(0));
  tr.group_posterior = {group[0], group[1]};
  const VectorXd attr = params.attribute_weights * tr.summary + params.attribute_bias.col(0);
  tr.attribute_output = params.attribute_outputs() == 1 ? attr : softmax(attr);
  return st;
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
}

double safe_neg_log(double p) { return -std::log(std::max(p, std::numeric_limits<double>::min())); }

std::size_t target_level(const AttributeValue& target, std::size_t outputs) {
  const auto* level = std::get_if<std::size_t>(&target);
  if (!level || *level >= outputs) throw ValidationError("categorical target does not match the attribute head");
  return *level;
}

double target_value(const AttributeValue& target) {
  const auto* v = std::get_if<double>(&target);
  if (!v) throw ValidationError("continuous head needs a numeric target");
  return *v;
}

void backprop_direction(const LstmWeights& w, const MatrixXd& x, bool reverse, const DirectionCache& c,
                        const MatrixXd& dh_ext, LstmWeights& g) {
  const Index h = w.recurrent.cols();
  const Index n = x.cols();
  VectorXd dh_next = VectorXd::Zero(h);
  VectorXd dc_next = VectorXd::Zero(h);
  VectorXd dpre(4 * h);
  for (Index s = n - 1; s >= 0; --s) {
    const Index t = reverse ? n - 1 - s : s;
    const ArrayXd i = c.gates.col(s).segment(0, h).array();
    const ArrayXd f = c.gates.col(s).segment(h, h).array();
    const ArrayXd cand = c.gates.col(s).segment(2 * h, h).array();
    const ArrayXd o = c.gates.col(s).segment(3 * h, h).array();
    const ArrayXd tc = c.cells.col(s + 1).array().tanh();

    const ArrayXd dh = (dh_ext.col(t) + dh_next).array();
    const ArrayXd d_o = dh * tc;
    const ArrayXd dc = dc_next.array() + dh * o * (1.0 - tc * tc);
    const ArrayXd d_i = dc * cand;
    const ArrayXd d_cand = dc * i;
    const ArrayXd d_f = dc * c.cells.col(s).array();
    dc_next = (dc * f).matrix();

    dpre.segment(0, h) = (d_i * i * (1.0 - i)).matrix();
    dpre.segment(h, h) = (d_f * f * (1.0 - f)).matrix();
    dpre.segment(2 * h, h) = (d_cand * (1.0 - cand * cand)).matrix();
    dpre.segment(3 * h, h) = (d_o * o * (1.0 - o)).matrix();

    g.input.noalias() += dpre * x.col(t).transpose();
    g.recurrent.noalias() += dpre * c.hidden.col(s).transpose();
    g.bias.col(0) += dpre;
    dh_next.noalias() = w.recurrent.transpose() * dpre;
  }
  g.initial_hidden.col(0) += dh_next;
}

}  // namespace

AttentionTrace forward(const ModelParams& params, const EmbeddedSequence& x) {
  return forward_state(params, x).trace;
}

double loss(const AttentionTrace& trace, Group label, const AttributeValue& target, double lambda) {
  check_lambda(lambda);
  const double group_loss = safe_neg_log(trace.group_posterior[static_cast<std::size_t>(label)]);
  double attr_loss = 0.0;
  const auto outputs = static_cast<std::size_t>(trace.attribute_output.size());
  if (outputs == 1) {
    const double diff = trace.attribute_output[0] - target_value(target);
    attr_loss = diff * diff;
  } else {
    attr_loss = safe_neg_log(trace.attribute_output[static_cast<Index>(target_level(target, outputs))]);
  }
  return lambda * group_loss + (1.0 - lambda) * attr_loss;
}

double accumulate_gradient(const ModelParams& params, const EmbeddedSequence& x, Group label,
                           const AttributeValue& target, double lambda, double scale, ModelGradient& grad) {
  check_lambda(lambda);
  const ForwardState st = forward_state(params, x);
  const AttentionTrace& tr = st.trace;
  const double value = loss(tr, label, target, lambda);
  const Index h = static_cast<Index>(params.hidden_size());

  // Heads.
  VectorXd d_group(2);
  d_group << tr.group_posterior[0], tr.group_posterior[1];
  d_group[static_cast<Index>(label)] -= 1.0;
  d_group *= scale * lambda;

  const auto outputs = params.attribute_outputs();
  VectorXd d_attr;
  if (outputs == 1) {
    d_attr = VectorXd::Constant(1, scale * (1.0 - lambda) * 2.0 * (tr.attribute_output[0] - target_value(target)));
  } else {
    d_attr = tr.attribute_output;
    d_attr[static_cast<Index>(target_level(target, outputs))] -= 1.0;
    d_attr *= scale * (1.0 - lambda);
  }

  grad.group_weights.noalias() += d_group * tr.summary.transpose();
  grad.group_bias.col(0) += d_group;
  grad.attribute_weights.noalias() += d_attr * tr.summary.transpose();
  grad.attribute_bias.col(0) += d_attr;
  VectorXd d_summary = params.group_weights.transpose() * d_group;
  d_summary.noalias() += params.attribute_weights.transpose() * d_attr;

  // Attention pooling and softmax.
  MatrixXd d_hidden = d_summary * tr.weights.transpose();
  const VectorXd d_weights = tr.hidden.transpose() * d_summary;
  const double centre = tr.weights.dot(d_weights);
  const VectorXd d_scores = (tr.weights.array() * (d_weights.array() - centre)).matrix();
  grad.attention_weights.col(0).noalias() += tr.hidden * d_scores;
  grad.attention_bias(0, 0) += d_scores.sum();
  d_hidden.noalias() += params.attention_weights.col(0) * d_scores.transpose();

  // Encoder.
  backprop_direction(params.forward, x.vectors, false, st.fwd, d_hidden.topRows(h), grad.forward);
  backprop_direction(params.backward, x.vectors, true, st.bwd, d_hidden.bottomRows(h), grad.backward);
  return value;
}

ModelGradient backward(const ModelParams& params, const EmbeddedSequence& x, Group label,
                       const AttributeValue& target, double lambda, double scale) {
  auto grad = ModelParams::zeros(params.input_dim(), params.hidden_size(), params.attribute_outputs());
  accumulate_gradient(params, x, label, target, lambda, scale, grad);
  grad.visit([](std::string_view name, const MatrixXd& m) {
    if (!m.allFinite()) throw NumericalError("non-finite gradient in " + std::string(name));
  });
  return grad;
}

// Training ----------------------------------------------------------------------

json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"validation_loss", r.validation_loss},
          {"validation_group_accuracy", r.validation_group_accuracy},
          {"validation_attribute_metric", r.validation_attribute_metric}};
}

namespace {

struct Adam {
  ModelParams m;
  ModelParams v;
  std::size_t step = 0;
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double eps = 1e-8;

  explicit Adam(const ModelParams& like)
      : m(ModelParams::zeros(like.input_dim(), like.hidden_size(), like.attribute_outputs())), v(m) {}

  void apply(ModelParams& params, const ModelGradient& grad, double lr) {
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    std::vector<const MatrixXd*> gs;
    std::vector<MatrixXd*> ms, vs;
    grad.visit([&](std::string_view, const MatrixXd& x) { gs.push_back(&x); });
    m.visit([&](std::string_view, MatrixXd& x) { ms.push_back(&x); });
    v.visit([&](std::string_view, MatrixXd& x) { vs.push_back(&x); });
    std::size_t k = 0;
    params.visit([&](std::string_view, MatrixXd& p) {
      const MatrixXd& g = *gs[k];
      MatrixXd& mk = *ms[k];
      MatrixXd& vk = *vs[k];
      mk = beta1 * mk + (1.0 - beta1) * g;
      vk = beta2 * vk + (1.0 - beta2) * g.cwiseProduct(g);
      p.array() -= lr * (mk.array() / c1) / ((vk.array() / c2).sqrt() + eps);
      ++k;
    });
  }
};

struct PreparedInstance {
  std::size_t index;
  EmbeddedSequence x;
};

struct ValidationResult {
  double loss = 0;
  double group_accuracy = 0;
  double attribute_metric = 0;
};

ValidationResult validate_model(const ModelParams& params, const std::vector<PreparedInstance>& items,
                                const Dataset& d, std::size_t attr, double lambda) {
  ValidationResult r;
  if (items.empty()) return r;
  std::size_t correct = 0, level_correct = 0;
  std::vector<double> predicted, truth;
  for (const auto& item : items) {
    const auto& inst = d.instances()[item.index];
    const auto tr = forward(params, item.x);
    r.loss += loss(tr, inst.group, inst.values[attr], lambda);
    const Group g = tr.group_posterior[1] > tr.group_posterior[0] ? Group::blue : Group::red;
    if (g == inst.group) ++correct;
    if (tr.attribute_output.size() == 1) {
      predicted.push_back(tr.attribute_output[0]);
      truth.push_back(std::get<double>(inst.values[attr]));
    } else {
      Index best = 0;
      tr.attribute_output.maxCoeff(&best);
      if (static_cast<std::size_t>(best) == std::get<std::size_t>(inst.values[attr])) ++level_correct;
    }
  }
  const auto n = static_cast<double>(items.size());
  r.loss /= n;
  r.group_accuracy = static_cast<double>(correct) / n;
  r.attribute_metric = predicted.empty() ? static_cast<double>(level_correct) / n : stats::pearson(predicted, truth);
  return r;
}

}  // namespace

TrainedAttributeModel train(const Dataset& d, std::string_view attribute, const EmbeddingPair& embeddings,
                            const TrainingConfig& cfg, const ProgressCallback& progress) {
  cfg.validate();
  const std::size_t attr = d.attribute_index(attribute);
  if (!d.has_split()) throw StateError("dataset has no train/validate/test split assigned");

  auto prepare = [&](SplitBucket b) {
    std::vector<PreparedInstance> out;
    for (std::size_t i : d.bucket(b)) {
      out.push_back({i, embed(embeddings, d.instances()[i].tokens, d.instances()[i].id)});
    }
    return out;
  };
  const auto train_items = prepare(SplitBucket::train);
  const auto val_items = prepare(SplitBucket::validate);
  if (train_items.empty()) throw StateError("train bucket is empty");

  TrainedAttributeModel model;
  model.attribute = d.schema()[attr];
  model.config = cfg;
  model.embedding_dimension = embeddings.dimension();
  const std::size_t outputs = model.attribute.categorical() ? model.attribute.levels.size() : 1;

  ModelParams params = ModelParams::initialized(embeddings.dimension(), cfg.hidden_size, outputs, cfg.seed);
  ModelGradient grad = ModelParams::zeros(embeddings.dimension(), cfg.hidden_size, outputs);
  Adam adam(params);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0xa0761d6478bd642fULL);

  std::vector<std::size_t> order(train_items.size());
  std::iota(order.begin(), order.end(), 0);

  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  model.params = params;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      grad.set_zero();
      for (std::size_t k = start; k < end; ++k) {
        const auto& item = train_items[order[k]];
        const auto& inst = d.instances()[item.index];
        epoch_loss += accumulate_gradient(params, item.x, inst.group, inst.values[attr], cfg.lambda, inv, grad);
      }
      const double norm = std::sqrt(grad.squared_norm());
      if (!std::isfinite(norm)) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": non-finite gradient");
      }
      if (norm > cfg.gradient_clip_norm) grad.scale(cfg.gradient_clip_norm / norm);
      adam.apply(params, grad, cfg.learning_rate);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    const auto val = validate_model(params, val_items.empty() ? train_items : val_items, d, attr, cfg.lambda);
    rec.validation_loss = val.loss;
    rec.validation_group_accuracy = val.group_accuracy;
    rec.validation_attribute_metric = val.attribute_metric;
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.validation_loss) || !params.all_finite()) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": loss is not finite");
    }
    model.log.push_back(rec);
    if (progress) progress(rec);

    if (rec.validation_loss < best_loss) {
      best_loss = rec.validation_loss;
      model.params = params;
      model.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.early_stop_patience) {
      break;
    }
  }
  return model;
}

std::vector<double> lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(static_cast<double>(i) / 10.0);
  return grid;
}

std::vector<SweepResult> sweep_lambda(const Dataset& d, std::string_view attribute, const EmbeddingPair& embeddings,
                                      const TrainingConfig& cfg) {
  std::vector<SweepResult> out;
  for (double lambda : lambda_grid()) {
    auto c = cfg;
    c.lambda = lambda;
    out.push_back({lambda, train(d, attribute, embeddings, c)});
  }
  return out;
}

Prediction predict(const TrainedAttributeModel& model, const Instance& instance, const EmbeddingPair& embeddings) {
  Prediction p;
  p.trace = forward(model.params, embed(embeddings, instance.tokens, instance.id));
  p.group_posterior = p.trace.group_posterior;
  p.group = p.group_posterior[1] > p.group_posterior[0] ? Group::blue : Group::red;
  if (model.attribute.categorical()) {
    Index best = 0;
    p.trace.attribute_output.maxCoeff(&best);
    p.attribute_level = static_cast<std::size_t>(best);
    p.attribute_estimate = model.attribute.ordinal_score(*p.attribute_level);
  } else {
    p.attribute_estimate = p.trace.attribute_output[0];
  }
  return p;
}

// Snapshots ---------------------------------------------------------------------

namespace {
constexpr std::string_view kModelFormat = "groupscope-model";
}

json to_json(const TrainedAttributeModel& m) {
  json params = json::object();
  m.params.visit([&](std::string_view name, const MatrixXd& t) {
    params[std::string(name)] = {{"rows", t.rows()},
                                 {"cols", t.cols()},
                                 {"data", std::vector<double>(t.data(), t.data() + t.size())}};
  });
  json log = json::array();
  for (const auto& r : m.log) log.push_back(to_json(r));
  return {{"format", kModelFormat},
          {"version", kModelFormatVersion},
          {"attribute", schema_to_json({m.attribute}).at(0)},
          {"config", to_json(m.config)},
          {"embedding_dimension", m.embedding_dimension},
          {"best_epoch", m.best_epoch},
          {"log", std::move(log)},
          {"params", std::move(params)}};
}

TrainedAttributeModel model_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kModelFormat) throw FormatError("not a model snapshot");
  if (j.value("version", 0) != kModelFormatVersion) throw FormatError("unsupported model snapshot version");
  try {
    TrainedAttributeModel m;
    m.attribute = parse_schema(json::array({j.at("attribute")})).at(0);
    m.config = training_config_from_json(j.at("config"));
    m.embedding_dimension = j.at("embedding_dimension").get<std::size_t>();
    m.best_epoch = j.at("best_epoch").get<std::size_t>();
    for (const auto& r : j.at("log")) {
      m.log.push_back({r.at("epoch").get<std::size_t>(), r.at("train_loss").get<double>(),
                       r.at("validation_loss").get<double>(), r.at("validation_group_accuracy").get<double>(),
                       r.at("validation_attribute_metric").get<double>()});
    }
    const std::size_t outputs = m.attribute.categorical() ? m.attribute.levels.size() : 1;
    m.params = ModelParams::zeros(m.embedding_dimension, m.config.hidden_size, outputs);
    const auto& params = j.at("params");
    m.params.visit([&](std::string_view name, MatrixXd& t) {
      const auto& entry = params.at(std::string(name));
      if (entry.at("rows").get<Index>() != t.rows() || entry.at("cols").get<Index>() != t.cols()) {
        throw FormatError("tensor " + std::string(name) + " has inconsistent shape");
      }
      const auto data = entry.at("data").get<std::vector<double>>();
      if (static_cast<Index>(data.size()) != t.size()) throw FormatError("tensor " + std::string(name) + " truncated");
      t = Eigen::Map<const MatrixXd>(data.data(), t.rows(), t.cols());
    });
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model snapshot: ") + e.what());
  }
}

void save_model(const TrainedAttributeModel& m, const std::filesystem::path& path) {
  write_file(path, to_json(m).dump() + "\n");
}

TrainedAttributeModel load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace groupscope
