#include "groupscope/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "groupscope/errors.hpp"
#include "groupscope/stats.hpp"

namespace groupscope {

using nlohmann::json;

double accuracy(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw ValidationError("no records to evaluate");
  const auto hits = std::count_if(records.begin(), records.end(), [](const EvalRecord& r) { return r.correct; });
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double f1_red(const std::vector<EvalRecord>& records) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& r : records) {
    const bool pred = r.predicted == Group::red, truth = r.truth == Group::red;
    if (pred && truth) ++tp;
    else if (pred) ++fp;
    else if (truth) ++fn;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

Metrics compute_metrics(const std::vector<EvalRecord>& records, bool categorical_attribute) {
  Metrics m;
  m.count = records.size();
  m.accuracy = accuracy(records);
  m.f1 = f1_red(records);
  const bool has_attribute = std::all_of(records.begin(), records.end(), [&](const EvalRecord& r) {
    return categorical_attribute ? r.predicted_level && r.true_level
                                 : r.attribute_prediction && r.attribute_truth;
  });
  if (!has_attribute) return m;
  if (categorical_attribute) {
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.predicted_level == r.true_level ? 1 : 0;
    m.attribute_metric = static_cast<double>(hits) / static_cast<double>(records.size());
    m.attribute_metric_name = "level_accuracy";
  } else {
    std::vector<double> pred, truth;
    for (const auto& r : records) {
      pred.push_back(*r.attribute_prediction);
      truth.push_back(*r.attribute_truth);
    }
    m.attribute_metric = stats::pearson(pred, truth);
    m.attribute_metric_name = "pearson_r";
  }
  return m;
}

namespace {

std::vector<std::size_t> test_members(const Dataset& d) {
  auto idx = d.bucket(SplitBucket::test);
  if (idx.empty()) throw ValidationError("test bucket is empty");
  return idx;
}

}  // namespace

Evaluation evaluate(const TrainedAttributeModel& model, const Dataset& d, const EmbeddingPair& embeddings) {
  const std::size_t attr = d.attribute_index(model.attribute.name);
  if (d.schema()[attr].kind != model.attribute.kind) {
    throw ValidationError("model attribute '" + model.attribute.name + "' does not match the dataset schema");
  }
  Evaluation e;
  e.source = "neural";
  e.attribute = model.attribute.name;
  for (std::size_t i : test_members(d)) {
    const auto& inst = d.instances()[i];
    const auto p = predict(model, inst, embeddings);
    EvalRecord r;
    r.instance_id = inst.id;
    r.truth = inst.group;
    r.predicted = p.group;
    r.blue_posterior = p.group_posterior[1];
    r.correct = r.truth == r.predicted;
    r.attribute_prediction = p.attribute_estimate;
    r.attribute_truth = d.numeric_value(i, attr);
    if (model.attribute.categorical()) {
      r.predicted_level = p.attribute_level;
      r.true_level = std::get<std::size_t>(inst.values[attr]);
    }
    e.records.push_back(std::move(r));
  }
  e.metrics = compute_metrics(e.records, model.attribute.categorical());
  return e;
}

Evaluation evaluate(const DecisionTree& tree, const Dataset& d) {
  Evaluation e;
  e.source = "tree";
  for (std::size_t i : test_members(d)) {
    const auto& inst = d.instances()[i];
    const auto post = tree.posterior(inst);
    EvalRecord r;
    r.instance_id = inst.id;
    r.truth = inst.group;
    r.predicted = tree.predict(inst);
    r.blue_posterior = post[1];
    r.correct = r.truth == r.predicted;
    e.records.push_back(std::move(r));
  }
  e.metrics = compute_metrics(e.records, false);
  return e;
}

std::size_t histogram_bin(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("posterior outside [0, 1]");
  const double bins = static_cast<double>(kHistogramBins);
  auto j = static_cast<long>(std::ceil(p * bins)) - 1;
  // p * 20 can round across an edge; compare against the exact edges.
  while (j > 0 && p <= static_cast<double>(j) / bins) --j;
  while (j + 1 < static_cast<long>(kHistogramBins) && p > static_cast<double>(j + 1) / bins) ++j;
  return static_cast<std::size_t>(std::max(j, 0L));
}

DualHistogram dual_histogram(const std::vector<EvalRecord>& records) {
  DualHistogram h;
  h.bins.resize(kHistogramBins);
  for (std::size_t j = 0; j < kHistogramBins; ++j) {
    h.bins[j].lower = static_cast<double>(j) / static_cast<double>(kHistogramBins);
    h.bins[j].upper = static_cast<double>(j + 1) / static_cast<double>(kHistogramBins);
  }
  for (const auto& r : records) {
    auto& bin = h.bins[histogram_bin(r.blue_posterior)];
    (r.correct ? bin.correct : bin.wrong).push_back(r.instance_id);
  }
  h.total = records.size();
  return h;
}

// Baselines ---------------------------------------------------------------------------

BaselineTable baseline_table(const std::string& attribute, const Evaluation& tree, const Evaluation& group_only,
                             const Evaluation& attribute_only, const Evaluation& multitask, double multitask_lambda) {
  BaselineTable t;
  t.attribute = attribute;
  t.attribute_metric_name = multitask.metrics.attribute_metric_name;
  t.rows.push_back({"tree (attributes)", std::nullopt, std::nullopt, tree.metrics.accuracy, tree.metrics.f1});
  // The group head alone says nothing about the attribute.
  t.rows.push_back({"single-task group", 1.0, std::nullopt, group_only.metrics.accuracy, group_only.metrics.f1});
  t.rows.push_back({"single-task attribute", 0.0, attribute_only.metrics.attribute_metric,
                    attribute_only.metrics.accuracy, attribute_only.metrics.f1});
  t.rows.push_back({"multi-task", multitask_lambda, multitask.metrics.attribute_metric, multitask.metrics.accuracy,
                    multitask.metrics.f1});
  return t;
}

BaselineTable compare_baselines(const Dataset& d, const std::string& attribute, const EmbeddingPair& embeddings,
                                const TrainingConfig& cfg, const TreeConfig& tree_cfg) {
  std::vector<std::string> attrs;
  for (const auto& s : d.schema()) attrs.push_back(s.name);
  const auto tree = fit_tree(d, attrs, Group::red, tree_cfg);
  auto run = [&](double lambda) {
    TrainingConfig c = cfg;
    c.lambda = lambda;
    return evaluate(train(d, attribute, embeddings, c), d, embeddings);
  };
  const double multitask_lambda = cfg.lambda;
  return baseline_table(attribute, evaluate(tree, d), run(1.0), run(0.0), run(multitask_lambda), multitask_lambda);
}

namespace {

std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::string with_delta(double value, std::optional<double> reference) {
  std::string s = fixed3(value);
  if (reference) {
    const double delta = value - *reference;
    s += " (" + std::string(delta < 0 ? "- " : "+ ") + fixed3(std::abs(delta)) + ")";
  }
  return s;
}

}  // namespace

std::string render(const BaselineTable& t) {
  const std::string metric = t.attribute_metric_name.empty() ? "attribute" : t.attribute_metric_name;
  std::vector<std::array<std::string, 4>> cells;
  cells.push_back({"model", t.attribute + " " + metric, "group accuracy", "group F1"});
  const BaselineRow* group_only = nullptr;
  const BaselineRow* attribute_only = nullptr;
  for (const auto& r : t.rows) {
    if (r.lambda && *r.lambda == 1.0) group_only = &r;
    if (r.lambda && *r.lambda == 0.0) attribute_only = &r;
  }
  for (const auto& r : t.rows) {
    const bool multitask = r.lambda && *r.lambda > 0.0 && *r.lambda < 1.0;
    std::string name = r.name;
    if (r.lambda) name += " (lambda=" + fixed3(*r.lambda).substr(0, 3) + ")";
    std::string attr = "";
    if (r.attribute_metric) {
      std::optional<double> ref;
      if (multitask && attribute_only && attribute_only->attribute_metric) ref = attribute_only->attribute_metric;
      attr = with_delta(*r.attribute_metric, ref);
    }
    std::optional<double> acc_ref, f1_ref;
    if (multitask && group_only) {
      acc_ref = group_only->group_accuracy;
      f1_ref = group_only->group_f1;
    }
    cells.push_back({name, attr.empty() ? "-" : attr, with_delta(r.group_accuracy, acc_ref),
                     with_delta(r.group_f1, f1_ref)});
  }
  std::array<std::size_t, 4> width{};
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 4; ++c) {
      out << row[c];
      if (c + 1 < 4) out << std::string(width[c] - row[c].size() + 2, ' ');
    }
    out << '\n';
  }
  return out.str();
}

// JSON ----------------------------------------------------------------------------

json to_json(const Metrics& m) {
  json j = {{"count", m.count}, {"accuracy", m.accuracy}, {"f1_red", m.f1}};
  j["attribute_metric"] = m.attribute_metric ? json(*m.attribute_metric) : json(nullptr);
  j["attribute_metric_name"] = m.attribute_metric_name.empty() ? json(nullptr) : json(m.attribute_metric_name);
  return j;
}

json to_json(const EvalRecord& r) {
  json j = {{"instance_id", r.instance_id},
            {"true_group", to_string(r.truth)},
            {"predicted_group", to_string(r.predicted)},
            {"blue_posterior", r.blue_posterior},
            {"correct", r.correct}};
  j["attribute_prediction"] = r.attribute_prediction ? json(*r.attribute_prediction) : json(nullptr);
  j["attribute_truth"] = r.attribute_truth ? json(*r.attribute_truth) : json(nullptr);
  return j;
}

json to_json(const Evaluation& e) {
  json records = json::array();
  for (const auto& r : e.records) records.push_back(to_json(r));
  return {{"source", e.source},
          {"attribute", e.attribute.empty() ? json(nullptr) : json(e.attribute)},
          {"metrics", to_json(e.metrics)},
          {"records", std::move(records)}};
}

json to_json(const DualHistogram& h) {
  // Top of the chart is most likely Blue, so bins are listed high to low.
  json bins = json::array();
  for (auto it = h.bins.rbegin(); it != h.bins.rend(); ++it) {
    bins.push_back({{"lower", it->lower},
                    {"upper", it->upper},
                    {"lower_closed", it->lower == 0.0},
                    {"correct_count", it->correct.size()},
                    {"wrong_count", it->wrong.size()},
                    {"correct_ids", it->correct},
                    {"wrong_ids", it->wrong}});
  }
  return {{"bin_count", h.bins.size()}, {"total", h.total}, {"orientation", "blue_top"}, {"bins", std::move(bins)}};
}

json to_json(const BaselineTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"model", r.name},
                    {"lambda", r.lambda ? json(*r.lambda) : json(nullptr)},
                    {"attribute_metric", r.attribute_metric ? json(*r.attribute_metric) : json(nullptr)},
                    {"group_accuracy", r.group_accuracy},
                    {"group_f1", r.group_f1}});
  }
  return {{"attribute", t.attribute},
          {"attribute_metric_name", t.attribute_metric_name},
          {"rows", std::move(rows)},
          {"text", render(t)}};
}

}  // namespace groupscope
