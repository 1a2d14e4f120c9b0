#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "groupscope/contrastive.hpp"
#include "groupscope/corpus.hpp"

namespace fixtures {

using namespace groupscope;

struct Row {
  std::string id;
  Group group;
  double valence = 0;
  double dominance = 0;
  std::size_t care = 2;      // level index: virtue, both, none, vice
  std::size_t fairness = 2;
};

inline Instance make_instance(const Row& r) {
  Instance inst;
  inst.id = r.id;
  inst.author_id = "a" + r.id;
  inst.text = "post number " + r.id;
  inst.tokens = tokenize(inst.text);
  inst.group = r.group;
  inst.values = {r.valence, r.dominance, r.care, r.fairness, std::size_t{2}, std::size_t{2}, std::size_t{2}};
  return inst;
}

inline Dataset make_dataset(const std::vector<Row>& rows) {
  std::vector<Instance> instances;
  for (const auto& r : rows) instances.push_back(make_instance(r));
  return Dataset(default_schema(), std::move(instances));
}

/// Blue iff Fairness is virtue: one split on Fairness.
inline Dataset depth1() {
  std::vector<Row> rows;
  for (int i = 0; i < 24; ++i) {
    const std::size_t level = static_cast<std::size_t>(i % 4);
    rows.push_back({std::to_string(i + 1), level == 0 ? Group::blue : Group::red, -0.9 + 0.07 * i,
                    0.8 - 0.06 * i, static_cast<std::size_t>((i / 4) % 4), level});
  }
  return make_dataset(rows);
}

/// Valence splits first. Low Valence is Blue above Dominance 0, high
/// Valence is Blue below Dominance 0.3.
inline Dataset depth2() {
  std::vector<Row> rows;
  int id = 1;
  auto add = [&](Group g, double v, double dm) { rows.push_back({std::to_string(id++), g, v, dm, 2, 2}); };
  for (int k = 0; k < 10; ++k) add(Group::red, -0.85 + 0.06 * k, -0.9 + 0.08 * k);
  for (int k = 0; k < 4; ++k) add(Group::blue, -0.82 + 0.15 * k, 0.1 + 0.2 * k);
  for (int k = 0; k < 10; ++k) add(Group::blue, 0.15 + 0.07 * k, -0.9 + 0.115 * k);
  for (int k = 0; k < 4; ++k) add(Group::red, 0.2 + 0.2 * k, 0.35 + 0.15 * k);
  return make_dataset(rows);
}

/// Mixed continuous and categorical structure that needs all three levels.
inline Dataset depth3() {
  std::vector<Row> rows;
  int id = 1;
  auto add = [&](Group g, double v, double dm, std::size_t care, std::size_t fair) {
    rows.push_back({std::to_string(id++), g, v, dm, care, fair});
  };
  // high Valence: Care virtue -> Blue, else Red unless Fairness virtue
  for (int k = 0; k < 8; ++k) add(Group::blue, 0.3 + 0.08 * k, -0.5 + 0.1 * k, 0, 2 + k % 2);
  for (int k = 0; k < 8; ++k) add(Group::red, 0.32 + 0.08 * k, -0.45 + 0.1 * k, 2 + k % 2, 2 + k % 2);
  for (int k = 0; k < 4; ++k) add(Group::blue, 0.35 + 0.1 * k, -0.4 + 0.2 * k, 3, 0);
  // low Valence: Dominance above 0.1 -> Blue
  for (int k = 0; k < 8; ++k) add(Group::red, -0.9 + 0.1 * k, -0.9 + 0.1 * k, k % 4, k % 4);
  for (int k = 0; k < 8; ++k) add(Group::blue, -0.85 + 0.1 * k, 0.2 + 0.09 * k, k % 4, (k + 1) % 4);
  return make_dataset(rows);
}

struct FixtureTree {
  std::string name;
  Dataset data;
  DecisionTree tree;
  std::size_t expected_depth;
};

inline std::vector<FixtureTree> fixture_trees() {
  std::vector<FixtureTree> out;
  const TreeConfig small{4, 1};
  auto d1 = depth1();
  out.push_back({"depth1", d1, fit_tree(d1, {"Valence", "Dominance", "Fairness"}, Group::red, small), 1});
  auto d2 = depth2();
  out.push_back({"depth2", d2, fit_tree(d2, {"Valence", "Dominance"}, Group::red, TreeConfig{2, 1}), 2});
  auto d3 = depth3();
  out.push_back({"depth3", d3, fit_tree(d3, {"Valence", "Dominance", "Care", "Fairness"}, Group::red, TreeConfig{3, 2}), 3});
  return out;
}

/// Random instance with all seven default attributes filled.
inline Instance random_instance(std::mt19937_64& rng, const std::string& id) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> lvl(0, 3);
  Instance inst;
  inst.id = id;
  inst.text = "t" + id;
  inst.tokens = {inst.text};
  inst.group = lvl(rng) % 2 ? Group::blue : Group::red;
  inst.values = {u(rng), u(rng)};
  for (int k = 0; k < 5; ++k) inst.values.emplace_back(static_cast<std::size_t>(lvl(rng)));
  return inst;
}

}  // namespace fixtures
