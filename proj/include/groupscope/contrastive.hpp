#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "groupscope/corpus.hpp"
#include "groupscope/errors.hpp"

namespace groupscope {

/// No leaf of the requested class exists, or an o-mode pair shares a class.
class NoContrastError : public Error {
public:
  using Error::Error;
};

struct TreeConfig {
  std::size_t max_depth = 4;
  std::size_t min_leaf = 5;
};

/// One edge on a root-to-leaf path.
struct PathCondition {
  enum class Op { less_equal, greater, equals, not_equals };
  std::size_t node = 0;       // node the split belongs to
  std::size_t attribute = 0;  // dataset schema index
  Op op = Op::less_equal;
  double threshold = 0;       // continuous splits
  std::size_t level = 0;      // categorical splits

  bool holds(double value) const;
  bool holds_level(std::size_t value) const;
  bool operator==(const PathCondition&) const = default;
};

struct TreeNode {
  std::size_t id = 0;
  std::size_t depth = 0;
  std::optional<std::size_t> parent;
  bool leaf = true;
  // Internal nodes: continuous "value <= threshold" or categorical
  // "value == level" goes left.
  std::size_t attribute = 0;
  bool categorical = false;
  double threshold = 0;
  std::size_t level = 0;
  std::size_t left = 0;
  std::size_t right = 0;
  // Statistics over the training members routed here.
  std::array<std::size_t, 2> counts{};
  Group predicted = Group::red;
  double impurity = 0;
  std::vector<std::string> members;
};

double gini(const std::array<std::size_t, 2>& counts);

/// CART tree (Gini) over annotated attribute values.
class DecisionTree {
public:
  DecisionTree() = default;

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& node(std::size_t id) const { return nodes_.at(id); }
  const std::vector<std::size_t>& attributes() const noexcept { return attributes_; }
  const std::vector<AttributeSchema>& schema() const noexcept { return schema_; }
  Group target() const noexcept { return target_; }
  const TreeConfig& config() const noexcept { return config_; }
  bool single_class() const noexcept { return single_class_; }

  std::vector<std::size_t> leaves() const;
  std::size_t depth() const;

  /// Leaf reached by the instance's attribute values.
  std::size_t route(const Instance& inst) const;
  Group predict(const Instance& inst) const { return nodes_[route(inst)].predicted; }
  /// Leaf class frequencies, indexed by Group.
  std::array<double, 2> posterior(const Instance& inst) const;

  std::vector<PathCondition> path(std::size_t leaf) const;

  friend DecisionTree fit_tree(const Dataset& d, const std::vector<std::string>& attributes, Group target,
                               const TreeConfig& config);

private:
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> attributes_;
  std::vector<AttributeSchema> schema_;  // full dataset schema, for routing and rendering
  Group target_ = Group::red;
  TreeConfig config_;
  bool single_class_ = false;
};

/// Fits on the train bucket (all instances when no split is assigned).
/// Continuous splits sit at midpoints between sorted distinct values;
/// categorical splits test single-level membership. Ties prefer the lower
/// display order, then the lower threshold or level.
DecisionTree fit_tree(const Dataset& d, const std::vector<std::string>& attributes, Group target,
                      const TreeConfig& config = {});

/// Number of conditions on the foil leaf's path that are not on the fact leaf's path.
std::size_t path_distance(const DecisionTree& tree, std::size_t fact_leaf, std::size_t foil_leaf);

/// Closest leaf predicting foil_class; nullopt when none exists.
std::optional<std::size_t> foil_leaf(const DecisionTree& tree, const Instance& fact, Group foil_class);

/// Per-attribute constraint the fact side must meet to land in the foil leaf.
/// Continuous: value in (lower, upper], keeping only bounds the fact leaf's
/// region violates. Categorical: value in allowed_levels.
struct RuleCondition {
  std::size_t attribute = 0;
  std::string attribute_name;
  bool categorical = false;
  std::optional<double> lower;  // exclusive
  std::optional<double> upper;  // inclusive
  std::vector<std::size_t> allowed_levels;

  std::string describe(const AttributeSchema& schema) const;
  bool operator==(const RuleCondition&) const = default;
};

/// Foil-path constraints not implied by the fact path, intersected per attribute.
std::vector<RuleCondition> rule_difference(const DecisionTree& tree, std::size_t fact_leaf, std::size_t foil_leaf);

// Gower distance -----------------------------------------------------------------

struct GowerRanges {
  std::vector<std::size_t> attributes;
  std::vector<double> ranges;  // max - min per attribute over the dataset; 0 for categorical
};

GowerRanges gower_ranges(const Dataset& d, const std::vector<std::string>& attributes = {});

/// Mean per-attribute dissimilarity: |a - b| / range for continuous (0 when
/// the range is 0), level mismatch for categorical.
double gower(const Instance& a, const Instance& b, const GowerRanges& ranges);

struct ExampleChoice {
  std::string instance_id;
  double distance = 0;
  bool reliable = true;  // false when no member is correctly classified
};

ExampleChoice select_example(const DecisionTree& tree, std::size_t foil_leaf, const Instance& fact, const Dataset& d);

// Explanations ---------------------------------------------------------------------

enum class ContrastMode { p, o };

inline constexpr int kNarrativeTemplateVersion = 1;

struct ContrastiveExplanation {
  ContrastMode mode = ContrastMode::p;
  std::string fact_id;
  std::size_t fact_leaf = 0;
  Group fact_class = Group::red;
  std::size_t foil_leaf = 0;
  Group foil_class = Group::blue;
  std::optional<std::string> other_id;
  std::vector<RuleCondition> rule_difference;
  ExampleChoice counterfactual;
  std::string narrative;
};

/// p-mode contrasts the fact leaf with its closest opposite-class leaf;
/// o-mode contrasts the leaves of two instances of different predicted class.
ContrastiveExplanation explain(const DecisionTree& tree, const Dataset& d, ContrastMode mode,
                               const std::string& fact_id, const std::optional<std::string>& other_id = std::nullopt);

nlohmann::json to_json(const DecisionTree& tree);
nlohmann::json to_json(const RuleCondition& r, const AttributeSchema& schema);
nlohmann::json to_json(const ContrastiveExplanation& e, const DecisionTree& tree);

}  // namespace groupscope
