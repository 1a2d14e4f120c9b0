#include "groupscope/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace groupscope {

using nlohmann::json;

namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_number(double x) {
  std::ostringstream ss;
  ss.precision(2);
  ss << std::fixed << x;
  return ss.str();
}

Group majority(const std::array<std::size_t, 2>& counts) {
  return counts[1] > counts[0] ? Group::blue : Group::red;
}

double value_of(const Instance& inst, std::size_t attribute) {
  return std::get<double>(inst.values.at(attribute));
}

std::size_t level_of(const Instance& inst, std::size_t attribute) {
  return std::get<std::size_t>(inst.values.at(attribute));
}

}  // namespace

bool PathCondition::holds(double value) const {
  return op == Op::less_equal ? value <= threshold : value > threshold;
}

bool PathCondition::holds_level(std::size_t value) const {
  return op == Op::equals ? value == level : value != level;
}

double gini(const std::array<std::size_t, 2>& counts) {
  const double n = static_cast<double>(counts[0] + counts[1]);
  if (n == 0) return 0.0;
  const double p0 = static_cast<double>(counts[0]) / n, p1 = static_cast<double>(counts[1]) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

// Induction -------------------------------------------------------------------------

namespace {

struct Candidate {
  bool found = false;
  double impurity = kInf;
  std::size_t attribute = 0;
  bool categorical = false;
  double threshold = 0;
  std::size_t level = 0;
};

struct Builder {
  const Dataset& d;
  const std::vector<std::size_t>& attributes;
  const TreeConfig& config;
  std::vector<TreeNode>& nodes;

  std::array<std::size_t, 2> count(const std::vector<std::size_t>& idx) const {
    std::array<std::size_t, 2> c{};
    for (auto i : idx) ++c[static_cast<std::size_t>(d.instances()[i].group)];
    return c;
  }

  Candidate best_split(const std::vector<std::size_t>& idx) const {
    Candidate best;
    const double n = static_cast<double>(idx.size());
    auto consider = [&](const std::array<std::size_t, 2>& left, const std::array<std::size_t, 2>& right,
                        std::size_t attr, bool categorical, double threshold, std::size_t level) {
      const std::size_t nl = left[0] + left[1], nr = right[0] + right[1];
      if (nl < config.min_leaf || nr < config.min_leaf || nl == 0 || nr == 0) return;
      const double w = (static_cast<double>(nl) * gini(left) + static_cast<double>(nr) * gini(right)) / n;
      if (!best.found || w < best.impurity - kTieTolerance) {
        best = {true, w, attr, categorical, threshold, level};
      }
    };
    const auto total = count(idx);
    for (std::size_t attr : attributes) {
      const auto& schema = d.schema()[attr];
      if (schema.categorical()) {
        std::vector<std::array<std::size_t, 2>> per_level(schema.levels.size());
        for (auto i : idx) ++per_level[level_of(d.instances()[i], attr)][static_cast<std::size_t>(d.instances()[i].group)];
        for (std::size_t l = 0; l < schema.levels.size(); ++l) {
          const auto& left = per_level[l];
          consider(left, {total[0] - left[0], total[1] - left[1]}, attr, true, 0.0, l);
        }
      } else {
        std::vector<std::pair<double, std::size_t>> vals;
        for (auto i : idx) vals.emplace_back(value_of(d.instances()[i], attr), static_cast<std::size_t>(d.instances()[i].group));
        std::sort(vals.begin(), vals.end());
        std::array<std::size_t, 2> left{};
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
          ++left[vals[k].second];
          if (vals[k].first == vals[k + 1].first) continue;
          const double threshold = 0.5 * (vals[k].first + vals[k + 1].first);
          consider(left, {total[0] - left[0], total[1] - left[1]}, attr, false, threshold, 0);
        }
      }
    }
    return best;
  }

  std::size_t build(const std::vector<std::size_t>& idx, std::size_t depth, std::optional<std::size_t> parent) {
    const std::size_t id = nodes.size();
    nodes.emplace_back();
    {
      auto& node = nodes.back();
      node.id = id;
      node.depth = depth;
      node.parent = parent;
      node.counts = count(idx);
      node.predicted = majority(node.counts);
      node.impurity = gini(node.counts);
      for (auto i : idx) node.members.push_back(d.instances()[i].id);
      std::sort(node.members.begin(), node.members.end(), [](const auto& a, const auto& b) { return id_less(a, b); });
    }
    if (depth >= config.max_depth || nodes[id].impurity == 0.0) return id;
    const auto split = best_split(idx);
    // Zero-gain splits are allowed so that XOR-like interactions can be found.
    if (!split.found || split.impurity > nodes[id].impurity + kTieTolerance) return id;

    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      const auto& inst = d.instances()[i];
      const bool go_left = split.categorical ? level_of(inst, split.attribute) == split.level
                                             : value_of(inst, split.attribute) <= split.threshold;
      (go_left ? left : right).push_back(i);
    }
    nodes[id].leaf = false;
    nodes[id].attribute = split.attribute;
    nodes[id].categorical = split.categorical;
    nodes[id].threshold = split.threshold;
    nodes[id].level = split.level;
    const auto l = build(left, depth + 1, id);
    const auto r = build(right, depth + 1, id);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }
};

}  // namespace

DecisionTree fit_tree(const Dataset& d, const std::vector<std::string>& attributes, Group target,
                      const TreeConfig& config) {
  DecisionTree tree;
  tree.schema_ = d.schema();
  tree.target_ = target;
  tree.config_ = config;
  if (tree.config_.min_leaf == 0) tree.config_.min_leaf = 1;
  if (attributes.empty()) {
    tree.attributes_.resize(d.schema().size());
    for (std::size_t i = 0; i < tree.attributes_.size(); ++i) tree.attributes_[i] = i;
  } else {
    for (const auto& a : attributes) tree.attributes_.push_back(d.attribute_index(a));
    std::sort(tree.attributes_.begin(), tree.attributes_.end());
    tree.attributes_.erase(std::unique(tree.attributes_.begin(), tree.attributes_.end()), tree.attributes_.end());
  }
  const auto members = d.bucket(SplitBucket::train);
  if (members.empty()) throw ValidationError("cannot fit a tree on an empty training set");
  Builder builder{d, tree.attributes_, tree.config_, tree.nodes_};
  builder.build(members, 0, std::nullopt);
  const auto& root = tree.nodes_.front();
  tree.single_class_ = root.counts[0] == 0 || root.counts[1] == 0;
  return tree;
}

std::vector<std::size_t> DecisionTree::leaves() const {
  std::vector<std::size_t> out;
  for (const auto& n : nodes_) {
    if (n.leaf) out.push_back(n.id);
  }
  return out;
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::size_t DecisionTree::route(const Instance& inst) const {
  if (nodes_.empty()) throw StateError("decision tree is empty");
  std::size_t id = 0;
  while (!nodes_[id].leaf) {
    const auto& n = nodes_[id];
    if (inst.values.size() <= n.attribute) throw ValidationError("instance '" + inst.id + "' lacks attribute values");
    const bool go_left = n.categorical ? level_of(inst, n.attribute) == n.level : value_of(inst, n.attribute) <= n.threshold;
    id = go_left ? n.left : n.right;
  }
  return id;
}

std::array<double, 2> DecisionTree::posterior(const Instance& inst) const {
  const auto& leaf = nodes_[route(inst)];
  const double total = static_cast<double>(leaf.counts[0] + leaf.counts[1]);
  if (total == 0) return {0.5, 0.5};
  return {static_cast<double>(leaf.counts[0]) / total, static_cast<double>(leaf.counts[1]) / total};
}

std::vector<PathCondition> DecisionTree::path(std::size_t leaf) const {
  std::vector<PathCondition> out;
  std::size_t id = leaf;
  while (nodes_.at(id).parent) {
    const std::size_t p = *nodes_[id].parent;
    const auto& n = nodes_[p];
    PathCondition c;
    c.node = p;
    c.attribute = n.attribute;
    c.threshold = n.threshold;
    c.level = n.level;
    const bool left = n.left == id;
    c.op = n.categorical ? (left ? PathCondition::Op::equals : PathCondition::Op::not_equals)
                         : (left ? PathCondition::Op::less_equal : PathCondition::Op::greater);
    out.push_back(c);
    id = p;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Foil leaves ------------------------------------------------------------------------

std::size_t path_distance(const DecisionTree& tree, std::size_t fact_leaf, std::size_t foil_leaf) {
  const auto fact = tree.path(fact_leaf);
  const auto foil = tree.path(foil_leaf);
  return static_cast<std::size_t>(std::count_if(foil.begin(), foil.end(), [&](const PathCondition& c) {
    return std::find(fact.begin(), fact.end(), c) == fact.end();
  }));
}

std::optional<std::size_t> foil_leaf(const DecisionTree& tree, const Instance& fact, Group foil_class) {
  const std::size_t fact_leaf = tree.route(fact);
  std::optional<std::size_t> best;
  std::size_t best_dist = 0, best_members = 0;
  for (std::size_t leaf : tree.leaves()) {
    const auto& n = tree.node(leaf);
    if (n.predicted != foil_class || leaf == fact_leaf) continue;
    const auto dist = path_distance(tree, fact_leaf, leaf);
    const auto members = n.members.size();
    if (!best || dist < best_dist || (dist == best_dist && members > best_members)) {
      best = leaf;
      best_dist = dist;
      best_members = members;
    }
  }
  return best;
}

namespace {

struct Region {
  double lower = -kInf;  // exclusive
  double upper = kInf;   // inclusive
  std::vector<bool> allowed;
};

std::vector<Region> regions(const DecisionTree& tree, std::size_t leaf) {
  std::vector<Region> out(tree.schema().size());
  for (std::size_t a = 0; a < out.size(); ++a) out[a].allowed.assign(tree.schema()[a].levels.size(), true);
  for (const auto& c : tree.path(leaf)) {
    auto& r = out[c.attribute];
    switch (c.op) {
      case PathCondition::Op::less_equal: r.upper = std::min(r.upper, c.threshold); break;
      case PathCondition::Op::greater: r.lower = std::max(r.lower, c.threshold); break;
      case PathCondition::Op::equals:
        for (std::size_t l = 0; l < r.allowed.size(); ++l) r.allowed[l] = r.allowed[l] && l == c.level;
        break;
      case PathCondition::Op::not_equals: r.allowed[c.level] = false; break;
    }
  }
  return out;
}

}  // namespace

std::vector<RuleCondition> rule_difference(const DecisionTree& tree, std::size_t fact_leaf, std::size_t foil_leaf) {
  const auto fact = regions(tree, fact_leaf);
  const auto foil = regions(tree, foil_leaf);
  std::vector<RuleCondition> out;
  for (std::size_t a = 0; a < tree.schema().size(); ++a) {
    const auto& schema = tree.schema()[a];
    RuleCondition rc;
    rc.attribute = a;
    rc.attribute_name = schema.name;
    rc.categorical = schema.categorical();
    if (schema.categorical()) {
      bool subset = true;
      for (std::size_t l = 0; l < schema.levels.size(); ++l) {
        if (fact[a].allowed[l] && !foil[a].allowed[l]) subset = false;
        if (foil[a].allowed[l]) rc.allowed_levels.push_back(l);
      }
      if (subset) continue;
    } else {
      if (fact[a].lower < foil[a].lower) rc.lower = foil[a].lower;
      if (fact[a].upper > foil[a].upper) rc.upper = foil[a].upper;
      if (!rc.lower && !rc.upper) continue;
    }
    out.push_back(std::move(rc));
  }
  return out;
}

std::string RuleCondition::describe(const AttributeSchema& schema) const {
  if (categorical) {
    if (allowed_levels.size() == 1) return schema.name + " is " + schema.levels[allowed_levels.front()];
    if (allowed_levels.size() + 1 == schema.levels.size()) {
      for (std::size_t l = 0; l < schema.levels.size(); ++l) {
        if (std::find(allowed_levels.begin(), allowed_levels.end(), l) == allowed_levels.end()) {
          return schema.name + " is not " + schema.levels[l];
        }
      }
    }
    std::string s = schema.name + " is one of {";
    for (std::size_t k = 0; k < allowed_levels.size(); ++k) {
      if (k) s += ", ";
      s += schema.levels[allowed_levels[k]];
    }
    return s + "}";
  }
  if (lower && upper) return format_number(*lower) + " < " + schema.name + " <= " + format_number(*upper);
  if (lower) return schema.name + " > " + format_number(*lower);
  return schema.name + " <= " + format_number(*upper);
}

// Gower ----------------------------------------------------------------------------

GowerRanges gower_ranges(const Dataset& d, const std::vector<std::string>& attributes) {
  GowerRanges g;
  if (attributes.empty()) {
    for (std::size_t a = 0; a < d.schema().size(); ++a) g.attributes.push_back(a);
  } else {
    for (const auto& name : attributes) g.attributes.push_back(d.attribute_index(name));
  }
  for (std::size_t a : g.attributes) {
    if (d.schema()[a].categorical() || d.size() == 0) {
      g.ranges.push_back(0.0);
      continue;
    }
    double lo = kInf, hi = -kInf;
    for (const auto& inst : d.instances()) {
      lo = std::min(lo, value_of(inst, a));
      hi = std::max(hi, value_of(inst, a));
    }
    g.ranges.push_back(hi - lo);
  }
  return g;
}

double gower(const Instance& a, const Instance& b, const GowerRanges& ranges) {
  if (ranges.attributes.empty()) return 0.0;
  double total = 0;
  for (std::size_t k = 0; k < ranges.attributes.size(); ++k) {
    const std::size_t attr = ranges.attributes[k];
    if (attr >= a.values.size() || attr >= b.values.size()) {
      throw ValidationError("instance lacks a value for attribute index " + std::to_string(attr));
    }
    const auto& va = a.values[attr];
    const auto& vb = b.values[attr];
    if (va.index() != vb.index()) throw ValidationError("attribute kinds differ between instances");
    if (const auto* la = std::get_if<std::size_t>(&va)) {
      total += *la == std::get<std::size_t>(vb) ? 0.0 : 1.0;
    } else if (ranges.ranges[k] > 0) {
      total += std::abs(std::get<double>(va) - std::get<double>(vb)) / ranges.ranges[k];
    }
  }
  return total / static_cast<double>(ranges.attributes.size());
}

ExampleChoice select_example(const DecisionTree& tree, std::size_t foil, const Instance& fact, const Dataset& d) {
  const auto& leaf = tree.node(foil);
  if (leaf.members.empty()) throw ValidationError("foil leaf has no members");
  const auto ranges = [&] {
    GowerRanges g = gower_ranges(d);
    GowerRanges out;
    for (std::size_t k = 0; k < g.attributes.size(); ++k) {
      if (std::find(tree.attributes().begin(), tree.attributes().end(), g.attributes[k]) != tree.attributes().end()) {
        out.attributes.push_back(g.attributes[k]);
        out.ranges.push_back(g.ranges[k]);
      }
    }
    return out;
  }();

  std::optional<ExampleChoice> reliable, fallback;
  for (const auto& id : leaf.members) {
    const auto& inst = d.instance(id);
    const double dist = gower(fact, inst, ranges);
    auto better = [&](const std::optional<ExampleChoice>& cur) {
      return !cur || dist < cur->distance || (dist == cur->distance && id_less(id, cur->instance_id));
    };
    if (inst.group == leaf.predicted && better(reliable)) reliable = ExampleChoice{id, dist, true};
    if (better(fallback)) fallback = ExampleChoice{id, dist, false};
  }
  return reliable ? *reliable : *fallback;
}

// Explanations -------------------------------------------------------------------------

namespace {

std::string render_narrative(const ContrastiveExplanation& e, const DecisionTree& tree, const Instance& fact) {
  std::ostringstream s;
  s << "Instance " << e.fact_id << " is classified as " << to_string(e.fact_class) << " rather than "
    << to_string(e.foil_class);
  if (e.other_id) s << " (the class of instance " << *e.other_id << ")";
  s << " because ";
  for (std::size_t k = 0; k < e.rule_difference.size(); ++k) {
    const auto& rc = e.rule_difference[k];
    const auto& schema = tree.schema()[rc.attribute];
    if (k) s << "; ";
    const auto& v = fact.values[rc.attribute];
    const std::string value = schema.categorical() ? schema.levels[std::get<std::size_t>(v)]
                                                   : format_number(std::get<double>(v));
    s << schema.name << " is " << value << " where " << to_string(e.foil_class) << " requires "
      << rc.describe(schema);
  }
  if (e.rule_difference.empty()) s << "the two leaves share every attribute constraint";
  s << ". Closest " << to_string(e.foil_class) << " example: instance " << e.counterfactual.instance_id;
  if (!e.counterfactual.reliable) s << " (not correctly classified; no reliable example in the foil leaf)";
  s << '.';
  return s.str();
}

}  // namespace

ContrastiveExplanation explain(const DecisionTree& tree, const Dataset& d, ContrastMode mode,
                               const std::string& fact_id, const std::optional<std::string>& other_id) {
  const auto& fact = d.instance(fact_id);
  ContrastiveExplanation e;
  e.mode = mode;
  e.fact_id = fact_id;
  e.fact_leaf = tree.route(fact);
  e.fact_class = tree.node(e.fact_leaf).predicted;

  if (mode == ContrastMode::p) {
    e.foil_class = other(e.fact_class);
    const auto leaf = foil_leaf(tree, fact, e.foil_class);
    if (!leaf) {
      throw NoContrastError("no contrast available: no leaf predicts " + std::string(to_string(e.foil_class)));
    }
    e.foil_leaf = *leaf;
  } else {
    if (!other_id) throw ValidationError("o-mode needs a second instance");
    const auto& other_inst = d.instance(*other_id);
    e.other_id = *other_id;
    e.foil_leaf = tree.route(other_inst);
    e.foil_class = tree.node(e.foil_leaf).predicted;
    if (e.foil_leaf == e.fact_leaf || e.foil_class == e.fact_class) {
      throw NoContrastError("instances " + fact_id + " and " + *other_id + " are both classified as " +
                            std::string(to_string(e.fact_class)) + "; use p-mode to contrast with the other group");
    }
  }
  e.rule_difference = rule_difference(tree, e.fact_leaf, e.foil_leaf);
  e.counterfactual = select_example(tree, e.foil_leaf, fact, d);
  e.narrative = render_narrative(e, tree, fact);
  return e;
}

// JSON --------------------------------------------------------------------------------

json to_json(const DecisionTree& tree) {
  std::function<json(std::size_t)> node_json = [&](std::size_t id) -> json {
    const auto& n = tree.node(id);
    json j = {{"id", n.id},
              {"depth", n.depth},
              {"class_counts", {{"Red", n.counts[0]}, {"Blue", n.counts[1]}}},
              {"predicted", to_string(n.predicted)},
              {"impurity", n.impurity}};
    if (n.leaf) {
      j["leaf"] = true;
      j["members"] = n.members;
    } else {
      const auto& schema = tree.schema()[n.attribute];
      j["leaf"] = false;
      j["attribute"] = schema.name;
      if (n.categorical) {
        j["level"] = schema.levels[n.level];
      } else {
        j["threshold"] = n.threshold;
      }
      j["children"] = {node_json(n.left), node_json(n.right)};
    }
    return j;
  };
  json attrs = json::array();
  for (auto a : tree.attributes()) attrs.push_back(tree.schema()[a].name);
  return {{"attributes", attrs},
          {"target", to_string(tree.target())},
          {"max_depth", tree.config().max_depth},
          {"min_leaf", tree.config().min_leaf},
          {"impurity", "gini"},
          {"single_class", tree.single_class()},
          {"root", tree.nodes().empty() ? json(nullptr) : node_json(0)}};
}

json to_json(const RuleCondition& r, const AttributeSchema& schema) {
  json j = {{"attribute", r.attribute_name}, {"text", r.describe(schema)}};
  if (r.categorical) {
    json levels = json::array();
    for (auto l : r.allowed_levels) levels.push_back(schema.levels[l]);
    j["allowed_levels"] = std::move(levels);
  } else {
    j["lower_exclusive"] = r.lower ? json(*r.lower) : json(nullptr);
    j["upper_inclusive"] = r.upper ? json(*r.upper) : json(nullptr);
  }
  return j;
}

json to_json(const ContrastiveExplanation& e, const DecisionTree& tree) {
  json rules = json::array();
  for (const auto& r : e.rule_difference) rules.push_back(to_json(r, tree.schema()[r.attribute]));
  return {{"mode", e.mode == ContrastMode::p ? "p" : "o"},
          {"fact", {{"instance_id", e.fact_id}, {"leaf_id", e.fact_leaf}, {"class", to_string(e.fact_class)}}},
          {"foil",
           {{"leaf_id", e.foil_leaf},
            {"class", to_string(e.foil_class)},
            {"instance_id", e.other_id ? json(*e.other_id) : json(nullptr)}}},
          {"rule_difference", std::move(rules)},
          {"counterfactual_example",
           {{"instance_id", e.counterfactual.instance_id},
            {"gower_distance", e.counterfactual.distance},
            {"reliable", e.counterfactual.reliable}}},
          {"narrative", e.narrative},
          {"template_version", kNarrativeTemplateVersion}};
}

}  // namespace groupscope
