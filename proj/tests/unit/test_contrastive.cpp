#include <doctest.h>

#include <random>
#include <set>

#include "contrastive_oracle.hpp"
#include "fixtures.hpp"
#include "groupscope/contrastive.hpp"
#include "oracles.hpp"

using namespace groupscope;
using fixtures::Row;

namespace {

void check_structure(const DecisionTree& t, const Dataset& d) {
  for (const auto& n : t.nodes()) {
    if (n.leaf) continue;
    const auto& l = t.node(n.left);
    const auto& r = t.node(n.right);
    CHECK(n.counts[0] == l.counts[0] + r.counts[0]);
    CHECK(n.counts[1] == l.counts[1] + r.counts[1]);
    CHECK(l.depth == n.depth + 1);
  }
  std::size_t routed = 0;
  for (auto leaf : t.leaves()) {
    for (const auto& id : t.node(leaf).members) {
      CHECK(t.route(d.instance(id)) == leaf);
      CHECK(oracle::route(t, oracle::numeric_values(d.instance(id))) == leaf);
      CHECK(t.predict(d.instance(id)) == t.node(leaf).predicted);
      ++routed;
    }
  }
  CHECK(routed == d.size());
}

}  // namespace

TEST_SUITE("contrastive") {

TEST_CASE("gini impurity") {
  CHECK(gini({5, 5}) == 0.5);
  CHECK(gini({7, 0}) == 0.0);
  CHECK(gini({1, 3}) == doctest::Approx(0.375));
}

TEST_CASE("separable single attribute splits at the midpoint") {
  std::vector<Row> rows;
  for (int i = 0; i < 5; ++i) rows.push_back({std::to_string(i + 1), Group::red, -0.5 + 0.1 * i});
  for (int i = 0; i < 5; ++i) rows.push_back({std::to_string(i + 6), Group::blue, 0.1 + 0.1 * i});
  const auto d = fixtures::make_dataset(rows);
  const auto t = fit_tree(d, {"Valence"}, Group::red, {4, 1});
  CHECK(t.depth() == 1);
  const auto& root = t.node(0);
  CHECK_FALSE(root.leaf);
  CHECK(root.attribute == 0);
  CHECK(root.threshold == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(root.impurity == 0.5);
  for (const auto& inst : d.instances()) CHECK(t.predict(inst) == inst.group);
  check_structure(t, d);
}

TEST_CASE("XOR needs two levels") {
  const auto d = fixtures::make_dataset({{"1", Group::red, -0.5, -0.5},
                                         {"2", Group::blue, -0.5, 0.5},
                                         {"3", Group::blue, 0.5, -0.5},
                                         {"4", Group::red, 0.5, 0.5}});
  const auto t = fit_tree(d, {"Valence", "Dominance"}, Group::red, {2, 1});
  CHECK(t.depth() == 2);
  // Every first split has zero gain; the tie goes to the first attribute.
  CHECK(t.node(0).attribute == 0);
  for (const auto& inst : d.instances()) CHECK(t.predict(inst) == inst.group);
  check_structure(t, d);
}

TEST_CASE("single-class data gives a flagged leaf") {
  const auto d = fixtures::make_dataset({{"1", Group::blue, 0.1}, {"2", Group::blue, 0.2}});
  const auto t = fit_tree(d, {}, Group::red);
  CHECK(t.single_class());
  CHECK(t.nodes().size() == 1);
  CHECK(t.node(0).predicted == Group::blue);
  CHECK_THROWS_AS(explain(t, d, ContrastMode::p, "1"), NoContrastError);
}

TEST_CASE("fixture trees have the intended depth and are deterministic") {
  for (const auto& f : fixtures::fixture_trees()) {
    INFO(f.name);
    CHECK(f.tree.depth() == f.expected_depth);
    check_structure(f.tree, f.data);
    const auto again = fit_tree(f.data, [&] {
      std::vector<std::string> names;
      for (auto a : f.tree.attributes()) names.push_back(f.tree.schema()[a].name);
      return names;
    }(), Group::red, f.tree.config());
    CHECK(to_json(again) == to_json(f.tree));
  }
}

TEST_CASE("foil leaf prefers the shortest path difference") {
  const auto f = fixtures::fixture_trees()[1];
  const auto paths = oracle::leaf_paths(f.tree);
  REQUIRE(paths.size() == 4);
  for (const auto& inst : f.data.instances()) {
    const auto fact = f.tree.route(inst);
    const auto foil_class = other(f.tree.node(fact).predicted);
    const auto foil = foil_leaf(f.tree, inst, foil_class);
    REQUIRE(foil);
    // Distances of every candidate counted from the walked paths.
    std::map<std::size_t, std::size_t> dist;
    for (const auto& [leaf, path] : paths) {
      if (f.tree.node(leaf).predicted != foil_class) continue;
      std::size_t n = 0;
      for (std::size_t k = 0; k < path.size(); ++k) {
        const auto& fp = paths.at(fact);
        const bool shared = k < fp.size() && fp[k].attribute == path[k].attribute &&
                            fp[k].threshold == path[k].threshold && fp[k].left == path[k].left;
        n += !shared;
      }
      dist[leaf] = n;
      CHECK(path_distance(f.tree, fact, leaf) == n);
    }
    std::set<std::size_t> values;
    for (auto& [_, v] : dist) values.insert(v);
    CHECK(values == std::set<std::size_t>{1, 2});
    CHECK(dist.at(*foil) == 1);
  }
}

TEST_CASE("foil leaf reports missing contrast") {
  const auto f = fixtures::fixture_trees()[0];
  const auto& inst = f.data.instances().front();
  const auto own = f.tree.node(f.tree.route(inst)).predicted;
  CHECK(foil_leaf(f.tree, inst, other(own)).has_value());
  const auto single = fit_tree(fixtures::make_dataset({{"1", Group::red}, {"2", Group::red}}), {}, Group::red);
  CHECK_FALSE(foil_leaf(single, f.data.instances().front(), Group::blue).has_value());
}

TEST_CASE("depth-1 Fairness tree cites Fairness alone") {
  const auto f = fixtures::fixture_trees()[0];
  REQUIRE(f.tree.depth() == 1);
  CHECK(f.tree.schema()[f.tree.node(0).attribute].name == "Fairness");
  const auto e = explain(f.tree, f.data, ContrastMode::p, "2");
  REQUIRE(e.rule_difference.size() == 1);
  CHECK(e.rule_difference[0].attribute_name == "Fairness");
  CHECK(e.fact_class == Group::red);
  CHECK(e.foil_class == Group::blue);
  CHECK(e.narrative ==
        "Instance 2 is classified as Red rather than Blue because Fairness is both where Blue requires "
        "Fairness is virtue. Closest Blue example: instance " + e.counterfactual.instance_id + ".");
  CHECK(f.data.instance(e.counterfactual.instance_id).group == Group::blue);
}

TEST_CASE("rule difference matches the brute-force oracle on every leaf pair") {
  for (const auto& f : fixtures::fixture_trees()) {
    INFO(f.name);
    const auto leaves = f.tree.leaves();
    for (auto a : leaves) {
      for (auto b : leaves) {
        if (a == b) continue;
        const auto got = rule_difference(f.tree, a, b);
        const auto want = oracle::expected_difference(f.tree, a, b);
        CHECK(got == want);
      }
    }
  }
}

TEST_CASE("explanations pass the minimality checks") {
  for (const auto& f : fixtures::fixture_trees()) {
    INFO(f.name);
    for (const auto& inst : f.data.instances()) {
      const auto e = explain(f.tree, f.data, ContrastMode::p, inst.id);
      const auto rep = oracle::check_minimality(f.tree, e.fact_leaf, e.foil_leaf, e.rule_difference,
                                                oracle::numeric_values(inst));
      CHECK(rep.points > 0);
      CHECK(rep.sufficient);
      CHECK(rep.add_back);
      CHECK(rep.removal);
      const auto& foil_members = f.tree.node(e.foil_leaf).members;
      CHECK(std::find(foil_members.begin(), foil_members.end(), e.counterfactual.instance_id) != foil_members.end());
      CHECK(f.data.instance(e.counterfactual.instance_id).group == f.tree.node(e.foil_leaf).predicted);
    }
  }
}

TEST_CASE("o-mode contrasts two leaves and rejects same-class pairs") {
  const auto f = fixtures::fixture_trees()[2];
  std::optional<std::string> red, blue, red2;
  for (const auto& inst : f.data.instances()) {
    const auto c = f.tree.predict(inst);
    if (c == Group::red && !red) red = inst.id;
    else if (c == Group::red && !red2) red2 = inst.id;
    if (c == Group::blue && !blue) blue = inst.id;
  }
  REQUIRE(red);
  REQUIRE(red2);
  REQUIRE(blue);
  const auto e = explain(f.tree, f.data, ContrastMode::o, *red, *blue);
  CHECK(e.foil_leaf == f.tree.route(f.data.instance(*blue)));
  CHECK(e.rule_difference == rule_difference(f.tree, e.fact_leaf, e.foil_leaf));
  CHECK(e.narrative.find("(the class of instance " + *blue + ")") != std::string::npos);

  try {
    explain(f.tree, f.data, ContrastMode::o, *red, *red2);
    FAIL("expected NoContrastError");
  } catch (const NoContrastError& err) {
    CHECK(std::string(err.what()).find("p-mode") != std::string::npos);
  }
  CHECK_THROWS_AS(explain(f.tree, f.data, ContrastMode::o, *red, *red), NoContrastError);
  CHECK_THROWS_AS(explain(f.tree, f.data, ContrastMode::o, *red), ValidationError);
  CHECK_THROWS_AS(explain(f.tree, f.data, ContrastMode::p, "missing"), NotFoundError);
}

TEST_CASE("Gower distance examples") {
  const auto schema = default_schema();
  Instance a = fixtures::make_instance({"1", Group::red, 0.0, 0.0, 0, 1});
  Instance b = fixtures::make_instance({"2", Group::red, 0.5, 0.0, 0, 2});
  GowerRanges r{{0, 2, 3}, {2.0, 0.0, 0.0}};
  CHECK(gower(a, a, r) == 0.0);
  CHECK(gower(a, b, r) == doctest::Approx((0.25 + 0 + 1) / 3.0).epsilon(1e-15));

  Instance c = fixtures::make_instance({"3", Group::red, 0, 0, 3, 3});
  c.values[4] = std::size_t{0};
  GowerRanges cats{{2, 3, 4}, {0, 0, 0}};
  CHECK(gower(a, c, cats) == 1.0);

  GowerRanges zero{{0}, {0.0}};
  CHECK(gower(a, b, zero) == 0.0);
}

TEST_CASE("Gower matches a brute-force implementation and is a pseudo-metric") {
  std::mt19937_64 rng(99);
  std::vector<Instance> pool;
  for (int i = 0; i < 60; ++i) pool.push_back(fixtures::random_instance(rng, std::to_string(i + 1)));
  const Dataset d(default_schema(), pool);
  const auto ranges = gower_ranges(d);
  std::vector<double> span(2);
  for (int a = 0; a < 2; ++a) {
    double lo = 1e9, hi = -1e9;
    for (const auto& p : pool) {
      lo = std::min(lo, std::get<double>(p.values[static_cast<std::size_t>(a)]));
      hi = std::max(hi, std::get<double>(p.values[static_cast<std::size_t>(a)]));
    }
    span[static_cast<std::size_t>(a)] = hi - lo;
  }
  auto row = [](const Instance& i) {
    oracle::MixedRow r;
    r.cont = {std::get<double>(i.values[0]), std::get<double>(i.values[1])};
    for (std::size_t k = 2; k < 7; ++k) r.cat.push_back(static_cast<int>(std::get<std::size_t>(i.values[k])));
    return r;
  };
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int t = 0; t < 200; ++t) {
    const auto& x = pool[pick(rng)];
    const auto& y = pool[pick(rng)];
    const auto& z = pool[pick(rng)];
    const double dxy = gower(x, y, ranges);
    CHECK(std::fabs(dxy - oracle::gower(row(x), row(y), span)) < 1e-12);
    CHECK(dxy == gower(y, x, ranges));
    CHECK(gower(x, x, ranges) == 0.0);
    CHECK(dxy <= gower(x, z, ranges) + gower(z, y, ranges) + 1e-12);
    CHECK(dxy >= 0.0);
    CHECK(dxy <= 1.0);
  }
}

TEST_CASE("counterfactual selection") {
  // Valence range is 1.0 (-0.5 .. 0.5); fact 1 sits at -0.5.
  const auto d = fixtures::make_dataset({{"1", Group::red, -0.5},
                                         {"2", Group::red, -0.45},
                                         {"3", Group::red, -0.4},
                                         {"4", Group::blue, -0.1},
                                         {"5", Group::blue, -0.3},
                                         {"6", Group::blue, 0.5}});
  const auto t = fit_tree(d, {"Valence"}, Group::red, {2, 1});
  const auto& fact = d.instance("1");
  const auto foil = foil_leaf(t, fact, Group::blue);
  REQUIRE(foil);
  const auto pick = select_example(t, *foil, fact, d);
  CHECK(pick.instance_id == "5");
  CHECK(pick.distance == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(pick.reliable);

  // Relabel the foil members so none is correctly classified.
  std::vector<Instance> relabelled = d.instances();
  for (auto& i : relabelled) {
    if (i.id == "4" || i.id == "5" || i.id == "6") i.group = Group::red;
  }
  const Dataset wrong(d.schema(), relabelled);
  const auto fallback = select_example(t, *foil, fact, wrong);
  CHECK(fallback.instance_id == "5");
  CHECK_FALSE(fallback.reliable);

  // Singleton foil leaf.
  const auto single = fixtures::make_dataset({{"1", Group::red, -0.5}, {"2", Group::red, -0.4}, {"3", Group::blue, 0.4}});
  const auto ts = fit_tree(single, {"Valence"}, Group::red, {2, 1});
  const auto leaf = foil_leaf(ts, single.instance("1"), Group::blue);
  REQUIRE(leaf);
  CHECK(select_example(ts, *leaf, single.instance("1"), single).instance_id == "3");
}

TEST_CASE("rule conditions render readably") {
  const auto schema = default_schema();
  RuleCondition c;
  c.attribute_name = "Valence";
  c.lower = 0.126;
  CHECK(c.describe(schema[0]) == "Valence > 0.13");
  c.upper = 0.5;
  CHECK(c.describe(schema[0]) == "0.13 < Valence <= 0.50");
  RuleCondition k;
  k.categorical = true;
  k.attribute_name = "Care";
  k.allowed_levels = {0};
  CHECK(k.describe(schema[2]) == "Care is virtue");
  k.allowed_levels = {0, 1, 3};
  CHECK(k.describe(schema[2]) == "Care is not none");
  k.allowed_levels = {1, 2};
  CHECK(k.describe(schema[2]) == "Care is one of {both, none}");
}

TEST_CASE("tree and explanation JSON") {
  const auto f = fixtures::fixture_trees()[0];
  const auto j = to_json(f.tree);
  CHECK(j["impurity"] == "gini");
  CHECK(j["root"]["leaf"] == false);
  CHECK(j["root"]["attribute"] == "Fairness");
  CHECK(j["root"]["level"] == "virtue");
  CHECK(j["root"]["children"].size() == 2);
  const auto e = explain(f.tree, f.data, ContrastMode::p, "1");
  const auto ej = to_json(e, f.tree);
  CHECK(ej["mode"] == "p");
  CHECK(ej["fact"]["instance_id"] == "1");
  CHECK(ej["narrative"] == e.narrative);
  CHECK(ej["template_version"] == kNarrativeTemplateVersion);
  CHECK(ej["counterfactual_example"]["instance_id"] == e.counterfactual.instance_id);
}

}  // TEST_SUITE
