#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "groupscope/errors.hpp"
#include "groupscope/group_insights.hpp"
#include "groupscope/synthetic.hpp"
#include "oracles.hpp"

using namespace groupscope;

namespace {

Dataset two_groups(const std::vector<double>& red, const std::vector<double>& blue) {
  std::vector<fixtures::Row> rows;
  int id = 1;
  for (double v : red) rows.push_back({std::to_string(id++), Group::red, v, 0.0, 0, 3});
  for (double v : blue) rows.push_back({std::to_string(id++), Group::blue, v, 0.0, 1, 3});
  return fixtures::make_dataset(rows);
}

}  // namespace

TEST_SUITE("group_insights") {

TEST_CASE("identical groups are not significant") {
  const std::vector<double> v{-0.4, -0.1, 0.0, 0.2, 0.5, 0.7};
  const auto s = summarize(two_groups(v, v), {"Valence"});
  REQUIRE(s.size() == 1);
  CHECK(s[0].significance.test == "welch_t");
  CHECK(s[0].significance.p_value >= 0.99);
  CHECK_FALSE(s[0].significance.significant);
}

TEST_CASE("separated groups are significant and match Welch's formula") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> red(-0.5, 0.1), blue(0.5, 0.1);
  std::vector<double> a, b;
  for (int i = 0; i < 200; ++i) {
    a.push_back(std::clamp(red(rng), -1.0, 1.0));
    b.push_back(std::clamp(blue(rng), -1.0, 1.0));
  }
  const auto s = summarize(two_groups(a, b), {"Valence"});
  const auto& t = s[0].significance;
  CHECK(t.significant);
  CHECK(t.p_value < 1e-10);

  auto mean = [](const std::vector<double>& x) {
    double m = 0;
    for (double v : x) m += v;
    return m / x.size();
  };
  auto var = [&](const std::vector<double>& x) {
    const double m = mean(x);
    double s2 = 0;
    for (double v : x) s2 += (v - m) * (v - m);
    return s2 / (x.size() - 1);
  };
  const double se2 = var(a) / 200 + var(b) / 200;
  CHECK(t.statistic == doctest::Approx((mean(a) - mean(b)) / std::sqrt(se2)).epsilon(1e-12));
  const double dof = se2 * se2 / (std::pow(var(a) / 200, 2) / 199 + std::pow(var(b) / 200, 2) / 199);
  CHECK(t.degrees_of_freedom == doctest::Approx(dof).epsilon(1e-12));
  CHECK(s[0].groups[0].count == 200);
  CHECK(s[0].groups[0].mean == doctest::Approx(mean(a)).epsilon(1e-14));
  CHECK(s[0].groups[1].variance == doctest::Approx(var(b)).epsilon(1e-12));
}

TEST_CASE("test statistics agree with reference values") {
  // Reference values from an independent statistics package.
  const std::vector<double> a{0.1, 0.2, 0.3, 0.4, 0.5}, b{0.2, 0.4, 0.6, 0.8, 1.0};
  const auto t = welch_t_test(a, b);
  CHECK(t.statistic == doctest::Approx(-1.8973665961010275).epsilon(1e-12));
  CHECK(t.p_value == doctest::Approx(0.10753119493062718).epsilon(1e-9));

  const auto c = chi_square_test({{10, 20, 5}, {30, 15, 20}});
  CHECK(c.test == "chi_square");
  CHECK(c.statistic == doctest::Approx(11.773940345368917).epsilon(1e-12));
  CHECK(c.degrees_of_freedom == 2);
  CHECK(c.p_value == doctest::Approx(0.0027753728715492858).epsilon(1e-9));

  // df = 1 has the closed form p = erfc(sqrt(x / 2)).
  const auto c1 = chi_square_test({{12, 8}, {5, 15}});
  CHECK(c1.p_value == doctest::Approx(std::erfc(std::sqrt(c1.statistic / 2))).epsilon(1e-10));
}

TEST_CASE("categorical summaries count levels and ignore group naming") {
  const auto d = fixtures::depth3();
  for (const auto& s : summarize(d)) {
    CHECK(s.significance.p_value >= 0);
    CHECK(s.significance.p_value <= 1);
    if (s.kind != AttributeKind::categorical) continue;
    for (std::size_t g = 0; g < 2; ++g) {
      std::size_t total = 0;
      for (auto c : s.groups[g].level_counts) total += c;
      CHECK(total == s.groups[g].count);
    }
  }
  // Swapping the group labels leaves every p-value unchanged.
  std::vector<Instance> swapped = d.instances();
  for (auto& i : swapped) i.group = other(i.group);
  const auto a = summarize(d), b = summarize(Dataset(d.schema(), swapped));
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].significance.p_value == doctest::Approx(b[k].significance.p_value).epsilon(1e-12));
  }
}

TEST_CASE("summary needs both groups") {
  CHECK_THROWS_AS(summarize(two_groups({0.1, 0.2, 0.3}, {})), ValidationError);
}

TEST_CASE("categorical density is the level frequency") {
  const auto d = two_groups({0.1, 0.2, 0.3}, {0.4, 0.5});
  const auto c = conditional_density(d, "Fairness");
  REQUIRE(c.levels.size() == 4);
  CHECK(c.groups[0].values == std::vector<double>{0, 0, 0, 1});
  const auto care = conditional_density(d, "Care");
  double total = 0;
  for (double v : care.groups[1].values) total += v;
  CHECK(std::fabs(total - 1.0) < 1e-9);
}

TEST_CASE("Gaussian KDE approximates the analytic density") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 0.2);
  std::vector<double> x;
  for (int i = 0; i < 1000; ++i) x.push_back(std::clamp(n(rng), -1.0, 1.0));
  const auto d = two_groups(x, x);
  const auto c = conditional_density(d, "Valence");
  REQUIRE(c.grid.size() == kDensityGridPoints);
  CHECK(c.grid.front() == -1.0);
  CHECK(c.grid.back() == 1.0);
  const double analytic = 1.0 / (0.2 * std::sqrt(2 * std::numbers::pi));
  CHECK(std::fabs(c.groups[0].values[50] - analytic) < 0.1 * analytic);
  CHECK(std::fabs(trapezoid(c.grid, c.groups[0].values) - 1.0) < 1e-3);
  CHECK(c.groups[0].bandwidth == doctest::Approx(silverman_bandwidth(x)));
}

TEST_CASE("Silverman bandwidth") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.0};
  // sd = sqrt(2.5), IQR = 2 -> min(1.5811, 1.4925) = 1.4925
  CHECK(silverman_bandwidth(x) == doctest::Approx(0.9 * (2.0 / 1.34) * std::pow(5.0, -0.2)).epsilon(1e-12));
}

TEST_CASE("degenerate densities are flagged as spikes") {
  const auto d = two_groups({0.3, 0.3, 0.3}, {0.1, 0.5});
  const auto c = conditional_density(d, "Valence");
  CHECK(c.groups[0].degenerate);
  REQUIRE(c.groups[0].spike_at);
  CHECK(*c.groups[0].spike_at == 0.3);
  CHECK_FALSE(c.groups[1].degenerate);
}

TEST_CASE("Ward merges near pairs before cross pairs") {
  const auto merges = ward_linkage({{0.0}, {0.1}, {0.9}, {1.0}});
  REQUIRE(merges.size() == 3);
  std::set<std::set<std::size_t>> first{{merges[0].left, merges[0].right}, {merges[1].left, merges[1].right}};
  CHECK(first == std::set<std::set<std::size_t>>{{0, 1}, {2, 3}});
  // Ward distance between singletons at distance 0.1 is sqrt(2 * 1 * 1 / 2) * 0.1.
  CHECK(merges[0].height == doctest::Approx(0.1).epsilon(1e-12));
  // {0, 0.1} vs {0.9, 1.0}: sqrt(2 * 2 * 2 / 4) * 0.9
  CHECK(merges[2].height == doctest::Approx(std::sqrt(2.0) * 0.9).epsilon(1e-12));
  for (std::size_t i = 1; i < merges.size(); ++i) CHECK(merges[i].height >= merges[i - 1].height);
}

TEST_CASE("identical instances give a degenerate elbow") {
  std::vector<fixtures::Row> rows;
  for (int i = 0; i < 12; ++i) rows.push_back({std::to_string(i + 1), i % 2 ? Group::blue : Group::red, 0.2, 0.2});
  const auto r = cluster_subgroups(fixtures::make_dataset(rows), {"Valence", "Dominance"}, 5);
  CHECK(r.chosen_k == 1);
  CHECK(r.degenerate_elbow);
  for (double w : r.elbow_curve) CHECK(w < 1e-20);
}

TEST_CASE("three blobs are recovered") {
  const auto blobs = blob_corpus();
  const auto r = cluster_subgroups(blobs.dataset, blobs.attributes, 10);
  CHECK(r.chosen_k == 3);
  REQUIRE(r.elbow_curve.size() == 10);
  for (std::size_t k = 1; k < r.elbow_curve.size(); ++k) CHECK(r.elbow_curve[k] <= r.elbow_curve[k - 1] + 1e-12);

  std::map<std::string, std::size_t> label_of;
  std::size_t total = 0;
  for (const auto& s : r.subgroups) {
    CHECK(s.size == s.members.size());
    CHECK(s.group_probability >= 0);
    CHECK(s.group_probability <= 1);
    total += s.size;
    for (const auto& m : s.members) CHECK(label_of.emplace(m, s.id).second);
  }
  CHECK(total == blobs.dataset.size());
  for (std::size_t i = 1; i < r.subgroups.size(); ++i) CHECK(r.subgroups[i - 1].size >= r.subgroups[i].size);
  std::vector<std::size_t> found;
  for (const auto& inst : blobs.dataset.instances()) found.push_back(label_of.at(inst.id));
  CHECK(oracle::adjusted_rand(found, blobs.labels) >= 0.9);
}

TEST_CASE("clustering ignores instance order") {
  const auto blobs = blob_corpus(90, 4);
  auto shuffled = blobs.dataset.instances();
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto a = cluster_subgroups(blobs.dataset, blobs.attributes, 6);
  const auto b = cluster_subgroups(Dataset(blobs.dataset.schema(), shuffled), blobs.attributes, 6);
  auto partition = [](const ClusterResult& r) {
    std::set<std::set<std::string>> p;
    for (const auto& s : r.subgroups) p.insert(std::set<std::string>(s.members.begin(), s.members.end()));
    return p;
  };
  CHECK(a.chosen_k == b.chosen_k);
  CHECK(partition(a) == partition(b));
}

TEST_CASE("cluster input validation") {
  const auto blobs = blob_corpus(30, 2);
  CHECK_THROWS_AS(cluster_subgroups(blobs.dataset, blobs.attributes, 1), ValidationError);
  CHECK_THROWS_AS(cluster_subgroups(blobs.dataset, {}, 5), ValidationError);
}

TEST_CASE("ordinal encoding keeps the declared order") {
  const auto schema = default_schema();
  const auto& care = schema[2];
  for (std::size_t l = 1; l < care.levels.size(); ++l) CHECK(care.ordinal_score(l) < care.ordinal_score(l - 1));
}

TEST_CASE("trend polylines") {
  const auto d = fixtures::depth3();
  const auto one = trend(d, {"Valence", "Care", "Dominance"}, {"1"});
  REQUIRE(one.lines.size() == 1);
  CHECK(one.lines[0].polyline.size() == 3);
  // Axes follow display order regardless of the requested order.
  CHECK(one.axes == std::vector<std::string>{"Valence", "Dominance", "Care"});

  const auto all = trend(d, {"Care", "Fairness"});
  CHECK(all.lines.size() == d.size());
  std::map<std::string, std::size_t> per_axis;
  for (const auto& b : all.bundles) ++per_axis[b.axis];
  CHECK(per_axis["Care"] <= 4);
  CHECK(per_axis["Fairness"] <= 4 * per_axis["Care"]);

  const auto clusters = cluster_subgroups(d, {"Valence", "Dominance"}, 5);
  const auto& members = clusters.subgroups.back().members;
  const auto sel = trend(d, {"Valence"}, members);
  std::set<std::string> ids;
  for (const auto& l : sel.lines) ids.insert(l.instance_id);
  CHECK(ids == std::set<std::string>(members.begin(), members.end()));
}

}  // TEST_SUITE
