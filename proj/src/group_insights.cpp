#include "groupscope/group_insights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "groupscope/errors.hpp"
#include "groupscope/stats.hpp"

namespace groupscope {

using nlohmann::json;

namespace {

std::vector<std::size_t> resolve_attributes(const Dataset& d, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  if (names.empty()) {
    out.resize(d.schema().size());
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  for (const auto& n : names) out.push_back(d.attribute_index(n));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::array<std::vector<double>, 2> values_by_group(const Dataset& d, std::size_t attr) {
  std::array<std::vector<double>, 2> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    out[static_cast<std::size_t>(d.instances()[i].group)].push_back(d.numeric_value(i, attr));
  }
  return out;
}

}  // namespace

// Significance ------------------------------------------------------------------

SignificanceTest welch_t_test(std::span<const double> a, std::span<const double> b) {
  SignificanceTest t;
  t.test = "welch_t";
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = stats::mean(a), mb = stats::mean(b);
  const double va = stats::sample_variance(a) / na, vb = stats::sample_variance(b) / nb;
  const double se2 = va + vb;
  if (se2 <= 0) {
    t.statistic = ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
    t.degrees_of_freedom = na + nb - 2;
    t.p_value = ma == mb ? 1.0 : 0.0;
  } else {
    t.statistic = (ma - mb) / std::sqrt(se2);
    double denom = 0;
    if (va > 0) denom += va * va / (na - 1);
    if (vb > 0) denom += vb * vb / (nb - 1);
    t.degrees_of_freedom = se2 * se2 / denom;
    boost::math::students_t dist(t.degrees_of_freedom);
    t.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t.statistic))), 0.0, 1.0);
  }
  t.significant = t.p_value < kSignificanceLevel;
  return t;
}

SignificanceTest chi_square_test(const std::vector<std::vector<std::size_t>>& table) {
  SignificanceTest t;
  t.test = "chi_square";
  const std::size_t rows = table.size();
  const std::size_t cols = rows ? table[0].size() : 0;
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      row_sum[r] += static_cast<double>(table[r][c]);
      col_sum[c] += static_cast<double>(table[r][c]);
      total += static_cast<double>(table[r][c]);
    }
  }
  const auto live_rows = std::count_if(row_sum.begin(), row_sum.end(), [](double s) { return s > 0; });
  const auto live_cols = std::count_if(col_sum.begin(), col_sum.end(), [](double s) { return s > 0; });
  const double dof = static_cast<double>((live_rows - 1) * (live_cols - 1));
  t.degrees_of_freedom = std::max(0.0, dof);
  if (dof <= 0) {
    t.p_value = 1.0;
    return t;
  }
  double stat = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (row_sum[r] == 0 || col_sum[c] == 0) continue;
      const double expected = row_sum[r] * col_sum[c] / total;
      const double diff = static_cast<double>(table[r][c]) - expected;
      stat += diff * diff / expected;
    }
  }
  t.statistic = stat;
  boost::math::chi_squared dist(dof);
  t.p_value = std::clamp(boost::math::cdf(boost::math::complement(dist, stat)), 0.0, 1.0);
  t.significant = t.p_value < kSignificanceLevel;
  return t;
}

std::vector<AttributeSummary> summarize(const Dataset& d, const std::vector<std::string>& attributes) {
  for (Group g : {Group::red, Group::blue}) {
    if (d.group_count(g) < 2) {
      throw ValidationError("group " + std::string(to_string(g)) + " needs at least 2 instances");
    }
  }
  std::vector<AttributeSummary> out;
  for (std::size_t attr : resolve_attributes(d, attributes)) {
    const auto& schema = d.schema()[attr];
    AttributeSummary s;
    s.attribute = schema.name;
    s.kind = schema.kind;
    if (schema.categorical()) {
      std::vector<std::vector<std::size_t>> table(2, std::vector<std::size_t>(schema.levels.size(), 0));
      for (const auto& inst : d.instances()) {
        ++table[static_cast<std::size_t>(inst.group)][std::get<std::size_t>(inst.values[attr])];
      }
      for (std::size_t g = 0; g < 2; ++g) {
        s.groups[g].count = std::accumulate(table[g].begin(), table[g].end(), std::size_t{0});
        s.groups[g].level_counts = table[g];
      }
      s.significance = chi_square_test(table);
    } else {
      const auto values = values_by_group(d, attr);
      for (std::size_t g = 0; g < 2; ++g) {
        s.groups[g].count = values[g].size();
        s.groups[g].mean = stats::mean(values[g]);
        s.groups[g].median = stats::median(values[g]);
        s.groups[g].variance = stats::sample_variance(values[g]);
      }
      s.significance = welch_t_test(values[0], values[1]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Densities -------------------------------------------------------------------

double silverman_bandwidth(std::span<const double> x) {
  const double sd = std::sqrt(stats::sample_variance(x));
  const double iqr = stats::quantile({x.begin(), x.end()}, 0.75) - stats::quantile({x.begin(), x.end()}, 0.25);
  double spread = sd;
  if (iqr > 0) spread = std::min(sd, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

double trapezoid(std::span<const double> grid, std::span<const double> values) {
  double s = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) s += 0.5 * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
  return s;
}

ConditionalDensity conditional_density(const Dataset& d, const std::string& attribute) {
  const std::size_t attr = d.attribute_index(attribute);
  const auto& schema = d.schema()[attr];
  ConditionalDensity out;
  out.attribute = schema.name;
  out.kind = schema.kind;

  for (Group g : {Group::red, Group::blue}) {
    if (d.group_count(g) == 0) throw ValidationError("group " + std::string(to_string(g)) + " has no instances");
  }

  if (schema.categorical()) {
    out.levels = schema.levels;
    for (std::size_t g = 0; g < 2; ++g) out.groups[g].values.assign(schema.levels.size(), 0.0);
    std::array<double, 2> totals{};
    for (const auto& inst : d.instances()) {
      const auto gi = static_cast<std::size_t>(inst.group);
      out.groups[gi].values[std::get<std::size_t>(inst.values[attr])] += 1.0;
      totals[gi] += 1.0;
    }
    for (std::size_t g = 0; g < 2; ++g) {
      for (auto& v : out.groups[g].values) v /= totals[g];
    }
    return out;
  }

  out.grid.resize(kDensityGridPoints);
  const double step = 2.0 / static_cast<double>(kDensityGridPoints - 1);
  for (std::size_t i = 0; i < kDensityGridPoints; ++i) out.grid[i] = -1.0 + step * static_cast<double>(i);
  out.grid.back() = 1.0;

  const auto values = values_by_group(d, attr);
  for (std::size_t g = 0; g < 2; ++g) {
    auto& curve = out.groups[g];
    const auto& x = values[g];
    curve.values.assign(kDensityGridPoints, 0.0);
    auto distinct = x;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) {
      curve.degenerate = true;
      curve.spike_at = x.front();
      const auto nearest = static_cast<std::size_t>(std::lround((x.front() + 1.0) / step));
      const bool edge = nearest == 0 || nearest == kDensityGridPoints - 1;
      curve.values[nearest] = (edge ? 2.0 : 1.0) / step;
      continue;
    }
    const double h = silverman_bandwidth(x);
    curve.bandwidth = h;
    const double norm = 1.0 / (static_cast<double>(x.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t i = 0; i < kDensityGridPoints; ++i) {
      double s = 0;
      for (double xi : x) {
        const double u = (out.grid[i] - xi) / h;
        s += std::exp(-0.5 * u * u);
      }
      curve.values[i] = s * norm;
    }
    const double mass = trapezoid(out.grid, curve.values);
    if (mass > 0) {
      for (auto& v : curve.values) v /= mass;
    }
  }
  return out;
}

// Clustering ------------------------------------------------------------------

std::vector<Merge> ward_linkage(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<Merge> merges;
  if (n < 2) return merges;

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < rows[i].size(); ++k) {
        const double diff = rows[i][k] - rows[j][k];
        s += diff * diff;
      }
      dist[i * n + j] = dist[j * n + i] = s;
    }
  }
  auto D = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };

  std::vector<std::size_t> size(n, 1), cluster_id(n);
  std::iota(cluster_id.begin(), cluster_id.end(), 0);
  std::vector<bool> active(n, true);
  std::vector<std::size_t> chain;
  struct RawMerge {
    Merge merge;
    std::size_t order;
  };
  std::vector<RawMerge> raw;

  for (std::size_t remaining = n; remaining > 1;) {
    if (chain.empty()) {
      chain.push_back(static_cast<std::size_t>(std::find(active.begin(), active.end(), true) - active.begin()));
    }
    const std::size_t a = chain.back();
    const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    if (prev != n) {
      best = prev;
      best_d = D(a, prev);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == a) continue;
      if (D(a, j) < best_d) {
        best_d = D(a, j);
        best = j;
      }
    }
    if (best != prev) {
      chain.push_back(best);
      continue;
    }
    chain.pop_back();
    chain.pop_back();
    const std::size_t keep = std::min(a, best), drop = std::max(a, best);
    const double nk = static_cast<double>(size[keep]), nd = static_cast<double>(size[drop]);
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == keep || j == drop) continue;
      const double nj = static_cast<double>(size[j]);
      const double updated = ((nk + nj) * D(keep, j) + (nd + nj) * D(drop, j) - nj * D(keep, drop)) / (nk + nd + nj);
      D(keep, j) = D(j, keep) = updated;
    }
    Merge m;
    m.left = std::min(cluster_id[keep], cluster_id[drop]);
    m.right = std::max(cluster_id[keep], cluster_id[drop]);
    m.height = std::sqrt(best_d);
    m.size = size[keep] + size[drop];
    raw.push_back({m, raw.size()});
    size[keep] += size[drop];
    active[drop] = false;
    cluster_id[keep] = n + raw.size() - 1;
    --remaining;
  }

  // NN-chain emits merges out of height order; renumber after sorting.
  std::stable_sort(raw.begin(), raw.end(), [](const RawMerge& x, const RawMerge& y) {
    return x.merge.height < y.merge.height;
  });
  std::vector<std::size_t> renumber(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) renumber[raw[k].order] = k;
  for (const auto& r : raw) {
    Merge m = r.merge;
    if (m.left >= n) m.left = n + renumber[m.left - n];
    if (m.right >= n) m.right = n + renumber[m.right - n];
    if (m.left > m.right) std::swap(m.left, m.right);
    merges.push_back(m);
  }
  return merges;
}

std::vector<std::size_t> cut_tree(const std::vector<Merge>& merges, std::size_t n, std::size_t k) {
  std::vector<std::size_t> parent(n + merges.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const std::size_t steps = n > k ? n - k : 0;
  for (std::size_t m = 0; m < std::min(steps, merges.size()); ++m) {
    parent[find(merges[m].left)] = n + m;
    parent[find(merges[m].right)] = n + m;
  }
  std::vector<std::size_t> labels(n);
  std::map<std::size_t, std::size_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = find(i);
    auto [it, fresh] = seen.try_emplace(root, seen.size());
    labels[i] = it->second;
  }
  return labels;
}

double within_cluster_ss(const std::vector<std::vector<double>>& rows, const std::vector<std::size_t>& labels) {
  if (rows.empty()) return 0.0;
  const std::size_t dims = rows[0].size();
  const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<double>> centroid(k, std::vector<double>(dims, 0.0));
  std::vector<double> count(k, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    count[labels[i]] += 1;
    for (std::size_t j = 0; j < dims; ++j) centroid[labels[i]][j] += rows[i][j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (auto& v : centroid[c]) v /= count[c];
  }
  double w = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < dims; ++j) {
      const double diff = rows[i][j] - centroid[labels[i]][j];
      w += diff * diff;
    }
  }
  return w;
}

ElbowChoice elbow(const std::vector<double>& curve) {
  ElbowChoice choice;
  if (curve.size() < 2 || curve.front() <= 0) {
    choice.degenerate = true;
    return choice;
  }
  const double x1 = 1, y1 = curve.front();
  const double x2 = static_cast<double>(curve.size()), y2 = curve.back();
  const double dx = x2 - x1, dy = y2 - y1;
  const double norm = std::hypot(dx, dy);
  double best = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double x = static_cast<double>(i + 1);
    const double dist = std::abs(dy * (x - x1) - dx * (curve[i] - y1)) / norm;
    if (dist > best) {
      best = dist;
      choice.k = i + 1;
    }
  }
  // Collinear curve: no bend to pick.
  if (best <= 1e-12 * std::max(1.0, y1)) {
    choice.k = 1;
    choice.degenerate = true;
  }
  return choice;
}

std::vector<std::vector<double>> attribute_matrix(const Dataset& d, const std::vector<std::size_t>& attributes) {
  std::vector<std::vector<double>> rows(d.size(), std::vector<double>(attributes.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = 0; k < attributes.size(); ++k) rows[i][k] = d.numeric_value(i, attributes[k]);
  }
  return rows;
}

ClusterResult cluster_subgroups(const Dataset& d, const std::vector<std::string>& attributes, std::size_t k_max) {
  if (k_max < 2) throw ValidationError("k_max must be at least 2");
  if (attributes.empty()) throw ValidationError("at least one attribute is required for clustering");
  if (d.size() < k_max) throw ValidationError("fewer instances than k_max");
  const auto attrs = resolve_attributes(d, attributes);
  const auto rows = attribute_matrix(d, attrs);
  const std::size_t n = rows.size();

  ClusterResult result;
  for (auto a : attrs) result.attributes.push_back(d.schema()[a].name);
  result.merges = ward_linkage(rows);
  for (std::size_t k = 1; k <= k_max; ++k) {
    result.elbow_curve.push_back(within_cluster_ss(rows, cut_tree(result.merges, n, k)));
  }
  const auto choice = elbow(result.elbow_curve);
  result.chosen_k = choice.k;
  result.degenerate_elbow = choice.degenerate;

  const auto labels = cut_tree(result.merges, n, result.chosen_k);
  std::vector<std::vector<std::size_t>> members(result.chosen_k);
  for (std::size_t i = 0; i < n; ++i) members[labels[i]].push_back(i);
  for (auto& m : members) {
    std::sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
      return id_less(d.instances()[a].id, d.instances()[b].id);
    });
  }
  std::sort(members.begin(), members.end(), [&](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return id_less(d.instances()[a.front()].id, d.instances()[b.front()].id);
  });

  for (std::size_t c = 0; c < members.size(); ++c) {
    Subgroup sg;
    sg.id = c + 1;
    sg.size = members[c].size();
    std::size_t red = 0;
    for (std::size_t i : members[c]) {
      sg.members.push_back(d.instances()[i].id);
      if (d.instances()[i].group == Group::red) ++red;
    }
    sg.group_probability = static_cast<double>(red) / static_cast<double>(sg.size);
    for (std::size_t k = 0; k < attrs.size(); ++k) {
      const auto& schema = d.schema()[attrs[k]];
      AttributeGlyph glyph;
      glyph.attribute = schema.name;
      if (schema.categorical()) {
        std::vector<double> counts(schema.levels.size(), 0.0);
        for (std::size_t i : members[c]) counts[std::get<std::size_t>(d.instances()[i].values[attrs[k]])] += 1;
        const auto mode = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        glyph.center = schema.ordinal_score(mode);
        glyph.mode_level = schema.levels[mode];
        double entropy = 0;
        for (double cnt : counts) {
          if (cnt > 0) {
            const double p = cnt / static_cast<double>(sg.size);
            entropy -= p * std::log(p);
          }
        }
        glyph.spread = entropy;
      } else {
        std::vector<double> x;
        for (std::size_t i : members[c]) x.push_back(rows[i][k]);
        glyph.center = stats::mean(x);
        glyph.spread = stats::population_variance(x);
      }
      sg.glyphs.push_back(std::move(glyph));
    }
    result.subgroups.push_back(std::move(sg));
  }
  return result;
}

// Trends ------------------------------------------------------------------------

TrendResult trend(const Dataset& d, const std::vector<std::string>& attributes,
                  const std::vector<std::string>& selection) {
  const auto attrs = resolve_attributes(d, attributes);
  TrendResult out;
  for (auto a : attrs) out.axes.push_back(d.schema()[a].name);

  std::vector<std::size_t> chosen;
  if (selection.empty()) {
    chosen.resize(d.size());
    std::iota(chosen.begin(), chosen.end(), 0);
  } else {
    for (const auto& id : selection) {
      const auto idx = d.find_instance(id);
      if (!idx) throw NotFoundError("unknown instance '" + id + "' in selection");
      chosen.push_back(*idx);
    }
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  }
  std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
    return id_less(d.instances()[a].id, d.instances()[b].id);
  });

  std::vector<int> upstream(chosen.size(), -1);
  for (std::size_t line = 0; line < chosen.size(); ++line) {
    const auto& inst = d.instances()[chosen[line]];
    TrendBundle b;
    b.instance_id = inst.id;
    b.group = inst.group;
    for (auto a : attrs) b.polyline.push_back(d.numeric_value(chosen[line], a));
    b.bundle_ids.assign(attrs.size(), -1);
    out.lines.push_back(std::move(b));
  }

  for (std::size_t k = 0; k < attrs.size(); ++k) {
    const auto& schema = d.schema()[attrs[k]];
    if (!schema.categorical()) continue;
    std::map<std::pair<int, std::size_t>, std::vector<std::size_t>> groups;
    for (std::size_t line = 0; line < chosen.size(); ++line) {
      const auto level = std::get<std::size_t>(d.instances()[chosen[line]].values[attrs[k]]);
      groups[{upstream[line], level}].push_back(line);
    }
    for (const auto& [key, lines] : groups) {
      AxisBundle bundle;
      bundle.id = static_cast<int>(out.bundles.size());
      bundle.axis = schema.name;
      bundle.level = schema.levels[key.second];
      bundle.parent = key.first;
      bundle.count = lines.size();
      for (std::size_t line : lines) {
        if (out.lines[line].group == Group::red) ++bundle.red_count;
        out.lines[line].bundle_ids[k] = bundle.id;
        upstream[line] = bundle.id;
      }
      out.bundles.push_back(std::move(bundle));
    }
  }
  return out;
}

// JSON --------------------------------------------------------------------------

json to_json(const AttributeSummary& s, const Dataset& d) {
  json groups = json::object();
  const auto& schema = d.attribute(s.attribute);
  for (Group g : {Group::red, Group::blue}) {
    const auto& gs = s.groups[static_cast<std::size_t>(g)];
    json item = {{"count", gs.count}};
    if (s.kind == AttributeKind::categorical) {
      json levels = json::object();
      for (std::size_t l = 0; l < schema.levels.size(); ++l) levels[schema.levels[l]] = gs.level_counts[l];
      item["level_counts"] = std::move(levels);
    } else {
      item["mean"] = gs.mean;
      item["median"] = gs.median;
      item["variance"] = gs.variance;
    }
    groups[std::string(to_string(g))] = std::move(item);
  }
  return {{"attribute", s.attribute},
          {"kind", s.kind == AttributeKind::categorical ? "categorical" : "continuous"},
          {"groups", std::move(groups)},
          {"significance",
           {{"test", s.significance.test},
            {"statistic", std::isfinite(s.significance.statistic) ? json(s.significance.statistic) : json(nullptr)},
            {"degrees_of_freedom", s.significance.degrees_of_freedom},
            {"p_value", s.significance.p_value},
            {"alpha", kSignificanceLevel},
            {"significant", s.significance.significant}}}};
}

json to_json(const ConditionalDensity& c) {
  json groups = json::object();
  for (Group g : {Group::red, Group::blue}) {
    const auto& curve = c.groups[static_cast<std::size_t>(g)];
    json item = {{"degenerate", curve.degenerate}};
    if (c.kind == AttributeKind::categorical) {
      json probs = json::array();
      for (std::size_t l = 0; l < c.levels.size(); ++l) probs.push_back({{"level", c.levels[l]}, {"probability", curve.values[l]}});
      item["probabilities"] = std::move(probs);
    } else {
      item["density"] = curve.values;
      item["bandwidth"] = curve.bandwidth;
      item["spike_at"] = curve.spike_at ? json(*curve.spike_at) : json(nullptr);
    }
    groups[std::string(to_string(g))] = std::move(item);
  }
  json out = {{"attribute", c.attribute},
              {"kind", c.kind == AttributeKind::categorical ? "categorical" : "continuous"},
              {"groups", std::move(groups)}};
  if (c.kind == AttributeKind::categorical) {
    out["levels"] = c.levels;
  } else {
    out["grid"] = c.grid;
  }
  return out;
}

json to_json(const ClusterResult& r) {
  json subgroups = json::array();
  for (const auto& sg : r.subgroups) {
    json glyphs = json::array();
    for (const auto& g : sg.glyphs) {
      json item = {{"attribute", g.attribute}, {"center", g.center}, {"spread", g.spread}};
      if (g.mode_level) item["mode_level"] = *g.mode_level;
      glyphs.push_back(std::move(item));
    }
    subgroups.push_back({{"subgroup_id", sg.id},
                         {"size", sg.size},
                         {"group_probability", sg.group_probability},
                         {"members", sg.members},
                         {"glyphs", std::move(glyphs)}});
  }
  json curve = json::array();
  for (std::size_t k = 0; k < r.elbow_curve.size(); ++k) curve.push_back({{"k", k + 1}, {"w", r.elbow_curve[k]}});
  return {{"attributes", r.attributes},
          {"chosen_k", r.chosen_k},
          {"degenerate_elbow", r.degenerate_elbow},
          {"elbow_curve", std::move(curve)},
          {"subgroups", std::move(subgroups)}};
}

json to_json(const TrendResult& r) {
  json lines = json::array();
  for (const auto& l : r.lines) {
    lines.push_back({{"instance_id", l.instance_id},
                     {"group", to_string(l.group)},
                     {"polyline", l.polyline},
                     {"bundle_ids", l.bundle_ids}});
  }
  json bundles = json::array();
  for (const auto& b : r.bundles) {
    bundles.push_back({{"id", b.id},
                       {"axis", b.axis},
                       {"level", b.level},
                       {"parent", b.parent},
                       {"count", b.count},
                       {"red_count", b.red_count}});
  }
  return {{"axes", r.axes}, {"lines", std::move(lines)}, {"bundles", std::move(bundles)}};
}

}  // namespace groupscope
