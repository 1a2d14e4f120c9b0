#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "groupscope/corpus.hpp"

namespace groupscope {

inline constexpr double kSignificanceLevel = 0.05;

struct SignificanceTest {
  std::string test;  // "welch_t" or "chi_square"
  double statistic = 0;
  double degrees_of_freedom = 0;
  double p_value = 1;
  bool significant = false;
};

struct GroupStatistics {
  std::size_t count = 0;
  double mean = 0;      // continuous only
  double median = 0;    // continuous only
  double variance = 0;  // continuous only, sample variance
  std::vector<std::size_t> level_counts;  // categorical only
};

struct AttributeSummary {
  std::string attribute;
  AttributeKind kind = AttributeKind::continuous;
  std::array<GroupStatistics, 2> groups;  // indexed by Group
  SignificanceTest significance;
};

/// Welch two-sample t-test statistic, degrees of freedom and two-sided p-value.
SignificanceTest welch_t_test(std::span<const double> a, std::span<const double> b);
/// Chi-square test of independence over a groups x levels table.
SignificanceTest chi_square_test(const std::vector<std::vector<std::size_t>>& table);

/// Summaries in display order; an empty attribute list means the full schema.
std::vector<AttributeSummary> summarize(const Dataset& d, const std::vector<std::string>& attributes = {});

// Densities -------------------------------------------------------------------

inline constexpr std::size_t kDensityGridPoints = 101;

struct DensityCurve {
  std::vector<double> values;  // density per grid point, or probability per level
  double bandwidth = 0;        // continuous only
  bool degenerate = false;     // fewer than two distinct values: a spike
  std::optional<double> spike_at;
};

struct ConditionalDensity {
  std::string attribute;
  AttributeKind kind = AttributeKind::continuous;
  std::vector<double> grid;          // continuous
  std::vector<std::string> levels;   // categorical
  std::array<DensityCurve, 2> groups;
};

/// 0.9 * min(sd, IQR / 1.34) * n^(-1/5), falling back to sd when IQR is 0.
double silverman_bandwidth(std::span<const double> x);

/// Per-group Gaussian KDE on 101 points over [-1, 1], renormalized so the
/// trapezoid integral over the grid is 1; level frequencies for categorical.
ConditionalDensity conditional_density(const Dataset& d, const std::string& attribute);

double trapezoid(std::span<const double> grid, std::span<const double> values);

// Subgroups -------------------------------------------------------------------

struct Merge {
  std::size_t left = 0;   // cluster ids: 0..n-1 leaves, n + m for merge m
  std::size_t right = 0;
  double height = 0;      // Ward distance between the merged clusters
  std::size_t size = 0;
};

/// Ward-linkage agglomerative clustering (nearest-neighbour chain) over
/// rows of the feature matrix. Merges are returned in non-decreasing height.
std::vector<Merge> ward_linkage(const std::vector<std::vector<double>>& rows);

/// Flat labels (0-based, by first occurrence) for a cut at k clusters.
std::vector<std::size_t> cut_tree(const std::vector<Merge>& merges, std::size_t n, std::size_t k);

/// Total within-cluster sum of squares.
double within_cluster_ss(const std::vector<std::vector<double>>& rows, const std::vector<std::size_t>& labels);

struct ElbowChoice {
  std::size_t k = 1;
  bool degenerate = false;
};
/// Point of maximum distance from the chord between the curve's end points;
/// curve[i] is W(i + 1).
ElbowChoice elbow(const std::vector<double>& curve);

struct AttributeGlyph {
  std::string attribute;
  double center = 0;  // mean, or ordinal score of the modal level
  double spread = 0;  // variance, or entropy of the level distribution
  std::optional<std::string> mode_level;
};

struct Subgroup {
  std::size_t id = 0;  // 1-based, by descending size
  std::vector<std::string> members;
  std::size_t size = 0;
  double group_probability = 0;  // fraction of Red members
  std::vector<AttributeGlyph> glyphs;
};

struct ClusterResult {
  std::vector<std::string> attributes;
  std::vector<Subgroup> subgroups;
  std::size_t chosen_k = 1;
  bool degenerate_elbow = false;
  std::vector<double> elbow_curve;  // W(1..k_max)
  std::vector<Merge> merges;
};

/// Feature rows: continuous values as-is, categorical as ordinal scores.
std::vector<std::vector<double>> attribute_matrix(const Dataset& d, const std::vector<std::size_t>& attributes);

ClusterResult cluster_subgroups(const Dataset& d, const std::vector<std::string>& attributes, std::size_t k_max);

// Trends ---------------------------------------------------------------------

struct TrendBundle {
  std::string instance_id;
  Group group = Group::red;
  std::vector<double> polyline;  // one value per axis, display order
  std::vector<int> bundle_ids;   // per axis; -1 on continuous axes
};

struct AxisBundle {
  int id = 0;
  std::string axis;
  std::string level;
  int parent = -1;
  std::size_t count = 0;
  std::size_t red_count = 0;
};

struct TrendResult {
  std::vector<std::string> axes;
  std::vector<TrendBundle> lines;
  std::vector<AxisBundle> bundles;
};

/// Polylines for the selected instances (all when selection is empty).
TrendResult trend(const Dataset& d, const std::vector<std::string>& attributes,
                  const std::vector<std::string>& selection = {});

// JSON ------------------------------------------------------------------------

nlohmann::json to_json(const AttributeSummary& s, const Dataset& d);
nlohmann::json to_json(const ConditionalDensity& c);
nlohmann::json to_json(const ClusterResult& r);
nlohmann::json to_json(const TrendResult& r);

}  // namespace groupscope
