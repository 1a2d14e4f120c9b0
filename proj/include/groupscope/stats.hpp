#pragma once

#include <span>
#include <vector>

namespace groupscope::stats {

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator); 0 for fewer than two values.
double sample_variance(std::span<const double> x);
/// Population variance (n denominator).
double population_variance(std::span<const double> x);
double median(std::vector<double> x);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> x, double q);
/// Pearson correlation; 0 when either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace groupscope::stats
