#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "groupscope/multitask_model.hpp"

namespace oracle {

struct GradCheck {
  double worst_relative = 0;
  std::string worst_tensor;
  std::size_t entries = 0;
};

/// Central finite differences over every parameter entry. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline GradCheck gradient_check(const groupscope::ModelParams& p, const groupscope::EmbeddedSequence& x,
                                groupscope::Group label, const groupscope::AttributeValue& target, double lambda,
                                double step = 1e-5, double floor = 1e-5) {
  using namespace groupscope;
  const auto grad = backward(p, x, label, target, lambda);
  std::vector<const Eigen::MatrixXd*> analytic;
  grad.visit([&](auto&&, const Eigen::MatrixXd& m) { analytic.push_back(&m); });

  GradCheck out;
  ModelParams q = p;
  std::size_t tensor = 0;
  q.visit([&](auto&& name, Eigen::MatrixXd& m) {
    const auto& g = *analytic[tensor++];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m.data()[i];
      m.data()[i] = orig + step;
      const double up = loss(forward(q, x), label, target, lambda);
      m.data()[i] = orig - step;
      const double down = loss(forward(q, x), label, target, lambda);
      m.data()[i] = orig;
      const double numeric = (up - down) / (2 * step);
      const double a = g.data()[i];
      const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), floor});
      ++out.entries;
      if (rel > out.worst_relative) {
        out.worst_relative = rel;
        out.worst_tensor = name;
      }
    }
  });
  return out;
}

}  // namespace oracle
