#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "planopt/autodiff.hpp"

namespace planopt::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  int entries_checked = 0;
  std::string worst;  // "param 2 entry (1,3)" for diagnostics
};

/// Central-finite-difference check of reverse-mode gradients.
///
/// `build_loss` must construct a fresh graph over the current parameter
/// values and return the scalar loss node; it runs once for the analytic
/// gradients and twice per checked entry for the numeric ones.  Relative
/// error uses a small absolute floor so near-zero gradients compare sanely.
inline GradCheckResult gradcheck(const std::vector<ad::Param*>& params,
                                 const std::function<ad::NodeId(ad::Graph&)>& build_loss,
                                 double step = 1e-5, int max_entries_per_param = -1) {
  for (ad::Param* p : params) p->zero_grad();
  {
    ad::Graph g;
    const ad::NodeId loss = build_loss(g);
    g.backward(loss);
  }
  std::vector<ad::Tensor> analytic;
  analytic.reserve(params.size());
  for (ad::Param* p : params) analytic.push_back(p->grad);

  GradCheckResult result;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    ad::Param& p = *params[pi];
    const size_t n = p.value.count();
    const size_t stride =
        (max_entries_per_param > 0 && n > static_cast<size_t>(max_entries_per_param))
            ? (n + static_cast<size_t>(max_entries_per_param) - 1) /
                  static_cast<size_t>(max_entries_per_param)
            : 1;
    for (size_t i = 0; i < n; i += stride) {
      const double saved = p.value.v[i];

      p.value.v[i] = saved + step;
      ad::Graph gp;
      const double up = gp.value(build_loss(gp)).v[0];

      p.value.v[i] = saved - step;
      ad::Graph gm;
      const double down = gm.value(build_loss(gm)).v[0];

      p.value.v[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double exact = analytic[pi].v[i];
      const double rel =
          std::fabs(numeric - exact) / std::max({std::fabs(numeric), std::fabs(exact), 1e-6});
      ++result.entries_checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = "param " + std::to_string(pi) + " entry " + std::to_string(i) +
                       " analytic " + std::to_string(exact) + " numeric " +
                       std::to_string(numeric);
      }
    }
    p.zero_grad();
  }
  return result;
}

}  // namespace planopt::testing
