#pragma once

// Central finite differences of a factor's residual under manifold
// perturbations, compared block-by-block against the analytic Jacobians.

#include <algorithm>

#include <Eigen/Core>

#include "phomo/factors.hpp"

namespace phomo::check {

struct JacobianCheck {
  bool active = false;
  /// Worst block error |J - J_fd|_F / max(|J_fd|_F, 1e-3 |J_fd_all|_F).
  double max_relative_error = 0.0;
  VariableKey worst_key;
};

inline Eigen::MatrixXd numeric_block(const Factor& factor, const Values& values,
                                     const VariableKey& key, double step) {
  const int d = local_dim(key.kind);
  Eigen::MatrixXd J(factor.dim(), d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(d);
    delta[i] = step;
    Values plus = values;
    Values minus = values;
    plus.update(key, retract(key.kind, values.at(key), delta));
    minus.update(key, retract(key.kind, values.at(key), -delta));
    J.col(i) = (factor.linearize(plus, false).r - factor.linearize(minus, false).r) /
               (2.0 * step);
  }
  return J;
}

inline JacobianCheck check_jacobians(const Factor& factor, const Values& values,
                                     double step = 1e-6) {
  JacobianCheck out;
  const Residual res = factor.linearize(values, true);
  out.active = res.active;
  if (!res.active) return out;

  std::vector<Eigen::MatrixXd> numeric;
  double total = 0.0;
  for (const auto& block : res.jacobians) {
    numeric.push_back(numeric_block(factor, values, block.key, step));
    total += numeric.back().squaredNorm();
  }
  const double floor = 1e-3 * std::sqrt(total);
  for (std::size_t b = 0; b < res.jacobians.size(); ++b) {
    const double denom = std::max({numeric[b].norm(), floor, 1e-12});
    const double err = (res.jacobians[b].J - numeric[b]).norm() / denom;
    if (err > out.max_relative_error) {
      out.max_relative_error = err;
      out.worst_key = res.jacobians[b].key;
    }
  }
  return out;
}

}  // namespace phomo::check
