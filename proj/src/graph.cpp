#include "phomo/graph.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

namespace phomo {

void FactorGraph::add_variable(const VariableKey& key, VariableValue value) {
  values_.insert(key, std::move(value));
}

void FactorGraph::add_factor(FactorPtr factor) {
  for (const auto& key : factor->keys()) {
    if (!values_.contains(key)) {
      throw Error(ErrorCode::kMissingKey,
                  std::string(factor->type_name()) + " factor references " + to_string(key));
    }
  }
  factors_.push_back(std::move(factor));
}

void FactorGraph::freeze(const VariableKey& key) {
  if (!values_.contains(key)) throw Error(ErrorCode::kMissingKey, to_string(key));
  frozen_.insert(key);
}

int FactorGraph::total_local_dim() const {
  int dim = 0;
  for (const auto& [key, value] : values_) {
    if (!is_frozen(key)) dim += local_dim(key.kind);
  }
  return dim;
}

int FactorGraph::total_residual_dim() const {
  int dim = 0;
  for (const auto& f : factors_) dim += f->dim();
  return dim;
}

Ordering Ordering::from_graph(const FactorGraph& graph) {
  Ordering ord;
  for (const auto& [key, value] : graph.values()) {
    if (graph.is_frozen(key)) continue;
    ord.offset.emplace(key, ord.dim);
    ord.dim += local_dim(key.kind);
  }
  return ord;
}

double evaluate_cost(const FactorGraph& graph, const Values& values) {
  double sum = 0.0;
  for (const auto& f : graph.factors()) {
    sum += f->linearize(values, false).squared_norm();
  }
  return 0.5 * sum;
}

double evaluate_cost(const FactorGraph& graph) {
  return evaluate_cost(graph, graph.values());
}

LinearSystem linearize(const FactorGraph& graph, const Values& values) {
  LinearSystem sys;
  sys.ordering = Ordering::from_graph(graph);
  const int n = sys.ordering.dim;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(graph.factors().size()) * 16);
  std::vector<double> residuals;
  residuals.reserve(graph.total_residual_dim());
  double sum = 0.0;
  int row = 0;
  // Factors are processed in insertion order so the assembly is
  // bitwise reproducible.
  for (const auto& f : graph.factors()) {
    const Residual res = f->linearize(values, true);
    if (res.active) {
      ++sys.active_factors;
    } else {
      ++sys.inactive_factors;
    }
    sum += res.squared_norm();
    for (const auto& block : res.jacobians) {
      auto it = sys.ordering.offset.find(block.key);
      if (it == sys.ordering.offset.end()) continue;  // frozen
      for (int c = 0; c < block.J.cols(); ++c) {
        for (int r = 0; r < block.J.rows(); ++r) {
          const double v = block.J(r, c);
          if (v != 0.0) triplets.emplace_back(row + r, it->second + c, v);
        }
      }
    }
    for (int r = 0; r < res.r.size(); ++r) residuals.push_back(res.r[r]);
    row += static_cast<int>(res.r.size());
  }
  sys.cost = 0.5 * sum;

  Eigen::SparseMatrix<double> J(row, n);
  J.setFromTriplets(triplets.begin(), triplets.end());
  const Eigen::Map<const Eigen::VectorXd> r(residuals.data(),
                                            static_cast<Eigen::Index>(residuals.size()));
  const Eigen::SparseMatrix<double> Jt = J.transpose();
  sys.hessian = Jt * J;
  sys.gradient = Jt * r;
  return sys;
}

LinearSystem linearize(const FactorGraph& graph) {
  return linearize(graph, graph.values());
}

Values retract_values(const Values& values, const Ordering& ordering,
                      const Eigen::VectorXd& delta) {
  Values out = values;
  for (const auto& [key, offset] : ordering.offset) {
    out.update(key, retract(key.kind, values.at(key),
                            delta.segment(offset, local_dim(key.kind))));
  }
  return out;
}

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kMaxIterations: return "max_iterations";
    case Termination::kStalledLambda: return "stalled_lambda";
  }
  return "unknown";
}

namespace {

// Solves (H + lambda diag(H)) dx = -g. Returns false if the damped matrix is
// not positive definite.
bool solve_damped(const LinearSystem& sys, double lambda, int dense_threshold,
                  Eigen::VectorXd* dx) {
  const int n = sys.ordering.dim;
  if (n < dense_threshold) {
    Eigen::MatrixXd H = Eigen::MatrixXd(sys.hessian);
    H.diagonal() *= (1.0 + lambda);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        !(ldlt.vectorD().minCoeff() > 0.0)) {
      return false;
    }
    *dx = ldlt.solve(-sys.gradient);
  } else {
    Eigen::SparseMatrix<double> H = sys.hessian;
    for (int k = 0; k < H.outerSize(); ++k) {
      H.coeffRef(k, k) *= (1.0 + lambda);
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                          Eigen::AMDOrdering<int>>
        ldlt(H);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
      return false;
    }
    *dx = ldlt.solve(-sys.gradient);
  }
  return dx->allFinite();
}

}  // namespace

OptimizerReport optimize_lm(FactorGraph& graph, const LMConfig& config) {
  OptimizerReport report;
  const Ordering ordering = Ordering::from_graph(graph);
  if (ordering.dim == 0) {
    throw Error(ErrorCode::kConfigError, "graph has no unfrozen variables");
  }

  Values values = graph.values();
  LinearSystem sys = linearize(graph, values);
  double cost = sys.cost;
  double lambda = config.lambda_initial;
  report.initial_cost = cost;
  report.cost_trace.push_back(cost);
  report.lambda_trace.push_back(lambda);
  report.termination = Termination::kMaxIterations;

  int iteration = 0;
  bool done = false;
  while (!done && iteration < config.max_iterations) {
    if (cost == 0.0 || sys.gradient.lpNorm<Eigen::Infinity>() < config.gradient_tolerance) {
      report.termination = Termination::kConverged;
      break;
    }
    ++iteration;
    while (true) {
      Eigen::VectorXd dx;
      if (!solve_damped(sys, lambda, config.dense_threshold, &dx)) {
        lambda *= config.lambda_factor;
        if (lambda > config.lambda_max) {
          graph.mutable_values() = values;
          throw Error(ErrorCode::kSingularSystem,
                      "damped normal equations are singular; the graph is "
                      "under-constrained (check gauge fixing and track lengths)");
        }
        continue;
      }
      Values candidate = retract_values(values, ordering, dx);
      const double new_cost = evaluate_cost(graph, candidate);
      const bool accepted = std::isfinite(new_cost) && new_cost < cost;
      report.attempts.push_back({iteration, new_cost, lambda, accepted});
      if (accepted) {
        const double rel = (cost - new_cost) / cost;
        values = std::move(candidate);
        cost = new_cost;
        lambda = std::max(lambda / config.lambda_factor, 1e-15);
        report.cost_trace.push_back(cost);
        report.lambda_trace.push_back(lambda);
        sys = linearize(graph, values);
        if (rel < config.relative_cost_tolerance) {
          report.termination = Termination::kConverged;
          done = true;
        }
        break;
      }
      // A rejected step that changes the cost by less than the tolerance
      // means we are at the floating-point floor of the optimum.
      if (std::isfinite(new_cost) &&
          std::abs(new_cost - cost) <= config.relative_cost_tolerance * cost) {
        report.termination = Termination::kConverged;
        done = true;
        break;
      }
      lambda *= config.lambda_factor;
      if (lambda > config.lambda_max) {
        report.termination = Termination::kStalledLambda;
        done = true;
        break;
      }
    }
  }

  graph.mutable_values() = values;
  report.iterations = iteration;
  report.final_cost = cost;
  report.inactive_factors = sys.inactive_factors;
  return report;
}

}  // namespace phomo
