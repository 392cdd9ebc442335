#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "phomo/factors.hpp"
#include "phomo/values.hpp"

namespace phomo {

/// Variables, factors and the set of frozen (gauge-fixed) variables.
class FactorGraph {
 public:
  /// Throws DuplicateKey.
  void add_variable(const VariableKey& key, VariableValue value);
  /// Throws MissingKey if the factor references an unknown variable.
  void add_factor(FactorPtr factor);
  template <typename F, typename... Args>
  void emplace_factor(Args&&... args) {
    add_factor(std::make_shared<const F>(std::forward<Args>(args)...));
  }
  void freeze(const VariableKey& key);
  bool is_frozen(const VariableKey& key) const { return frozen_.count(key) != 0; }

  const Values& values() const { return values_; }
  Values& mutable_values() { return values_; }
  const std::vector<FactorPtr>& factors() const { return factors_; }

  std::size_t num_variables() const { return values_.size(); }
  /// Sum of local dimensions over unfrozen variables.
  int total_local_dim() const;
  /// Sum of residual dimensions over all factors.
  int total_residual_dim() const;

 private:
  Values values_;
  std::vector<FactorPtr> factors_;
  std::set<VariableKey> frozen_;
};

/// Column layout of the unfrozen variables, ordered by VariableKey.
struct Ordering {
  std::map<VariableKey, int> offset;
  int dim = 0;

  static Ordering from_graph(const FactorGraph& graph);
};

/// Gauss-Newton normal equations H dx = -g with H = J^T J and g = J^T r.
struct LinearSystem {
  Ordering ordering;
  Eigen::SparseMatrix<double> hessian;  // full symmetric storage
  Eigen::VectorXd gradient;
  double cost = 0.0;
  int active_factors = 0;
  int inactive_factors = 0;
};

/// 1/2 sum over active factors of |r|^2.
double evaluate_cost(const FactorGraph& graph);
double evaluate_cost(const FactorGraph& graph, const Values& values);

/// Assembles the normal equations over active factors. Frozen variables are
/// left out of the system.
LinearSystem linearize(const FactorGraph& graph);
LinearSystem linearize(const FactorGraph& graph, const Values& values);

/// Applies a stacked tangent step to every unfrozen variable.
Values retract_values(const Values& values, const Ordering& ordering,
                      const Eigen::VectorXd& delta);

struct LMConfig {
  int max_iterations = 100;
  double lambda_initial = 1e-4;
  double lambda_factor = 10.0;
  double lambda_max = 1e12;
  double relative_cost_tolerance = 1e-8;
  double gradient_tolerance = 1e-10;
  /// Systems at or above this many unknowns use the sparse factorization.
  int dense_threshold = 2000;
};

enum class Termination { kConverged, kMaxIterations, kStalledLambda };
std::string_view termination_name(Termination t);

struct TraceEntry {
  int iteration = 0;
  double cost = 0.0;
  double lambda = 0.0;
  bool accepted = false;
};

struct OptimizerReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  /// Cost at start followed by the cost after each accepted step.
  std::vector<double> cost_trace;
  std::vector<double> lambda_trace;
  /// Every attempted step, accepted or not.
  std::vector<TraceEntry> attempts;
  Termination termination = Termination::kMaxIterations;
  int inactive_factors = 0;
};

/// Levenberg-Marquardt with multiplicative (Marquardt) damping of the
/// Hessian diagonal. Optimizes graph values in place.
/// Throws SingularSystem if the damped system cannot be factored even at
/// lambda_max.
OptimizerReport optimize_lm(FactorGraph& graph, const LMConfig& config = {});

}  // namespace phomo
