#include "stockout/optimize.hpp"

#include <cmath>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

namespace stockout {

GoldenResult golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tolerance,
                                int max_evaluations) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = f(c);
  double fd = f(d);
  int evaluations = 2;
  while (b - a > tolerance && evaluations < max_evaluations) {
    // Keep the lower half on ties.
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = f(d);
    }
    ++evaluations;
  }
  if (fc >= fd) return {c, fc, evaluations};
  return {d, fd, evaluations};
}

namespace {

class NegatedObjective final : public ceres::FirstOrderFunction {
 public:
  NegatedObjective(const Objective& f, int size) : f_(f), size_(size) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Map<const Eigen::VectorXd> x(parameters, size_);
    Eigen::VectorXd g;
    const double v = f_(x, gradient ? &g : nullptr);
    if (!std::isfinite(v)) return false;
    *cost = -v;
    if (gradient) {
      if (!g.allFinite()) return false;
      Eigen::Map<Eigen::VectorXd>(gradient, size_) = -g;
    }
    return true;
  }

  int NumParameters() const override { return size_; }

 private:
  const Objective& f_;
  int size_;
};

}  // namespace

QuasiNewtonResult maximize_bfgs(const Objective& f, const Eigen::VectorXd& start, const QuasiNewtonOptions& options) {
  QuasiNewtonResult result;
  result.x = start;
  if (start.size() == 0) {
    result.value = f(start, nullptr);
    result.converged = true;
    return result;
  }
  ceres::GradientProblem problem(new NegatedObjective(f, static_cast<int>(start.size())));
  ceres::GradientProblemSolver::Options opts;
  opts.line_search_direction_type = ceres::BFGS;
  opts.max_num_iterations = options.max_iterations;
  opts.gradient_tolerance = options.gradient_tolerance;
  opts.function_tolerance = options.function_tolerance;
  opts.parameter_tolerance = options.parameter_tolerance;
  opts.logging_type = ceres::SILENT;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(opts, problem, result.x.data(), &summary);
  result.value = -summary.final_cost;
  result.iterations = static_cast<int>(summary.iterations.size());
  result.converged = summary.termination_type == ceres::CONVERGENCE;
  return result;
}

}  // namespace stockout
