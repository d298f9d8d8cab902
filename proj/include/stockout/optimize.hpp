#pragma once

#include <functional>

#include <Eigen/Core>

namespace stockout {

struct GoldenResult {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section maximization of a unimodal f on [lo, hi], stopping when
/// the bracket is narrower than `tolerance`. On exact ties the lower point
/// wins, so the search is deterministic.
GoldenResult golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tolerance,
                                int max_evaluations = 200);

struct QuasiNewtonOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-9;
  double function_tolerance = 1e-15;
  double parameter_tolerance = 1e-14;
};

struct QuasiNewtonResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Value at x; fills *gradient when non-null. A non-finite value marks x as
/// outside the domain and makes the line search step back.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* gradient)>;

/// BFGS maximization (Ceres line-search solver on -f).
QuasiNewtonResult maximize_bfgs(const Objective& f, const Eigen::VectorXd& start, const QuasiNewtonOptions& options);

}  // namespace stockout
