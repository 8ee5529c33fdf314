#pragma once
/*
 * Small dense optimizers used across the library:
 *   - L-BFGS with backtracking Armijo line search (likelihood maximization)
 *   - Nelder-Mead simplex (low-dimensional derivative-free refinement)
 *   - Levenberg-Marquardt (nonlinear least squares, analytic Jacobian)
 *
 * All three are deterministic given their inputs.
 */

#include <Eigen/Dense>

#include <functional>

namespace oam3::optim {

using Eigen::VectorXd;

/// Objective with gradient: returns f(x) and fills grad (same size as x).
using GradFn = std::function<double(const VectorXd& x, VectorXd& grad)>;
using ValueFn = std::function<double(const VectorXd& x)>;

struct LbfgsOptions {
  int max_iterations = 2000;
  double grad_tol = 1e-8;      // max-norm of gradient
  double f_rel_tol = 1e-13;    // relative objective change
  int history = 8;
};

struct LbfgsResult {
  VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

LbfgsResult lbfgs_minimize(const GradFn& fg, VectorXd x0,
                           const LbfgsOptions& opts = {});

struct SimplexOptions {
  int max_evaluations = 6000;
  double x_tol = 1e-10;
  double f_tol = 1e-13;
  double initial_step = 0.5;
};

struct SimplexResult {
  VectorXd x;
  double f = 0.0;
  int evaluations = 0;
  bool converged = false;
};

SimplexResult nelder_mead_minimize(const ValueFn& f, const VectorXd& x0,
                                   const SimplexOptions& opts = {});

struct LmOptions {
  int max_iterations = 200;
  double grad_tol = 1e-12;
  double step_tol = 1e-14;
};

struct LmResult {
  VectorXd p;
  double cost = 0.0;  // 0.5 * sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

/// residuals(p) -> r; jacobian(p) -> J with J(i, k) = dr_i/dp_k.
LmResult levenberg_marquardt(
    const std::function<VectorXd(const VectorXd&)>& residuals,
    const std::function<Eigen::MatrixXd(const VectorXd&)>& jacobian,
    VectorXd p0, const LmOptions& opts = {});

}  // namespace oam3::optim
