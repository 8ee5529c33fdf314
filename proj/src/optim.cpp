#include "oam3/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <vector>

namespace oam3::optim {

LbfgsResult lbfgs_minimize(const GradFn& fg, VectorXd x0,
                           const LbfgsOptions& opts) {
  const auto n = x0.size();
  VectorXd x = std::move(x0);
  VectorXd g(n), g_new(n);
  double f = fg(x, g);

  std::deque<VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  LbfgsResult res;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (g.cwiseAbs().maxCoeff() <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    // two-loop recursion
    VectorXd q = g;
    const auto m = s_hist.size();
    std::vector<double> alpha(m);
    for (size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (m > 0) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    VectorXd d = -q;
    double dir_deriv = g.dot(d);
    if (dir_deriv >= 0.0) {  // not a descent direction; reset to steepest
      d = -g;
      dir_deriv = -g.squaredNorm();
      s_hist.clear(); y_hist.clear(); rho_hist.clear();
    }

    // backtracking Armijo
    double step = 1.0;
    const double c1 = 1e-4;
    double f_new = f;
    VectorXd x_new = x;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + step * d;
      f_new = fg(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + c1 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no progress possible in double precision; report convergence if the
      // gradient is already near the tolerance scale
      res.converged = g.cwiseAbs().maxCoeff() <= 1e3 * opts.grad_tol;
      break;
    }

    const VectorXd s = x_new - x;
    const VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.pop_front(); y_hist.pop_front(); rho_hist.pop_front();
      }
    }

    const double df = std::abs(f - f_new);
    x = std::move(x_new);
    g = g_new;
    const double f_prev = f;
    f = f_new;
    if (df <= opts.f_rel_tol * (std::abs(f_prev) + std::abs(f) + 1e-30)) {
      if (g.cwiseAbs().maxCoeff() <= 1e3 * opts.grad_tol) res.converged = true;
      ++it;
      break;
    }
  }

  res.x = std::move(x);
  res.f = f;
  res.iterations = it;
  return res;
}

SimplexResult nelder_mead_minimize(const ValueFn& f, const VectorXd& x0,
                                   const SimplexOptions& opts) {
  const auto n = x0.size();
  const int np = static_cast<int>(n) + 1;
  std::vector<VectorXd> pts(static_cast<size_t>(np), x0);
  std::vector<double> fv(static_cast<size_t>(np));
  for (int i = 0; i < static_cast<int>(n); ++i)
    pts[static_cast<size_t>(i + 1)](i) += opts.initial_step;

  int evals = 0;
  for (int i = 0; i < np; ++i) {
    fv[static_cast<size_t>(i)] = f(pts[static_cast<size_t>(i)]);
    ++evals;
  }

  std::vector<int> order(static_cast<size_t>(np));
  SimplexResult res;
  while (evals < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return fv[static_cast<size_t>(a)] < fv[static_cast<size_t>(b)];
    });
    const int best = order.front(), worst = order.back();
    const int second_worst = order[static_cast<size_t>(np - 2)];

    double spread = 0.0;
    for (int i = 1; i < np; ++i)
      spread = std::max(spread,
                        (pts[static_cast<size_t>(order[static_cast<size_t>(i)])] -
                         pts[static_cast<size_t>(best)]).cwiseAbs().maxCoeff());
    if (std::abs(fv[static_cast<size_t>(worst)] - fv[static_cast<size_t>(best)]) <=
            opts.f_tol &&
        spread <= opts.x_tol) {
      res.converged = true;
      break;
    }

    VectorXd centroid = VectorXd::Zero(n);
    for (int i = 0; i < np; ++i)
      if (i != worst) centroid += pts[static_cast<size_t>(i)];
    centroid /= double(n);

    const VectorXd xr = centroid + (centroid - pts[static_cast<size_t>(worst)]);
    const double fr = f(xr); ++evals;

    if (fr < fv[static_cast<size_t>(best)]) {
      const VectorXd xe = centroid + 2.0 * (centroid - pts[static_cast<size_t>(worst)]);
      const double fe = f(xe); ++evals;
      if (fe < fr) { pts[static_cast<size_t>(worst)] = xe; fv[static_cast<size_t>(worst)] = fe; }
      else { pts[static_cast<size_t>(worst)] = xr; fv[static_cast<size_t>(worst)] = fr; }
    } else if (fr < fv[static_cast<size_t>(second_worst)]) {
      pts[static_cast<size_t>(worst)] = xr; fv[static_cast<size_t>(worst)] = fr;
    } else {
      const VectorXd xc = centroid + 0.5 * (pts[static_cast<size_t>(worst)] - centroid);
      const double fc = f(xc); ++evals;
      if (fc < fv[static_cast<size_t>(worst)]) {
        pts[static_cast<size_t>(worst)] = xc; fv[static_cast<size_t>(worst)] = fc;
      } else {  // shrink toward best
        for (int i = 0; i < np; ++i) {
          if (i == best) continue;
          pts[static_cast<size_t>(i)] = pts[static_cast<size_t>(best)] +
              0.5 * (pts[static_cast<size_t>(i)] - pts[static_cast<size_t>(best)]);
          fv[static_cast<size_t>(i)] = f(pts[static_cast<size_t>(i)]); ++evals;
        }
      }
    }
  }

  const auto it = std::min_element(fv.begin(), fv.end());
  res.x = pts[static_cast<size_t>(std::distance(fv.begin(), it))];
  res.f = *it;
  res.evaluations = evals;
  return res;
}

LmResult levenberg_marquardt(
    const std::function<VectorXd(const VectorXd&)>& residuals,
    const std::function<Eigen::MatrixXd(const VectorXd&)>& jacobian,
    VectorXd p0, const LmOptions& opts) {
  VectorXd p = std::move(p0);
  VectorXd r = residuals(p);
  double cost = 0.5 * r.squaredNorm();
  double lambda = 1e-3;

  LmResult res;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    const Eigen::MatrixXd J = jacobian(p);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const VectorXd g = J.transpose() * r;
    if (g.cwiseAbs().maxCoeff() <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    bool stepped = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const VectorXd dp = A.ldlt().solve(-g);
      const VectorXd p_new = p + dp;
      const VectorXd r_new = residuals(p_new);
      const double cost_new = 0.5 * r_new.squaredNorm();
      if (std::isfinite(cost_new) && cost_new < cost) {
        if (dp.cwiseAbs().maxCoeff() <=
            opts.step_tol * (p.cwiseAbs().maxCoeff() + opts.step_tol)) {
          p = p_new; r = r_new; cost = cost_new;
          res.converged = true;
          stepped = true;
          break;
        }
        p = p_new; r = r_new; cost = cost_new;
        lambda = std::max(lambda * 0.3, 1e-14);
        stepped = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e14) break;
    }
    if (!stepped || res.converged) {
      if (!stepped) res.converged = g.cwiseAbs().maxCoeff() <= 1e4 * opts.grad_tol;
      break;
    }
  }

  res.p = std::move(p);
  res.cost = cost;
  res.iterations = it;
  return res;
}

}  // namespace oam3::optim
