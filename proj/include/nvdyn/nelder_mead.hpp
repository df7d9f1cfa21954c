#pragma once

#include <Eigen/Dense>

#include <functional>

namespace nvdyn {

struct NelderMeadOptions {
  int max_evaluations = 400;
  double initial_step = 0.3; // simplex edge in each coordinate
  double f_tol = 1e-9;       // relative spread of simplex values
  double x_tol = 1e-6;       // simplex diameter
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

/// Box-constrained Nelder-Mead. Trial points are clamped into [lower, upper].
/// The objective may return +inf for rejected points.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const NelderMeadOptions& options = {});

} // namespace nvdyn
