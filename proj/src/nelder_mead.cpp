#include "nvdyn/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace nvdyn {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const NelderMeadOptions& options) {
  const Eigen::Index n = x0.size();
  NelderMeadResult result;
  auto clamp = [&](Eigen::VectorXd x) { return Eigen::VectorXd(x.cwiseMax(lower).cwiseMin(upper)); };
  auto eval = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  x0 = clamp(x0);
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd p = x0;
    // Step away from whichever bound is closer so the vertex stays distinct.
    p(i) += (upper(i) - x0(i) >= x0(i) - lower(i)) ? options.initial_step : -options.initial_step;
    pts[i + 1] = clamp(p);
  }
  for (Eigen::Index i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<int> order(n + 1);
  while (result.evaluations < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order.front(), worst = order.back(), second = order[n - 1];

    double diameter = 0.0;
    for (Eigen::Index i = 0; i <= n; ++i) diameter = std::max(diameter, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
    const double spread = std::abs(vals[worst] - vals[best]);
    if (std::isfinite(vals[worst]) &&
        (spread <= options.f_tol * std::max(std::abs(vals[best]), 1e-300) || diameter <= options.x_tol))
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i <= n; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = clamp(centroid + (centroid - pts[worst]));
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const Eigen::VectorXd xe = clamp(centroid + 2.0 * (centroid - pts[worst]));
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd xc = outside ? clamp(centroid + 0.5 * (xr - centroid))
                                       : clamp(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (Eigen::Index i = 0; i <= n; ++i) {
      if (i == best) continue;
      pts[i] = clamp(pts[best] + 0.5 * (pts[i] - pts[best]));
      vals[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  result.x = pts[static_cast<std::size_t>(it - vals.begin())];
  result.value = *it;
  return result;
}

} // namespace nvdyn
