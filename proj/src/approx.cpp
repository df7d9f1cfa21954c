#include "nvdyn/approx.hpp"

#include "nvdyn/dynamics.hpp"
#include "nvdyn/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <functional>
#include <limits>

namespace nvdyn {

namespace {

void check_pump(double pump) {
  if (!std::isfinite(pump) || pump < 0.0) throw ValidationError("pump rate must be finite and >= 0");
}

constexpr int kSamples = 3000;
constexpr double kOpticalLifetime = 13.0; // ns, fastest bright decay

// Slowest nonzero relaxation rate of the generator.
double slowest_rate(const Matrix8& m) {
  const Eigen::EigenSolver<Matrix8> es(m, false);
  const double scale = m.cwiseAbs().maxCoeff();
  double slow = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kLevels; ++i) {
    const double re = -es.eigenvalues()(i).real();
    if (re > 1e-12 * scale) slow = std::min(slow, re);
  }
  if (!std::isfinite(slow)) throw NumericalError("generator has no decaying mode");
  return slow;
}

OracleRate fit_tail(const ModelParameters& params, const LaserDrive& drive, Level start,
                    const std::function<double(const Vector8&)>& observable) {
  const RateGenerator gen = build_generator(params, drive);
  const Matrix8& m = gen.matrix();
  const double limit = observable(steady_state(gen).vector());
  const double t_end = std::log(1e3) / slowest_rate(m);

  const Vector8 v0 = Vector8::Unit(start);
  const double d0 = observable(v0) - limit;
  if (std::abs(d0) < 1e-14) throw NumericalError("tracked population starts at its limit");

  const double t_min = 10.0 * kOpticalLifetime;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  OracleRate r;
  r.asymptote = limit;
  r.fit_start = -1.0;
  const double log_lo = std::log(1.0), log_hi = std::log(std::max(t_end, 2.0));
  for (int i = 0; i < kSamples; ++i) {
    const double t = std::exp(log_lo + (log_hi - log_lo) * i / (kSamples - 1));
    if (t < t_min) continue;
    const Vector8 v = linalg::transition_matrix(m, t) * v0;
    const double d = (observable(v) - limit) / d0;
    if (d > 0.5) continue;
    if (d < 0.01) break;
    if (r.fit_start < 0.0) r.fit_start = t;
    r.fit_end = t;
    const double y = std::log(d);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    ++r.fit_points;
  }
  if (r.fit_points < 3) throw NumericalError("too few samples in the slow tail to fit a rate");
  const double n = r.fit_points;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  r.total_rate = -slope;
  return r;
}

double nv0(const Vector8& v) { return v(L5) + v(L6); }
// m_s = +-1 share of NV-, insensitive to the much slower charge conversion.
double ms1(const Vector8& v) {
  return (v(L3) + v(L4)) / (v(L1) + v(L2) + v(L3) + v(L4) + v(L7) + v(L8));
}

} // namespace

double ionization_rate_lowpower(const ModelParameters& params, double pump) {
  check_pump(pump);
  return pump * pump * params.sigma_12 * params.sigma_25 / (params.gamma_21 + params.gamma_27);
}

double polarization_rate_lowpower(const ModelParameters& params, double pump) {
  check_pump(pump);
  return pump * params.sigma_12 * branching_ratio(params, BranchChannel::R47) *
         branching_ratio(params, BranchChannel::R71);
}

double recapture_rate_lowpower(const ModelParameters& params, double pump) {
  check_pump(pump);
  return pump * pump * params.sigma_56 * (params.sigma_61 + params.sigma_63 + params.sigma_67) / params.gamma_65;
}

double recapture_rate_singlet_only(const ModelParameters& params, double pump) {
  check_pump(pump);
  return pump * pump * params.sigma_56 * params.sigma_67 / params.gamma_65;
}

bool in_lowpower_regime(const ModelParameters& params, double pump, double margin) {
  check_pump(pump);
  return pump * params.sigma_25 < margin * (params.gamma_21 + params.gamma_27);
}

OracleRate oracle_ionization_rate(const ModelParameters& params, const LaserDrive& drive) {
  OracleRate r = fit_tail(params, drive, L1, nv0);
  r.rate = r.total_rate * r.asymptote;
  return r;
}

OracleRate oracle_recapture_rate(const ModelParameters& params, const LaserDrive& drive) {
  OracleRate r = fit_tail(params, drive, L1, nv0);
  r.rate = r.total_rate * (1.0 - r.asymptote);
  return r;
}

OracleRate oracle_polarization_rate(const ModelParameters& params, const LaserDrive& drive) {
  OracleRate r = fit_tail(params, drive, L3, ms1);
  r.rate = r.total_rate * (1.0 - r.asymptote);
  return r;
}

std::vector<ApproxCheckRow> approx_check(const ModelParameters& params, const std::vector<double>& powers_mw,
                                         bool on_init_laser) {
  std::vector<ApproxCheckRow> rows;
  for (double p : powers_mw) {
    if (!(p > 0.0)) throw ValidationError("approx-check powers must be > 0");
    const LaserDrive drive = on_init_laser ? LaserDrive{0.0, p} : LaserDrive{p, 0.0};
    const double pump = pump_rate(params, drive);
    const OracleRate charge = fit_tail(params, drive, L1, nv0);
    const OracleRate spin = oracle_polarization_rate(params, drive);
    auto add = [&](const char* name, double approx, double oracle) {
      rows.push_back({p, pump, name, approx, oracle, (approx - oracle) / oracle});
    };
    add("ionization", ionization_rate_lowpower(params, pump), charge.total_rate * charge.asymptote);
    add("polarization", polarization_rate_lowpower(params, pump), spin.rate);
    add("recapture", recapture_rate_lowpower(params, pump), charge.total_rate * (1.0 - charge.asymptote));
  }
  return rows;
}

std::string format_approx_csv(const std::vector<ApproxCheckRow>& rows) {
  std::string out = "power_mw,pump_per_ns,channel,approx_rate_per_ns,oracle_rate_per_ns,relative_error\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.8g,%.8g,%s,%.8g,%.8g,%.6g\n", r.power_mw, r.pump, r.channel.c_str(), r.approx,
                  r.oracle, r.relative_error);
    out += buf;
  }
  return out;
}

} // namespace nvdyn
