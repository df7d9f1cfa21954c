#include "nvdyn/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nvdyn {

namespace {

void require_rate(double value, const char* name) {
  if (!std::isfinite(value) || value < 0.0)
    throw ValidationError(std::string("parameter ") + name + " must be finite and >= 0");
}

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0)
    throw ValidationError(std::string("parameter ") + name + " must be finite and > 0");
}

} // namespace

void ModelParameters::validate() const {
  // Decay rates come from finite positive lifetimes.
  require_positive(gamma_21, "gamma_21");
  require_positive(gamma_27, "gamma_27");
  require_positive(gamma_43, "gamma_43");
  require_positive(gamma_47, "gamma_47");
  require_positive(gamma_65, "gamma_65");
  require_positive(gamma_71, "gamma_71");
  require_positive(gamma_73, "gamma_73");
  require_positive(gamma_8_total, "gamma_8_total");
  require_rate(l8_ratio_42, "l8_ratio_42");
  require_rate(l8_ratio_52, "l8_ratio_52");
  require_rate(sigma_12, "sigma_12");
  require_rate(sigma_34, "sigma_34");
  require_rate(sigma_25, "sigma_25");
  require_rate(sigma_45, "sigma_45");
  require_rate(sigma_78, "sigma_78");
  require_rate(sigma_56, "sigma_56");
  require_rate(sigma_67, "sigma_67");
  require_rate(sigma_61, "sigma_61");
  require_rate(sigma_63, "sigma_63");
  require_rate(kappa_readout, "kappa_readout");
  require_rate(kappa_init, "kappa_init");
  if (!std::isfinite(beta) || beta < 0.0 || beta > 1.0)
    throw ValidationError("parameter beta must lie in [0, 1]");
  const double scale = std::max({std::abs(sigma_25), std::abs(sigma_45), 1e-300});
  if (std::abs(sigma_25 - sigma_45) > 1e-12 * scale)
    throw ValidationError("sigma_2_5 and sigma_4_5 must be equal");
}

ModelParameters ModelParameters::reference() {
  ModelParameters p;
  p.uncertainties = {
      {"lifetime_2_7_ns", 0.8},  {"lifetime_4_7_ns", 0.06},   {"lifetime_7_1_ns", 0.24},
      {"lifetime_7_3_ns", 57.0}, {"sigma_2_5", 0.004},        {"sigma_4_5", 0.004},
      {"sigma_7_8", 0.0003},     {"sigma_5_6", 0.007},        {"sigma_6_7", 0.01},
      {"sigma_6_1", 0.007},      {"sigma_6_3", 0.2},          {"ratio_8_4_over_8_2", 1.6},
      {"kappa_readout_mhz_per_mw", 0.3}, {"kappa_init_mhz_per_mw", 0.2},
  };
  return p;
}

void LaserDrive::validate() const {
  if (!std::isfinite(p_readout) || p_readout < 0.0 || !std::isfinite(p_init) || p_init < 0.0)
    throw ValidationError("laser powers must be finite and >= 0");
}

double pump_rate(const ModelParameters& params, const LaserDrive& drive) {
  return params.kappa_readout * drive.p_readout + params.kappa_init * drive.p_init;
}

RateGenerator::RateGenerator(const Matrix8& matrix) : matrix_(matrix) {
  if (!matrix_.allFinite()) throw ValidationError("generator has non-finite entries");
  for (int i = 0; i < kLevels; ++i) {
    double outflow = 0.0;
    for (int j = 0; j < kLevels; ++j) {
      if (i == j) continue;
      if (matrix_(j, i) < 0.0) throw ValidationError("generator has a negative off-diagonal rate");
      outflow += matrix_(j, i);
    }
    if (std::abs(outflow + matrix_(i, i)) > 1e-12 * std::max(outflow, 1.0))
      throw ValidationError("generator column does not sum to zero");
  }
}

RateGenerator build_generator(const ModelParameters& params, const LaserDrive& drive) {
  params.validate();
  drive.validate();

  Matrix8 m = Matrix8::Zero();
  auto add = [&m](Level from, Level to, double rate) {
    m(to, from) += rate;
    m(from, from) -= rate;
  };

  const double pump = pump_rate(params, drive);
  if (pump > 0.0) {
    add(L1, L2, pump * params.sigma_12);
    add(L3, L4, pump * params.sigma_34);
    add(L2, L5, pump * params.sigma_25);
    add(L4, L5, pump * params.sigma_45);
    add(L5, L6, pump * params.sigma_56);
    add(L6, L1, pump * params.sigma_61);
    add(L6, L3, pump * params.sigma_63);
    add(L6, L7, pump * params.sigma_67);
    add(L7, L8, pump * params.sigma_78);
  }

  add(L2, L1, params.gamma_21);
  add(L2, L7, params.gamma_27);
  add(L4, L3, params.gamma_43);
  add(L4, L7, params.gamma_47);
  add(L6, L5, params.gamma_65);
  add(L7, L1, params.gamma_71);
  add(L7, L3, params.gamma_73);

  // L8 total rate split as 1 : r42 : r52 into L2, L4, L5.
  const double gamma_82 = params.gamma_8_total / (1.0 + params.l8_ratio_42 + params.l8_ratio_52);
  add(L8, L2, gamma_82);
  add(L8, L4, gamma_82 * params.l8_ratio_42);
  add(L8, L5, gamma_82 * params.l8_ratio_52);

  return RateGenerator(m);
}

BranchChannel parse_branch_channel(std::string_view name) {
  if (name == "R71") return BranchChannel::R71;
  if (name == "R73") return BranchChannel::R73;
  if (name == "R27") return BranchChannel::R27;
  if (name == "R47") return BranchChannel::R47;
  if (name == "R21") return BranchChannel::R21;
  if (name == "R43") return BranchChannel::R43;
  throw ValidationError("unknown branching channel '" + std::string(name) + "'");
}

double branching_ratio(const ModelParameters& params, BranchChannel channel) {
  params.validate();
  const auto& p = params;
  switch (channel) {
  case BranchChannel::R71: return p.gamma_71 / (p.gamma_71 + p.gamma_73);
  case BranchChannel::R73: return p.gamma_73 / (p.gamma_71 + p.gamma_73);
  case BranchChannel::R27: return p.gamma_27 / (p.gamma_21 + p.gamma_27);
  case BranchChannel::R21: return p.gamma_21 / (p.gamma_21 + p.gamma_27);
  case BranchChannel::R47: return p.gamma_47 / (p.gamma_43 + p.gamma_47);
  case BranchChannel::R43: return p.gamma_43 / (p.gamma_43 + p.gamma_47);
  }
  throw ValidationError("unknown branching channel");
}

double max_spin_polarization(const ModelParameters& params) {
  const double r27 = branching_ratio(params, BranchChannel::R27);
  const double r47 = branching_ratio(params, BranchChannel::R47);
  return 1.0 / (1.0 + r27 * params.gamma_73 / (r47 * params.gamma_71));
}

} // namespace nvdyn
