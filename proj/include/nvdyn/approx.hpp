#pragma once

#include "nvdyn/rate_model.hpp"

#include <string>
#include <vector>

namespace nvdyn {

// Low-power closed forms. `pump` is the effective pump rate P in 1/ns, the
// factor multiplying every cross section (see pump_rate()); it is not a
// laser power in mW.

/// NV- -> NV0 from m_s = 0: P^2 s12 s25 / (G21 + G27).
double ionization_rate_lowpower(const ModelParameters& params, double pump);

/// Spin polarization: P s12 R47 R71.
double polarization_rate_lowpower(const ModelParameters& params, double pump);

/// NV0 -> NV-: P^2 s56 (s61 + s63 + s67) / G65. Every channel out of L6 that
/// ends in NV- counts.
double recapture_rate_lowpower(const ModelParameters& params, double pump);

/// Singlet-route-only variant P^2 s56 s67 / G65.
double recapture_rate_singlet_only(const ModelParameters& params, double pump);

/// True when P s25 << G21 + G27 (ratio below `margin`).
bool in_lowpower_regime(const ModelParameters& params, double pump, double margin = 0.05);

/// Rate extracted from the full model by a single-exponential fit to the slow
/// tail of a population deviation.
struct OracleRate {
  double rate = 0.0;       // 1/ns
  double total_rate = 0.0; // fitted decay constant k of the deviation
  double asymptote = 0.0;  // limit of the tracked population
  double fit_start = 0.0;  // ns
  double fit_end = 0.0;    // ns
  int fit_points = 0;
};

/// Charge channel: start in L1, track NV0 = L5 + L6. With f(t) -> f_inf at
/// rate k, ionization = k f_inf and recapture = k (1 - f_inf).
OracleRate oracle_ionization_rate(const ModelParameters& params, const LaserDrive& drive);
OracleRate oracle_recapture_rate(const ModelParameters& params, const LaserDrive& drive);

/// Spin channel: start in L3, track the m_s = +-1 share (L3 + L4) of NV-;
/// polarization = k (1 - s_inf).
OracleRate oracle_polarization_rate(const ModelParameters& params, const LaserDrive& drive);

struct ApproxCheckRow {
  double power_mw = 0.0;
  double pump = 0.0;
  std::string channel;
  double approx = 0.0;
  double oracle = 0.0;
  double relative_error = 0.0;
};

/// One row per (power, channel) with channels ionization, polarization,
/// recapture. `on_init_laser` selects which laser carries the power.
std::vector<ApproxCheckRow> approx_check(const ModelParameters& params, const std::vector<double>& powers_mw,
                                         bool on_init_laser = true);

std::string format_approx_csv(const std::vector<ApproxCheckRow>& rows);

} // namespace nvdyn
