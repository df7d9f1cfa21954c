#pragma once

#include "nvdyn/nelder_mead.hpp"
#include "nvdyn/readout.hpp"

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nvdyn {

enum class ProtocolKind { RPI, SPI, TPI };

std::string to_string(ProtocolKind kind);
ProtocolKind parse_protocol_kind(std::string_view name);

/// Initialization protocol. Readout runs on the readout laser, the high and
/// low pulses on the init laser. Fields a kind does not use must be zero.
struct ProtocolSpec {
  ProtocolKind kind = ProtocolKind::RPI;
  double p_r = 0.0, tau_r = 0.0; // readout, mW / ns
  double p_h = 0.0, tau_h = 0.0; // high pulse (TPI)
  double p_l = 0.0, tau_l = 0.0; // low pulse (SPI, TPI)
  double tau_p = 0.0;            // trailing pause

  void validate() const;
  /// tau_I = tau_r + tau_h + tau_l + tau_p
  double init_time() const { return tau_r + tau_h + tau_l + tau_p; }
  std::vector<std::string> warnings() const;

  static ProtocolSpec rpi(double p_r, double tau_r, double tau_p = 0.0);
  static ProtocolSpec spi(double p_r, double tau_r, double p_l, double tau_l, double tau_p);
  static ProtocolSpec tpi(double p_r, double tau_r, double p_h, double tau_h, double p_l, double tau_l,
                          double tau_p);
};

/// [readout] [high] [low] [pause], skipping zero-length segments. Segment 0 is
/// the tagged readout segment.
PulseSequence build_protocol_sequence(const ProtocolSpec& spec);

struct InitializationCheck {
  bool initialized = false;
  double spread = 0.0;          // max L-infinity distance between final states
  PopulationState final_state;  // mean over the eight basis-state starts
};

/// Runs the protocol once from every basis state.
InitializationCheck is_initialized(const ProtocolSpec& spec, const ModelParameters& params, double tol = 1e-3);

struct InitializationError {
  double spin = 0.0;   // L3
  double charge = 0.0; // L5
  double total = 0.0;
};

/// Errors of a relaxed state; states with excited or singlet population are
/// relaxed first.
InitializationError initialization_error(const PopulationState& state, const ModelParameters& params);

struct SensitivityConfig {
  double t2_star = 1.0e5;             // ns
  double collection_efficiency = 1.0; // detected per emitted photon
  double sample_dt = 1.0;             // readout sampling, ns
  double init_tol = 1e-3;
  bool require_initialized = true;

  void validate() const;
};

enum class SensitivityStatus { Ok, NotInitialized, OutOfRange };

struct SensitivityResult {
  double eta = std::numeric_limits<double>::infinity();
  SensitivityStatus status = SensitivityStatus::OutOfRange;
  double tau_i = 0.0;
  double photons = 0.0; // N
  double c_opt = 0.0;
  ReadoutOptimum readout;
  InitializationCheck init;

  bool ok() const { return status == SensitivityStatus::Ok; }
};

/// eta = sqrt(tau_I + tau_M) / sqrt(N) / C_opt / tau_M * exp(tau_M / T2*).
/// The initialized state dephases in the dark for tau_M, is optionally
/// pi-rotated, and is read out; C_opt and N come from the best-SNR window with
/// N = collection_efficiency * (S0 + S1) / 2.
SensitivityResult sensitivity(const ProtocolSpec& spec, const ModelParameters& params,
                              const SensitivityConfig& cfg, double tau_m);

/// eta_b^2 / eta_a^2, i.e. T_b / T_a. Throws NumericalError unless both
/// evaluations are Ok.
double speedup(const ProtocolSpec& a, const ProtocolSpec& b, const ModelParameters& params,
               const SensitivityConfig& cfg, double tau_m);

struct SearchRange {
  double lo = 0.0, hi = 0.0;
};

struct ProtocolBounds {
  SearchRange p_r{0.1, 3.0};
  SearchRange tau_r{50.0, 5000.0};
  SearchRange p_h{1.0, 50.0};
  SearchRange tau_h{5.0, 500.0};
  SearchRange p_l{1e-3, 1.0};
  SearchRange tau_l{10.0, 2.0e5};
  SearchRange tau_p{1.0, 3000.0};
  std::optional<double> fixed_p_r;
  std::optional<double> fixed_p_h = 30.0;
  std::optional<double> fixed_tau_h = 20.0;
  std::optional<double> fixed_p_l;
  int grid_points = 3; // per free coordinate, log-spaced
  int starts = 4;      // simplex runs from the best grid points
  NelderMeadOptions simplex{};

  void validate() const;
};

struct OptimizedProtocol {
  ProtocolSpec spec;
  SensitivityResult result;
  int evaluations = 0;
};

/// Multi-start simplex search for the smallest eta among initialized
/// protocols. Deterministic; NumericalError when nothing feasible is found.
OptimizedProtocol optimize_protocol(ProtocolKind kind, const ModelParameters& params,
                                    const SensitivityConfig& cfg, double tau_m,
                                    const ProtocolBounds& bounds = {});

struct SpeedupRow {
  double tau_m = 0.0;
  OptimizedProtocol rpi, spi, tpi;
  double t_spi_over_rpi = 0.0; // eta_SPI^2 / eta_RPI^2
  double t_tpi_over_rpi = 0.0;
};

struct SpeedupReport {
  std::vector<SpeedupRow> rows;
};

SpeedupReport speedup_sweep(const std::vector<double>& tau_m_grid, const ModelParameters& params,
                            const SensitivityConfig& cfg, const ProtocolBounds& bounds = {});

std::string format_speedup_csv(const SpeedupReport& report);

/// Sweep specification file (key = value):
///   tau_m_ns = 500:1e5:20:log        grid spec, required for sweeps
///   kinds = rpi,spi,tpi
///   t2_star_ns, collection_efficiency, init_tol
///   p_r_mw = 0.1:3   (likewise tau_r_ns, p_h_mw, tau_h_ns, p_l_mw, tau_l_ns, tau_p_ns)
///   fixed_p_r_mw, fixed_p_h_mw, fixed_tau_h_ns, fixed_p_l_mw = <value> | free
///   grid_points, starts, max_evaluations
struct SweepSpec {
  std::vector<double> tau_m_grid;
  std::vector<ProtocolKind> kinds{ProtocolKind::RPI, ProtocolKind::SPI, ProtocolKind::TPI};
  SensitivityConfig sensitivity;
  ProtocolBounds bounds;
};

SweepSpec parse_sweep_spec(const std::string& text, const std::string& source = "<string>");
std::string format_speedup_summary(const SpeedupReport& report);

} // namespace nvdyn
