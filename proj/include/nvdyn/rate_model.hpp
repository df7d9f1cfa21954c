#pragma once

#include "nvdyn/types.hpp"

#include <map>
#include <string>
#include <string_view>

namespace nvdyn {

/// Rates and cross sections of the eight-level charge/spin model.
///
/// Internal units: time in ns, rates in 1/ns, laser power in mW. Cross
/// sections are normalized so that sigma_12 = sigma_34 = 1; only the products
/// kappa * sigma are physical. kappa values are stored in 1/(ns mW).
struct ModelParameters {
  double gamma_21 = 1.0 / 13.0;
  double gamma_27 = 1.0 / 93.5;
  double gamma_43 = 1.0 / 13.0;
  double gamma_47 = 1.0 / 14.98;
  double gamma_65 = 1.0 / 20.0;
  double gamma_71 = 1.0 / 186.12;
  double gamma_73 = 1.0 / 2722.0;
  double gamma_8_total = 1.0 / 0.2;
  double l8_ratio_42 = 2.7; // Gamma_84 / Gamma_82
  double l8_ratio_52 = 0.0; // Gamma_85 / Gamma_82

  double sigma_12 = 1.0;
  double sigma_34 = 1.0;
  double sigma_25 = 0.237;
  double sigma_45 = 0.237;
  double sigma_78 = 0.0059;
  double sigma_56 = 0.562;
  double sigma_67 = 0.15;
  double sigma_61 = 0.281;
  double sigma_63 = 0.3;

  double kappa_readout = 35.0e-3; // 35 MHz/mW
  double kappa_init = 25.0e-3;    // 25 MHz/mW

  double beta = 0.6; // NV0 detection weight relative to NV-

  // Optional reported uncertainties keyed by parameter-file name, in file
  // units. Never used by the simulation.
  std::map<std::string, double> uncertainties;

  /// Throws ValidationError on negative or non-finite entries, beta outside
  /// [0, 1], or sigma_25 != sigma_45 beyond 1e-12 relative.
  void validate() const;

  /// Reference parameter set, uncertainties included.
  static ModelParameters reference();
};

/// Two independently powered lasers, each in mW.
struct LaserDrive {
  double p_readout = 0.0;
  double p_init = 0.0;

  void validate() const;
  bool is_dark() const { return p_readout == 0.0 && p_init == 0.0; }
};

/// Total optical pump rate (1/ns) multiplying every cross section.
double pump_rate(const ModelParameters& params, const LaserDrive& drive);

/// Column-convention generator: entry (j, i) is the rate of Li -> Lj and each
/// column sums to zero, so populations evolve as dL/dt = M L.
class RateGenerator {
public:
  RateGenerator() : matrix_(Matrix8::Zero()) {}
  /// Checks the generator invariants; throws ValidationError if violated.
  explicit RateGenerator(const Matrix8& matrix);

  const Matrix8& matrix() const { return matrix_; }
  double rate(Level from, Level to) const { return matrix_(to, from); }

private:
  Matrix8 matrix_;
};

RateGenerator build_generator(const ModelParameters& params, const LaserDrive& drive);

enum class BranchChannel { R71, R73, R27, R47, R21, R43 };

BranchChannel parse_branch_channel(std::string_view name);

/// Fraction of the decay out of the channel's source level going to its target.
double branching_ratio(const ModelParameters& params, BranchChannel channel);

/// Low-power limit of the ms = 0 fraction within NV-:
/// 1 / (1 + R27 G73 / (R47 G71)).
double max_spin_polarization(const ModelParameters& params);

// Parameter files ---------------------------------------------------------

/// Parses `key = value` lines (optionally `value +- uncertainty`); `#` starts
/// a comment. Keys follow the reference naming (`lifetime_2_1_ns`, `sigma_6_7`,
/// `kappa_readout_mhz_per_mw`, ...). Unspecified keys keep the reference value.
/// Errors carry `source:line`.
ModelParameters parse_parameters(std::string_view text, const std::string& source = "<string>");
ModelParameters load_parameters(const std::string& path);

/// Sets one entry by its file key and file units, then re-validates.
void set_parameter(ModelParameters& params, std::string_view key, double file_value);

/// Inverse of parse_parameters; round-trips to 15 significant digits.
std::string format_parameters(const ModelParameters& params);

} // namespace nvdyn
