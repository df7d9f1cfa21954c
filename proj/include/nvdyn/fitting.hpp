#pragma once

#include "nvdyn/dynamics.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace nvdyn {

inline constexpr int kGenes = 14;

/// Free parameters in fixed order. Rates are stored in 1/ns, kappas in
/// 1/(ns mW). Setting sigma_2_5 also sets sigma_4_5.
enum Gene : int {
  GGamma27, GGamma47, GGamma71, GGamma73,
  GSigma25, GSigma78, GSigma56, GSigma67, GSigma61, GSigma63,
  GRatio42, GRatio52, GKappaReadout, GKappaInit,
};

/// Parameter-file key of each gene.
const char* gene_name(int gene);

struct ParameterVector {
  std::array<double, kGenes> values{};
  std::array<double, kGenes> lower{};
  std::array<double, kGenes> upper{};
  ModelParameters base; // fixed context (decays, beta, ...)

  /// Genes from `params`, bounds [v / factor, v * factor].
  static ParameterVector from_params(const ModelParameters& params, double bound_factor = 3.0);

  ModelParameters to_params() const;
  /// Throws ValidationError on non-positive genes (ratio_8_5 may be 0) or
  /// values outside the bounds.
  void validate() const;
  void clamp();
};

/// A readout trace together with the repeated sequence that produced it.
/// The simulated counterpart is the periodic state's readout signal sampled
/// at t = i * dt from the readout onset.
struct TraceContext {
  std::string label;
  PulseSequence sequence; // must tag its readout segment
  bool pi_pulse = false;  // pi-pulse right before every readout
  double dt = 1.0;        // ns per sample
  std::vector<double> measured;
};

/// Steady-state fluorescence versus power, counted over `integration_ns`.
struct CwSweep {
  std::vector<double> powers_mw;
  std::vector<double> measured;
  bool on_init_laser = false;
  double integration_ns = 500.0;
};

struct FitDataset {
  std::vector<TraceContext> traces;
  CwSweep cw;
  double cw_weight = 1.0;

  void validate() const;
};

/// Model prediction for one trace context (unscaled, photons per ns).
std::vector<double> simulate_trace(const ModelParameters& params, const TraceContext& context);
/// Model CW curve in counts per integration window (unscaled).
std::vector<double> simulate_cw(const ModelParameters& params, const CwSweep& sweep);

struct ObjectiveBreakdown {
  double total = 0.0;
  double trace_term = 0.0;
  double cw_term = 0.0;
  double scale = 0.0; // fitted amplitude
  bool failed = false;
};

/// Normalized least squares with one amplitude a shared by traces and CW:
///   [sum_traces |a sim - m|^2 / sum_traces |m|^2] + w [|a cw - m_cw|^2 / |m_cw|^2],
/// with a solved in closed form. Simulation failures give kFailurePenalty.
ObjectiveBreakdown objective_breakdown(const ParameterVector& params, const FitDataset& data);
double objective(const ParameterVector& params, const FitDataset& data);

inline constexpr double kFailurePenalty = 1e6;

struct GAConfig {
  int offspring_count = 6;
  double mutation_probability = 0.2;
  double epsilon = 0.3;
  int max_generations = 5000;
  int stall_generations = 300;
  std::uint64_t rng_seed = 1;
  double bound_factor = 3.0; // search box around the starting point

  void validate() const;
};

/// Seedable stream with 53-bit uniforms so results do not depend on the
/// standard library's distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(); // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n); // [0, n)
  std::mt19937_64& engine() { return engine_; }

  /// Independent stream derived from (seed, a, b) through SplitMix64.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

private:
  std::mt19937_64 engine_;
};

/// Single cut: child takes p2's genes [0, cut) and p1's genes [cut, n).
ParameterVector crossover_at(const ParameterVector& p1, const ParameterVector& p2, std::size_t cut);

/// offspring_count children from random one- or two-point cut-and-swap;
/// children come in complementary pairs.
std::vector<ParameterVector> crossover(const ParameterVector& p1, const ParameterVector& p2, int offspring_count,
                                       Rng& rng);

/// Each gene with probability p is multiplied by U[1 - eps, 1 + eps], then
/// clamped to its bounds.
ParameterVector mutate(const ParameterVector& child, const GAConfig& cfg, Rng& rng);

struct GAResult {
  ParameterVector best;
  double best_objective = 0.0;
  std::vector<double> history; // best objective after each generation
  int generations = 0;
  bool stalled = false;
};

/// Two-parent elitist GA. The second parent is drawn log-uniformly inside the
/// bounds from the seed.
GAResult run_ga(const FitDataset& data, const GAConfig& cfg, const ParameterVector& initial);

struct SynthesisOptions {
  double photon_budget = 0.0; // expected photons in the first trace; 0 = noiseless
  std::uint64_t seed = 1;
  std::size_t samples = 500;  // per trace
  double dt = 1.0;
  bool cw_on_init_laser = false;
  double cw_integration_ns = 500.0;
};

struct SequenceContext {
  std::string label;
  PulseSequence sequence;
  bool pi_pulse = false;
};

/// Forward-simulated dataset. With a photon budget, every value is scaled by
/// k = budget / sum(first trace) and Poisson-sampled; without one the exact
/// model output is stored.
FitDataset synthesize_dataset(const ModelParameters& params, const std::vector<SequenceContext>& sequences,
                              const std::vector<double>& cw_powers, const SynthesisOptions& options);

// Files ------------------------------------------------------------------------

/// Directory layout: dataset.txt (key/value) naming per-trace sequence and
/// CSV files plus cw.csv.
FitDataset load_dataset(const std::string& directory);
void save_dataset(const FitDataset& data, const std::string& directory);

GAConfig parse_ga_config(const std::string& text, const std::string& source = "<string>");
std::string format_history_csv(const GAResult& result);

} // namespace nvdyn
