#pragma once

#include "nvdyn/rate_model.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace nvdyn {

/// Occupation of L1..L8. Entries are nonnegative (values down to -1e-10 are
/// clamped to zero) and sum to one within 1e-9.
class PopulationState {
public:
  PopulationState() : pop_(Vector8::Unit(L1)) {}
  /// Throws ValidationError when the invariants do not hold.
  explicit PopulationState(const Vector8& populations);

  static PopulationState basis(Level level) { return PopulationState(Vector8::Unit(level)); }

  const Vector8& vector() const { return pop_; }
  double operator[](Level level) const { return pop_(level); }
  double nv0() const { return pop_(L5) + pop_(L6); }

  friend bool operator==(const PopulationState&, const PopulationState&) = default;

private:
  Vector8 pop_;
};

struct PulseSegment {
  LaserDrive drive;
  double duration = 0.0; // ns, > 0

  bool is_pause() const { return drive.is_dark(); }
};

/// Ordered segments. A pi-pulse marker k sits on the boundary before segment
/// k (k == segments.size() marks the end of the sequence). The optional
/// readout segment is the one analyzed for contrast.
struct PulseSequence {
  std::vector<PulseSegment> segments;
  std::vector<std::size_t> pi_pulse_markers;
  std::optional<std::size_t> readout_segment;

  void validate() const;
  double total_duration() const;
  bool has_pi_at(std::size_t boundary) const;
};

struct TimeTrace {
  std::vector<double> times; // ns, strictly increasing
  std::vector<PopulationState> states;
  std::vector<double> signal; // photons/ns, model units

  std::size_t size() const { return times.size(); }
  void validate() const;
};

/// Exact solution of dL/dt = M L over dt (matrix exponential).
PopulationState propagate(const PopulationState& state, const RateGenerator& generator, double dt);

/// exp(M dt); throws NumericalError for non-finite results.
Matrix8 transition_matrix(const RateGenerator& generator, double dt);

/// Unique stationary distribution of the generator. Throws NumericalError
/// when L1, L3 or L5 is absorbing or the bordered system is singular.
PopulationState steady_state(const RateGenerator& generator);

/// Zero-drive t -> infinity limit by cascading branching ratios; supported
/// on {L1, L3, L5}.
PopulationState relax(const PopulationState& state, const ModelParameters& params);

/// Detected luminescence S = L2 G21 + L4 G43 + beta L6 G65 as a row of weights.
Eigen::Matrix<double, 1, kLevels> luminescence_weights(const ModelParameters& params);
double luminescence(const PopulationState& state, const ModelParameters& params);

/// Ideal pi-pulse: swaps L1 and L3.
PopulationState apply_pi_pulse(const PopulationState& state);
Vector8 apply_pi_pulse(const Vector8& populations);

/// Luminescence sampled at t = 0, dt, ..., (samples - 1) dt under a constant
/// generator, starting from `start`.
std::vector<double> signal_under(const Vector8& start, const RateGenerator& generator,
                                 const ModelParameters& params, std::size_t samples, double dt);

/// Piecewise-constant evolution on the grid t = 0, dt, 2 dt, ... <= total.
/// Pi-pulses act instantaneously at their boundaries. The last state in the
/// trace is not used to propagate; segment end states come from one exact
/// propagation per segment.
TimeTrace simulate_sequence(const PulseSequence& sequence, const PopulationState& initial,
                            const ModelParameters& params, double sample_dt = 1.0);

/// State after running every segment (and its pi markers) once from `initial`.
PopulationState final_state(const PulseSequence& sequence, const PopulationState& initial,
                            const ModelParameters& params);

/// One-period transition matrix of the repeated sequence, starting at
/// `boundary` (pi marker at that boundary applied last).
Matrix8 cycle_propagator(const PulseSequence& sequence, const ModelParameters& params,
                         std::size_t boundary = 0);

/// State at `boundary` once the repeated sequence has reached its periodic
/// steady state, with any pi marker at that boundary already applied.
PopulationState periodic_state(const PulseSequence& sequence, const ModelParameters& params,
                               std::size_t boundary = 0);

/// Fluorescence quench after a strong pulse: the minimum over the first
/// `window_ns` of S(t) / S_ss(p_readout) once the drive drops from p_high to
/// p_readout, starting from the steady state at p_high. Both powers act on the
/// readout channel, so p_high == p_readout gives exactly 1.
double quench_depth(const ModelParameters& params, double p_high, double p_readout,
                    double window_ns = 2000.0);

// Text formats --------------------------------------------------------------

/// Sequence file: one record per line,
///   segment <p_readout_mw> <p_init_mw> <duration_ns>
///   readout <p_readout_mw> <p_init_mw> <duration_ns>   (tags the readout segment)
///   pause <duration_ns>
///   pi_pulse
/// Tokens may be separated by whitespace or commas; `#` starts a comment.
PulseSequence parse_sequence(const std::string& text, const std::string& source = "<string>");
PulseSequence load_sequence(const std::string& path);
std::string format_sequence(const PulseSequence& sequence);

/// CSV with columns t_ns, L1..L8, signal.
std::string format_trace_csv(const TimeTrace& trace);

} // namespace nvdyn
