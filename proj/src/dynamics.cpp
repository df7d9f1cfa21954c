#include "nvdyn/dynamics.hpp"

#include "nvdyn/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace nvdyn {

namespace {

constexpr double kNegativeTolerance = 1e-10;
constexpr double kSumTolerance = 1e-9;

// Clamp rounding-level negatives; the caller guarantees conservation.
Vector8 clamp_small_negatives(Vector8 v) {
  for (int i = 0; i < kLevels; ++i)
    if (v(i) < 0.0 && v(i) >= -kNegativeTolerance) v(i) = 0.0;
  return v;
}

} // namespace

PopulationState::PopulationState(const Vector8& populations) {
  if (!populations.allFinite()) throw ValidationError("population vector has non-finite entries");
  if (populations.minCoeff() < -kNegativeTolerance)
    throw ValidationError("population vector has a negative entry");
  if (std::abs(populations.sum() - 1.0) > kSumTolerance)
    throw ValidationError("populations must sum to 1");
  pop_ = clamp_small_negatives(populations);
}

void PulseSequence::validate() const {
  if (segments.empty()) throw ValidationError("pulse sequence has no segments");
  for (const auto& s : segments) {
    s.drive.validate();
    if (!std::isfinite(s.duration) || s.duration <= 0.0)
      throw ValidationError("segment durations must be finite and > 0");
  }
  for (auto m : pi_pulse_markers)
    if (m > segments.size()) throw ValidationError("pi-pulse marker beyond the last boundary");
  if (readout_segment && *readout_segment >= segments.size())
    throw ValidationError("readout segment index out of range");
}

double PulseSequence::total_duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

bool PulseSequence::has_pi_at(std::size_t boundary) const {
  // Repeated markers compose; an even count cancels.
  const auto n = std::count(pi_pulse_markers.begin(), pi_pulse_markers.end(), boundary);
  return n % 2 == 1;
}

void TimeTrace::validate() const {
  if (times.size() != states.size() || times.size() != signal.size())
    throw ValidationError("time trace columns have different lengths");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ValidationError("time trace grid is not strictly increasing");
}

Matrix8 transition_matrix(const RateGenerator& generator, double dt) {
  if (!std::isfinite(dt) || dt < 0.0) throw ValidationError("propagation time must be finite and >= 0");
  if (!generator.matrix().allFinite()) throw NumericalError("generator has non-finite entries");
  Matrix8 u = linalg::transition_matrix(generator.matrix(), dt);
  if (!u.allFinite()) throw NumericalError("matrix exponential produced non-finite entries");
  return u;
}

PopulationState propagate(const PopulationState& state, const RateGenerator& generator, double dt) {
  Vector8 v = transition_matrix(generator, dt) * state.vector();
  return PopulationState(clamp_small_negatives(v));
}

PopulationState steady_state(const RateGenerator& generator) {
  const Matrix8& m = generator.matrix();
  for (Level l : {L1, L3, L5})
    if (!(m(l, l) < 0.0))
      throw NumericalError("no unique steady state: level L" + std::to_string(l + 1) + " is absorbing");
  Vector8 v;
  if (!linalg::stationary_vector<double, kLevels>(m, v))
    throw NumericalError("no unique steady state: bordered system is singular");
  v = clamp_small_negatives(v);
  const double residual = (m * v).cwiseAbs().maxCoeff();
  if (residual > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw NumericalError("steady state residual too large");
  return PopulationState(v / v.sum());
}

PopulationState relax(const PopulationState& state, const ModelParameters& params) {
  const double r21 = branching_ratio(params, BranchChannel::R21);
  const double r27 = branching_ratio(params, BranchChannel::R27);
  const double r43 = branching_ratio(params, BranchChannel::R43);
  const double r47 = branching_ratio(params, BranchChannel::R47);
  const double r71 = branching_ratio(params, BranchChannel::R71);
  const double r73 = branching_ratio(params, BranchChannel::R73);
  const double l8_norm = 1.0 + params.l8_ratio_42 + params.l8_ratio_52;

  const Vector8& p = state.vector();
  // Feed L8 into its daughters first, then L6, then the NV- cascade.
  const double l2 = p(L2) + p(L8) / l8_norm;
  const double l4 = p(L4) + p(L8) * params.l8_ratio_42 / l8_norm;
  const double l5 = p(L5) + p(L6) + p(L8) * params.l8_ratio_52 / l8_norm;
  const double l7 = p(L7) + l2 * r27 + l4 * r47;

  Vector8 out = Vector8::Zero();
  out(L1) = p(L1) + l2 * r21 + l7 * r71;
  out(L3) = p(L3) + l4 * r43 + l7 * r73;
  out(L5) = l5;
  return PopulationState(out);
}

Eigen::Matrix<double, 1, kLevels> luminescence_weights(const ModelParameters& params) {
  Eigen::Matrix<double, 1, kLevels> w = Eigen::Matrix<double, 1, kLevels>::Zero();
  w(L2) = params.gamma_21;
  w(L4) = params.gamma_43;
  w(L6) = params.beta * params.gamma_65;
  return w;
}

double luminescence(const PopulationState& state, const ModelParameters& params) {
  return luminescence_weights(params).dot(state.vector());
}

Vector8 apply_pi_pulse(const Vector8& populations) {
  Vector8 out = populations;
  std::swap(out(L1), out(L3));
  return out;
}

PopulationState apply_pi_pulse(const PopulationState& state) {
  return PopulationState(apply_pi_pulse(state.vector()));
}

std::vector<double> signal_under(const Vector8& start, const RateGenerator& generator,
                                 const ModelParameters& params, std::size_t samples, double dt) {
  std::vector<double> out;
  out.reserve(samples);
  if (samples == 0) return out;
  const auto w = luminescence_weights(params);
  const Matrix8 step = transition_matrix(generator, dt);
  Vector8 v = start;
  out.push_back(w.dot(v));
  for (std::size_t i = 1; i < samples; ++i) {
    v = step * v;
    out.push_back(w.dot(v));
  }
  return out;
}

PopulationState final_state(const PulseSequence& sequence, const PopulationState& initial,
                            const ModelParameters& params) {
  sequence.validate();
  Vector8 v = initial.vector();
  for (std::size_t k = 0; k < sequence.segments.size(); ++k) {
    if (sequence.has_pi_at(k)) v = apply_pi_pulse(v);
    const auto& seg = sequence.segments[k];
    v = transition_matrix(build_generator(params, seg.drive), seg.duration) * v;
  }
  if (sequence.has_pi_at(sequence.segments.size())) v = apply_pi_pulse(v);
  return PopulationState(clamp_small_negatives(v));
}

TimeTrace simulate_sequence(const PulseSequence& sequence, const PopulationState& initial,
                            const ModelParameters& params, double sample_dt) {
  sequence.validate();
  if (!std::isfinite(sample_dt) || sample_dt <= 0.0) throw ValidationError("sample_dt must be > 0");

  TimeTrace trace;
  const auto w = luminescence_weights(params);
  const double total = sequence.total_duration();
  const auto n_samples = static_cast<std::size_t>(std::floor(total / sample_dt * (1.0 + 1e-12))) + 1;
  trace.times.reserve(n_samples);
  trace.states.reserve(n_samples);
  trace.signal.reserve(n_samples);

  auto record = [&](double t, const Vector8& v) {
    trace.times.push_back(t);
    trace.states.emplace_back(clamp_small_negatives(v));
    trace.signal.push_back(w.dot(v));
  };

  Vector8 seg_start = initial.vector();
  double t0 = 0.0;
  std::size_t next = 0; // index of the next grid sample to record
  for (std::size_t k = 0; k < sequence.segments.size(); ++k) {
    if (sequence.has_pi_at(k)) seg_start = apply_pi_pulse(seg_start);
    const auto& seg = sequence.segments[k];
    const RateGenerator gen = build_generator(params, seg.drive);
    const double t1 = t0 + seg.duration;
    const bool last = k + 1 == sequence.segments.size();

    // Samples in [t0, t1), or [t0, t1] for the last segment.
    double t = static_cast<double>(next) * sample_dt;
    if (next < n_samples && (t < t1 || last)) {
      Vector8 v = transition_matrix(gen, t - t0) * seg_start;
      const Matrix8 step = transition_matrix(gen, sample_dt);
      while (next < n_samples) {
        t = static_cast<double>(next) * sample_dt;
        if (!(t < t1 || last)) break;
        record(t, v);
        v = step * v;
        ++next;
      }
    }
    seg_start = transition_matrix(gen, seg.duration) * seg_start;
    t0 = t1;
  }
  if (sequence.has_pi_at(sequence.segments.size())) seg_start = apply_pi_pulse(seg_start);

  // Samples landing exactly on the end use the exactly propagated state.
  if (!trace.times.empty() && std::abs(trace.times.back() - total) <= 1e-9 * std::max(total, 1.0)) {
    trace.states.back() = PopulationState(clamp_small_negatives(seg_start));
    trace.signal.back() = w.dot(seg_start);
  }
  return trace;
}

Matrix8 cycle_propagator(const PulseSequence& sequence, const ModelParameters& params,
                         std::size_t boundary) {
  sequence.validate();
  const std::size_t n = sequence.segments.size();
  if (boundary > n) throw ValidationError("boundary index out of range");
  if (boundary == n) boundary = 0; // end of one period is the start of the next
  Matrix8 pi = Matrix8::Identity();
  pi.row(L1).swap(pi.row(L3));

  Matrix8 u = Matrix8::Identity();
  // The wrap-around point carries both the end marker and the start marker.
  auto cross_boundary = [&](std::size_t k) {
    if (k == 0 && sequence.has_pi_at(n)) u = pi * u;
    if (sequence.has_pi_at(k)) u = pi * u;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = (boundary + i) % n;
    if (i > 0) cross_boundary(k);
    const auto& seg = sequence.segments[k];
    u = transition_matrix(build_generator(params, seg.drive), seg.duration) * u;
  }
  cross_boundary(boundary);
  return u;
}

PopulationState periodic_state(const PulseSequence& sequence, const ModelParameters& params,
                               std::size_t boundary) {
  const Matrix8 u = cycle_propagator(sequence, params, boundary);
  Vector8 v;
  if (!linalg::stationary_vector<double, kLevels>(u, v, true))
    throw NumericalError("repeated sequence has no unique periodic state");
  v = clamp_small_negatives(v);
  return PopulationState(v / v.sum());
}

double quench_depth(const ModelParameters& params, double p_high, double p_readout, double window_ns) {
  if (!(p_high > 0.0) || !(p_readout > 0.0)) throw ValidationError("quench_depth needs positive powers");
  const RateGenerator readout = build_generator(params, {p_readout, 0.0});
  const PopulationState before = steady_state(build_generator(params, {p_high, 0.0}));
  const double reference = luminescence(steady_state(readout), params);
  const auto samples = static_cast<std::size_t>(window_ns) + 1;
  const auto s = signal_under(before.vector(), readout, params, samples, 1.0);
  const double lowest = *std::min_element(s.begin() + 1, s.end());
  return std::min(lowest, s.front()) / reference;
}

} // namespace nvdyn
