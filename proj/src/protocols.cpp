#include "nvdyn/protocols.hpp"

#include "nvdyn/text_io.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace nvdyn {

std::string to_string(ProtocolKind kind) {
  switch (kind) {
  case ProtocolKind::RPI: return "RPI";
  case ProtocolKind::SPI: return "SPI";
  case ProtocolKind::TPI: return "TPI";
  }
  return "?";
}

ProtocolKind parse_protocol_kind(std::string_view name) {
  if (name == "RPI" || name == "rpi") return ProtocolKind::RPI;
  if (name == "SPI" || name == "spi") return ProtocolKind::SPI;
  if (name == "TPI" || name == "tpi") return ProtocolKind::TPI;
  throw ValidationError("unknown protocol kind '" + std::string(name) + "'");
}

void ProtocolSpec::validate() const {
  for (double v : {p_r, tau_r, p_h, tau_h, p_l, tau_l, tau_p})
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("protocol powers and durations must be finite and >= 0");
  if (kind != ProtocolKind::TPI && (p_h != 0.0 || tau_h != 0.0))
    throw ValidationError(to_string(kind) + " has no high-power pulse");
  if (kind == ProtocolKind::RPI && (p_l != 0.0 || tau_l != 0.0))
    throw ValidationError("RPI has no low-power pulse");
}

std::vector<std::string> ProtocolSpec::warnings() const {
  std::vector<std::string> w;
  if (kind == ProtocolKind::TPI && (tau_h == 0.0 || p_h == 0.0)) w.push_back("TPI without a high-power pulse");
  if (kind != ProtocolKind::RPI && (tau_l == 0.0 || p_l == 0.0)) w.push_back("low-power pulse is empty");
  if (tau_r == 0.0 || p_r == 0.0) w.push_back("readout pulse is empty");
  return w;
}

ProtocolSpec ProtocolSpec::rpi(double p_r, double tau_r, double tau_p) {
  ProtocolSpec s;
  s.kind = ProtocolKind::RPI;
  s.p_r = p_r;
  s.tau_r = tau_r;
  s.tau_p = tau_p;
  return s;
}

ProtocolSpec ProtocolSpec::spi(double p_r, double tau_r, double p_l, double tau_l, double tau_p) {
  ProtocolSpec s = rpi(p_r, tau_r, tau_p);
  s.kind = ProtocolKind::SPI;
  s.p_l = p_l;
  s.tau_l = tau_l;
  return s;
}

ProtocolSpec ProtocolSpec::tpi(double p_r, double tau_r, double p_h, double tau_h, double p_l, double tau_l,
                               double tau_p) {
  ProtocolSpec s = spi(p_r, tau_r, p_l, tau_l, tau_p);
  s.kind = ProtocolKind::TPI;
  s.p_h = p_h;
  s.tau_h = tau_h;
  return s;
}

PulseSequence build_protocol_sequence(const ProtocolSpec& spec) {
  spec.validate();
  if (!(spec.tau_r > 0.0)) throw ValidationError("protocol needs a readout pulse");
  PulseSequence seq;
  seq.segments.push_back({{spec.p_r, 0.0}, spec.tau_r});
  seq.readout_segment = 0;
  if (spec.tau_h > 0.0) seq.segments.push_back({{0.0, spec.p_h}, spec.tau_h});
  if (spec.tau_l > 0.0) seq.segments.push_back({{0.0, spec.p_l}, spec.tau_l});
  if (spec.tau_p > 0.0) seq.segments.push_back({{0.0, 0.0}, spec.tau_p});
  return seq;
}

InitializationCheck is_initialized(const ProtocolSpec& spec, const ModelParameters& params, double tol) {
  spec.validate();
  if (!std::isfinite(tol) || tol < 0.0) throw ValidationError("initialization tolerance must be >= 0");
  Matrix8 u = Matrix8::Identity();
  if (spec.init_time() > 0.0) {
    const auto add = [&](const LaserDrive& d, double t) {
      if (t > 0.0) u = transition_matrix(build_generator(params, d), t) * u;
    };
    add({spec.p_r, 0.0}, spec.tau_r);
    add({0.0, spec.p_h}, spec.tau_h);
    add({0.0, spec.p_l}, spec.tau_l);
    add({0.0, 0.0}, spec.tau_p);
  }
  InitializationCheck out;
  for (int i = 0; i < kLevels; ++i)
    for (int j = i + 1; j < kLevels; ++j)
      out.spread = std::max(out.spread, (u.col(i) - u.col(j)).cwiseAbs().maxCoeff());
  out.initialized = out.spread <= tol;
  Vector8 mean = u.rowwise().mean();
  out.final_state = PopulationState(mean.cwiseMax(0.0) / mean.cwiseMax(0.0).sum());
  return out;
}

InitializationError initialization_error(const PopulationState& state, const ModelParameters& params) {
  const Vector8& v = state.vector();
  const double off_support = v(L2) + v(L4) + v(L6) + v(L7) + v(L8);
  const PopulationState relaxed = off_support > 1e-12 ? relax(state, params) : state;
  InitializationError e;
  e.spin = relaxed[L3];
  e.charge = relaxed[L5];
  e.total = e.spin + e.charge;
  return e;
}

void SensitivityConfig::validate() const {
  if (!std::isfinite(t2_star) || t2_star <= 0.0) throw ValidationError("t2_star must be > 0");
  if (!(collection_efficiency > 0.0) || collection_efficiency > 1.0)
    throw ValidationError("collection_efficiency must lie in (0, 1]");
  if (!std::isfinite(sample_dt) || sample_dt <= 0.0) throw ValidationError("sample_dt must be > 0");
  if (!std::isfinite(init_tol) || init_tol < 0.0) throw ValidationError("init_tol must be >= 0");
}

SensitivityResult sensitivity(const ProtocolSpec& spec, const ModelParameters& params,
                              const SensitivityConfig& cfg, double tau_m) {
  cfg.validate();
  spec.validate();
  if (!std::isfinite(tau_m) || tau_m <= 0.0) throw ValidationError("tau_m must be > 0");
  if (!(spec.tau_r > 0.0) || !(spec.p_r > 0.0)) throw ValidationError("protocol needs a readout pulse");

  SensitivityResult r;
  r.init = is_initialized(spec, params, cfg.init_tol);
  r.tau_i = spec.init_time();
  const PopulationState ready = propagate(r.init.final_state, build_generator(params, {}), tau_m);
  try {
    r.readout = optimize_readout_window(readout_signals(ready, params, spec.p_r, spec.tau_r, cfg.sample_dt));
  } catch (const NumericalError&) {
    r.status = SensitivityStatus::OutOfRange;
    return r;
  }
  const double s0 = r.readout.counts0, s1 = r.readout.counts1;
  r.c_opt = optical_contrast(s0, s1);
  r.photons = cfg.collection_efficiency * 0.5 * (s0 + s1);
  if (!(r.c_opt > 0.0)) {
    r.status = SensitivityStatus::OutOfRange;
    return r;
  }
  r.eta = std::sqrt(r.tau_i + tau_m) / std::sqrt(r.photons) / r.c_opt / tau_m * std::exp(tau_m / cfg.t2_star);
  if (!std::isfinite(r.eta)) {
    r.eta = std::numeric_limits<double>::infinity();
    r.status = SensitivityStatus::OutOfRange;
    return r;
  }
  r.status = (r.init.initialized || !cfg.require_initialized) ? SensitivityStatus::Ok
                                                               : SensitivityStatus::NotInitialized;
  return r;
}

double speedup(const ProtocolSpec& a, const ProtocolSpec& b, const ModelParameters& params,
               const SensitivityConfig& cfg, double tau_m) {
  const auto ra = sensitivity(a, params, cfg, tau_m);
  const auto rb = sensitivity(b, params, cfg, tau_m);
  if (!ra.ok() || !rb.ok()) throw NumericalError("speedup needs two initialized protocols with finite sensitivity");
  return (rb.eta * rb.eta) / (ra.eta * ra.eta);
}

void ProtocolBounds::validate() const {
  for (const auto* r : {&p_r, &tau_r, &p_h, &tau_h, &p_l, &tau_l, &tau_p})
    if (!(r->lo > 0.0) || !(r->hi >= r->lo) || !std::isfinite(r->hi))
      throw ValidationError("search ranges need 0 < lo <= hi");
  for (const auto& f : {fixed_p_r, fixed_p_h, fixed_tau_h, fixed_p_l})
    if (f && (!std::isfinite(*f) || *f < 0.0)) throw ValidationError("fixed protocol values must be >= 0");
  if (grid_points < 1 || starts < 1) throw ValidationError("grid_points and starts must be >= 1");
}

namespace {

enum Field { FPr, FTr, FPh, FTh, FPl, FTl, FTp };

struct Coordinate {
  Field field;
  SearchRange range;
};

double& field_ref(ProtocolSpec& s, Field f) {
  switch (f) {
  case FPr: return s.p_r;
  case FTr: return s.tau_r;
  case FPh: return s.p_h;
  case FTh: return s.tau_h;
  case FPl: return s.p_l;
  case FTl: return s.tau_l;
  case FTp: return s.tau_p;
  }
  return s.p_r;
}

struct SearchProblem {
  ProtocolSpec base;
  std::vector<Coordinate> free;

  ProtocolSpec decode(const Eigen::VectorXd& z) const {
    ProtocolSpec s = base;
    for (std::size_t i = 0; i < free.size(); ++i)
      field_ref(s, free[i].field) = std::exp(z(static_cast<Eigen::Index>(i)));
    return s;
  }
};

SearchProblem make_problem(ProtocolKind kind, const ProtocolBounds& b) {
  SearchProblem p;
  p.base.kind = kind;
  auto add = [&](Field f, const SearchRange& r, const std::optional<double>& fixed) {
    if (fixed) {
      field_ref(p.base, f) = *fixed;
    } else {
      p.free.push_back({f, r});
    }
  };
  add(FPr, b.p_r, b.fixed_p_r);
  add(FTr, b.tau_r, std::nullopt);
  if (kind == ProtocolKind::TPI) {
    add(FPh, b.p_h, b.fixed_p_h);
    add(FTh, b.tau_h, b.fixed_tau_h);
  }
  if (kind != ProtocolKind::RPI) {
    add(FPl, b.p_l, b.fixed_p_l);
    add(FTl, b.tau_l, std::nullopt);
  }
  add(FTp, b.tau_p, std::nullopt);
  return p;
}

struct Trial {
  double value = std::numeric_limits<double>::infinity(); // penalized eta^2
  bool feasible = false;
  double eta = std::numeric_limits<double>::infinity();
  ProtocolSpec spec;
  SensitivityResult result;
};

Trial evaluate(const SearchProblem& problem, const Eigen::VectorXd& z, const ModelParameters& params,
               const SensitivityConfig& cfg, double tau_m) {
  Trial t;
  t.spec = problem.decode(z);
  t.result = sensitivity(t.spec, params, cfg, tau_m);
  if (t.result.status == SensitivityStatus::OutOfRange) return t;
  const double eta2 = t.result.eta * t.result.eta;
  if (t.result.ok()) {
    t.feasible = true;
    t.eta = t.result.eta;
    t.value = eta2;
  } else {
    // Infeasible points stay comparable so the simplex can walk back.
    t.value = eta2 * 10.0 * (1.0 + 1e3 * (t.result.init.spread - cfg.init_tol));
  }
  return t;
}

bool better(const Trial& a, const Trial& b) { return a.feasible && (!b.feasible || a.eta < b.eta); }

} // namespace

OptimizedProtocol optimize_protocol(ProtocolKind kind, const ModelParameters& params,
                                    const SensitivityConfig& cfg, double tau_m, const ProtocolBounds& bounds) {
  bounds.validate();
  cfg.validate();
  if (!std::isfinite(tau_m) || tau_m <= 0.0) throw ValidationError("tau_m must be > 0");
  const SearchProblem problem = make_problem(kind, bounds);
  const auto dim = static_cast<Eigen::Index>(problem.free.size());
  SensitivityConfig strict = cfg;
  strict.require_initialized = true;

  Eigen::VectorXd lo(dim), hi(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    lo(i) = std::log(problem.free[static_cast<std::size_t>(i)].range.lo);
    hi(i) = std::log(problem.free[static_cast<std::size_t>(i)].range.hi);
  }

  // Coarse log-spaced grid at cell centres.
  const auto g = static_cast<std::size_t>(bounds.grid_points);
  std::size_t count = 1;
  for (Eigen::Index i = 0; i < dim; ++i) count *= g;
  std::vector<Eigen::VectorXd> grid(count, Eigen::VectorXd(dim));
  for (std::size_t n = 0; n < count; ++n) {
    std::size_t rest = n;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double f = (static_cast<double>(rest % g) + 0.5) / static_cast<double>(g);
      grid[n](i) = lo(i) + f * (hi(i) - lo(i));
      rest /= g;
    }
  }
  std::vector<Trial> grid_trials(count);
  detail::parallel_for(count, [&](std::size_t n) { grid_trials[n] = evaluate(problem, grid[n], params, strict, tau_m); });

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grid_trials[a].value < grid_trials[b].value; });
  const std::size_t n_starts = std::min<std::size_t>(static_cast<std::size_t>(bounds.starts), count);

  struct RunOutcome {
    Trial best;
    int evaluations = 0;
  };
  std::vector<RunOutcome> runs(n_starts);
  detail::parallel_for(n_starts, [&](std::size_t r) {
    RunOutcome& out = runs[r];
    out.best = grid_trials[order[r]];
    auto f = [&](const Eigen::VectorXd& z) {
      Trial t = evaluate(problem, z, params, strict, tau_m);
      if (better(t, out.best)) out.best = t;
      return t.value;
    };
    if (dim > 0) out.evaluations = nelder_mead(f, grid[order[r]], lo, hi, bounds.simplex).evaluations;
  });

  OptimizedProtocol result;
  Trial best;
  for (const auto& t : grid_trials)
    if (better(t, best)) best = t;
  result.evaluations = static_cast<int>(count);
  for (const auto& run : runs) {
    result.evaluations += run.evaluations;
    if (better(run.best, best)) best = run.best;
  }
  if (!best.feasible)
    throw NumericalError("no initialized " + to_string(kind) + " protocol found within the search bounds");
  result.spec = best.spec;
  result.result = best.result;
  return result;
}

SpeedupReport speedup_sweep(const std::vector<double>& tau_m_grid, const ModelParameters& params,
                            const SensitivityConfig& cfg, const ProtocolBounds& bounds) {
  if (tau_m_grid.empty()) throw ValidationError("speedup sweep needs at least one tau_m");
  SpeedupReport report;
  auto attempt = [&](ProtocolKind kind, double tau_m) {
    try {
      return optimize_protocol(kind, params, cfg, tau_m, bounds);
    } catch (const NumericalError&) {
      OptimizedProtocol none;
      none.spec.kind = kind;
      return none;
    }
  };
  for (double tau_m : tau_m_grid) {
    SpeedupRow row;
    row.tau_m = tau_m;
    row.rpi = attempt(ProtocolKind::RPI, tau_m);
    row.spi = attempt(ProtocolKind::SPI, tau_m);
    row.tpi = attempt(ProtocolKind::TPI, tau_m);
    const double e2 = row.rpi.result.eta * row.rpi.result.eta;
    row.t_spi_over_rpi = row.spi.result.eta * row.spi.result.eta / e2;
    row.t_tpi_over_rpi = row.tpi.result.eta * row.tpi.result.eta / e2;
    report.rows.push_back(row);
  }
  return report;
}

namespace {

std::string g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

} // namespace

std::string format_speedup_csv(const SpeedupReport& report) {
  std::string out =
      "tau_m_ns,eta_rpi,eta_spi,eta_tpi,t_spi_over_rpi,t_tpi_over_rpi,"
      "rpi_p_r_mw,rpi_tau_r_ns,rpi_tau_p_ns,"
      "spi_p_r_mw,spi_tau_r_ns,spi_p_l_mw,spi_tau_l_ns,spi_tau_p_ns,"
      "tpi_p_r_mw,tpi_tau_r_ns,tpi_p_h_mw,tpi_tau_h_ns,tpi_p_l_mw,tpi_tau_l_ns,tpi_tau_p_ns\n";
  for (const auto& r : report.rows) {
    const auto& a = r.rpi.spec;
    const auto& b = r.spi.spec;
    const auto& c = r.tpi.spec;
    out += g(r.tau_m) + "," + g(r.rpi.result.eta) + "," + g(r.spi.result.eta) + "," + g(r.tpi.result.eta) + "," +
           g(r.t_spi_over_rpi) + "," + g(r.t_tpi_over_rpi) + ",";
    out += g(a.p_r) + "," + g(a.tau_r) + "," + g(a.tau_p) + ",";
    out += g(b.p_r) + "," + g(b.tau_r) + "," + g(b.p_l) + "," + g(b.tau_l) + "," + g(b.tau_p) + ",";
    out += g(c.p_r) + "," + g(c.tau_r) + "," + g(c.p_h) + "," + g(c.tau_h) + "," + g(c.p_l) + "," + g(c.tau_l) +
           "," + g(c.tau_p) + "\n";
  }
  return out;
}

std::string format_speedup_summary(const SpeedupReport& report) {
  std::string out = "# speedup summary (speedup = T_RPI / T_protocol)\n";
  out += "points = " + std::to_string(report.rows.size()) + "\n";
  double best_spi = 0.0, best_tpi = 0.0;
  bool spi_always = true, tpi_always = true;
  for (const auto& r : report.rows) {
    const double s = 1.0 / r.t_spi_over_rpi, t = 1.0 / r.t_tpi_over_rpi;
    best_spi = std::max(best_spi, s);
    best_tpi = std::max(best_tpi, t);
    spi_always = spi_always && s > 1.0;
    tpi_always = tpi_always && t > 1.0;
    out += "tau_m_" + g(r.tau_m) + "_ns.speedup_spi = " + g(s) + "\n";
    out += "tau_m_" + g(r.tau_m) + "_ns.speedup_tpi = " + g(t) + "\n";
  }
  out += "max_speedup_spi = " + g(best_spi) + "\n";
  out += "max_speedup_tpi = " + g(best_tpi) + "\n";
  out += "spi_beneficial_everywhere = " + std::string(spi_always ? "true" : "false") + "\n";
  out += "tpi_beneficial_everywhere = " + std::string(tpi_always ? "true" : "false") + "\n";
  return out;
}

SweepSpec parse_sweep_spec(const std::string& text, const std::string& source) {
  SweepSpec spec;
  for (const auto& kv : text::parse_key_values(text, source)) {
    const std::string where = source + ":" + std::to_string(kv.line);
    try {
      const auto number = [&] { return text::parse_double(kv.value, kv.key); };
      const auto range = [&](SearchRange& r) {
        const auto parts = text::split(kv.value, ':');
        if (parts.size() != 2) throw ValidationError("range must be lo:hi");
        r = {text::parse_double(parts[0], kv.key), text::parse_double(parts[1], kv.key)};
      };
      const auto fixed = [&](std::optional<double>& f) {
        if (text::trim(kv.value) == "free") f.reset();
        else f = number();
      };
      const auto count = [&] {
        const double v = number();
        if (v != std::floor(v) || v < 1 || v > 1e6) throw ValidationError("expected a positive integer");
        return static_cast<int>(v);
      };
      if (kv.key == "tau_m_ns") spec.tau_m_grid = text::parse_grid(kv.value);
      else if (kv.key == "kinds") {
        spec.kinds.clear();
        for (const auto& k : text::split(kv.value, ',')) spec.kinds.push_back(parse_protocol_kind(text::trim(k)));
      } else if (kv.key == "t2_star_ns") spec.sensitivity.t2_star = number();
      else if (kv.key == "collection_efficiency") spec.sensitivity.collection_efficiency = number();
      else if (kv.key == "init_tol") spec.sensitivity.init_tol = number();
      else if (kv.key == "p_r_mw") range(spec.bounds.p_r);
      else if (kv.key == "tau_r_ns") range(spec.bounds.tau_r);
      else if (kv.key == "p_h_mw") range(spec.bounds.p_h);
      else if (kv.key == "tau_h_ns") range(spec.bounds.tau_h);
      else if (kv.key == "p_l_mw") range(spec.bounds.p_l);
      else if (kv.key == "tau_l_ns") range(spec.bounds.tau_l);
      else if (kv.key == "tau_p_ns") range(spec.bounds.tau_p);
      else if (kv.key == "fixed_p_r_mw") fixed(spec.bounds.fixed_p_r);
      else if (kv.key == "fixed_p_h_mw") fixed(spec.bounds.fixed_p_h);
      else if (kv.key == "fixed_tau_h_ns") fixed(spec.bounds.fixed_tau_h);
      else if (kv.key == "fixed_p_l_mw") fixed(spec.bounds.fixed_p_l);
      else if (kv.key == "grid_points") spec.bounds.grid_points = count();
      else if (kv.key == "starts") spec.bounds.starts = count();
      else if (kv.key == "max_evaluations") spec.bounds.simplex.max_evaluations = count();
      else throw ValidationError("unknown key '" + kv.key + "'");
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  for (double t : spec.tau_m_grid)
    if (!(t > 0.0)) throw ValidationError(source + ": tau_m values must be > 0");
  if (spec.kinds.empty()) throw ValidationError(source + ": no protocol kinds");
  spec.sensitivity.validate();
  spec.bounds.validate();
  return spec;
}

} // namespace nvdyn
