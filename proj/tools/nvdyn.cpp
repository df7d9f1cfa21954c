// Command-line front end: simulation, steady states, fitting, protocol
// optimization, speedup sweeps, approximation checks, background tools,
// measured-trace analysis and synthetic dataset generation.

#include "nvdyn/approx.hpp"
#include "nvdyn/fitting.hpp"
#include "nvdyn/protocols.hpp"
#include "nvdyn/text_io.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace nvdyn;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Common {
  std::string params_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::string params_source;
  std::vector<std::string> argv;
};

std::string fmt(double v) { return text::format_double(v); }

ModelParameters resolve_params(Common& c) {
  std::string path = c.params_path;
  if (path.empty()) {
    if (const char* env = std::getenv("NVDYN_PARAMS"); env && *env) {
      path = env;
      c.params_source = "env:NVDYN_PARAMS";
    } else {
      c.params_source = "builtin:reference";
    }
  } else {
    c.params_source = "flag";
  }
  c.params_path = path;
  ModelParameters p = path.empty() ? ModelParameters::reference() : load_parameters(path);
  for (const auto& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ValidationError("override '" + o + "' must be key=value");
    set_parameter(p, text::trim(o.substr(0, eq)), text::parse_double(o.substr(eq + 1), "override " + o));
  }
  return p;
}

/// Key/value record of everything needed to rerun a command.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::string seed = "none";

  void write(const Common& c, const ModelParameters& params) const {
    std::ostringstream os;
    os << "command = " << command << "\n";
    os << "toolkit_version = " << kVersion << "\n";
    std::string argv;
    for (const auto& a : c.argv) argv += (argv.empty() ? "" : " ") + a;
    os << "argv = " << argv << "\n";
    os << "params_source = " << c.params_source << "\n";
    os << "params_file = " << (c.params_path.empty() ? "-" : c.params_path) << "\n";
    std::string ov;
    for (const auto& o : c.overrides) ov += (ov.empty() ? "" : ",") + o;
    os << "overrides = " << (ov.empty() ? "-" : ov) << "\n";
    for (const auto& [k, v] : inputs) os << "input." << k << " = " << v << "\n";
    os << "seed = " << seed << "\n";
    os << "out = " << c.out_dir << "\n";
    os << "resolved_params = params_used.params\n";
    text::write_file((fs::path(c.out_dir) / "manifest.txt").string(), os.str());
    text::write_file((fs::path(c.out_dir) / "params_used.params").string(), format_parameters(params));
  }
};

void ensure_out(const Common& c) { fs::create_directories(c.out_dir); }

void write_out(const Common& c, const std::string& name, const std::string& content) {
  text::write_file((fs::path(c.out_dir) / name).string(), content);
}

std::string kv(const std::string& key, const std::string& value) { return key + " = " + value + "\n"; }

std::string readout_summary(const ReadoutOptimum& o) {
  std::string s;
  s += kv("max_contrast", fmt(o.max_contrast));
  s += kv("max_contrast_time_ns", fmt(o.max_contrast_time));
  s += kv("snr_contrast", fmt(o.contrast));
  s += kv("snr_window_ns", fmt(o.window.length));
  s += kv("snr", fmt(o.snr));
  s += kv("optical_contrast", fmt(optical_contrast(o.counts0, o.counts1)));
  return s;
}

// simulate -------------------------------------------------------------------

struct SimulateOpts {
  std::string sequence;
  double dt = 1.0;
  std::string initial = "periodic";
};

void cmd_simulate(Common& c, const SimulateOpts& o) {
  const auto params = resolve_params(c);
  const auto seq = load_sequence(o.sequence);
  PopulationState start;
  if (o.initial == "periodic") start = periodic_state(seq, params, 0);
  else if (o.initial == "relaxed") start = relax(periodic_state(seq, params, 0), params);
  else if (o.initial == "l1") start = PopulationState::basis(L1);
  else throw ValidationError("--initial must be periodic, relaxed or l1");
  const auto trace = simulate_sequence(seq, start, params, o.dt);

  ensure_out(c);
  write_out(c, "trace.csv", format_trace_csv(trace));
  std::string summary = kv("total_duration_ns", fmt(seq.total_duration())) + kv("samples", std::to_string(trace.size()));
  const auto& fin = trace.states.back();
  for (int i = 0; i < kLevels; ++i) summary += kv("final_L" + std::to_string(i + 1), fmt(fin.vector()(i)));
  if (seq.readout_segment) {
    // Spin contrast of the repeated sequence: periodic states at the readout
    // onset without and with a pi-pulse there.
    const std::size_t r = *seq.readout_segment;
    PulseSequence flipped = seq;
    flipped.pi_pulse_markers.push_back(r);
    const auto& seg = seq.segments[r];
    const auto gen = build_generator(params, seg.drive);
    const auto n = static_cast<std::size_t>(std::floor(seg.duration / o.dt + 1e-9)) + 1;
    ReadoutSignals sig;
    sig.dt = o.dt;
    sig.s0 = signal_under(periodic_state(seq, params, r).vector(), gen, params, n, o.dt);
    sig.s1 = signal_under(periodic_state(flipped, params, r).vector(), gen, params, n, o.dt);
    summary += kv("readout_segment", std::to_string(r));
    summary += kv("readout_power_mw", fmt(seg.drive.p_readout));
    summary += readout_summary(optimize_readout_window(sig));
  }
  write_out(c, "summary.txt", summary);
  std::cout << summary;
  RunManifest m{"simulate", {{"sequence", o.sequence}, {"dt_ns", fmt(o.dt)}, {"initial", o.initial}}};
  m.write(c, params);
}

// steady ---------------------------------------------------------------------

struct GridOpts {
  std::string grid;
  std::string laser = "readout";
};

LaserDrive drive_on(const std::string& laser, double p) {
  if (laser == "readout") return {p, 0.0};
  if (laser == "init") return {0.0, p};
  throw ValidationError("--laser must be readout or init");
}

void cmd_steady(Common& c, const GridOpts& o) {
  const auto params = resolve_params(c);
  const auto grid = text::parse_grid(o.grid.empty() ? "0.01:100:21:log" : o.grid);
  std::string csv = "power_mw,L1,L2,L3,L4,L5,L6,L7,L8,luminescence,relaxed_L1,relaxed_L3,relaxed_L5,"
                    "spin_error,charge_error,total_error,degenerate\n";
  for (double p : grid) {
    csv += fmt(p);
    try {
      const auto ss = steady_state(build_generator(params, drive_on(o.laser, p)));
      const auto rl = relax(ss, params);
      const auto err = initialization_error(rl, params);
      for (int i = 0; i < kLevels; ++i) csv += "," + fmt(ss.vector()(i));
      csv += "," + fmt(luminescence(ss, params));
      csv += "," + fmt(rl[L1]) + "," + fmt(rl[L3]) + "," + fmt(rl[L5]);
      csv += "," + fmt(err.spin) + "," + fmt(err.charge) + "," + fmt(err.total) + ",0\n";
    } catch (const NumericalError&) {
      // No unique stationary state (e.g. a dark drive).
      for (int i = 0; i < 15; ++i) csv += ",nan";
      csv += ",1\n";
    }
  }
  ensure_out(c);
  write_out(c, "steady.csv", csv);
  std::cout << csv;
  RunManifest{"steady", {{"grid", o.grid}, {"laser", o.laser}}}.write(c, params);
}

// fit ------------------------------------------------------------------------

struct FitOpts {
  std::string dataset;
  std::string config;
  std::string start;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_generations;
  double refine_epsilon = 0.0;
  int refine_generations = 0;
};

void cmd_fit(Common& c, const FitOpts& o) {
  const auto params = resolve_params(c);
  // Accept the index file as well as its directory.
  std::filesystem::path dir(o.dataset);
  if (std::filesystem::is_regular_file(dir)) dir = dir.parent_path();
  const auto data = load_dataset(dir.empty() ? std::string(".") : dir.string());
  GAConfig cfg = o.config.empty() ? GAConfig{} : parse_ga_config(text::read_file(o.config), o.config);
  if (o.seed) cfg.rng_seed = *o.seed;
  if (o.max_generations) cfg.max_generations = *o.max_generations;
  const ModelParameters start_params = o.start.empty() ? params : load_parameters(o.start);
  const auto initial = ParameterVector::from_params(start_params, cfg.bound_factor);
  auto result = run_ga(data, cfg, initial);
  const double first_stage = result.best_objective;
  if (o.refine_generations > 0) {
    GAConfig fine = cfg;
    fine.epsilon = o.refine_epsilon;
    fine.max_generations = o.refine_generations;
    fine.rng_seed = cfg.rng_seed + 1000;
    auto refined = run_ga(data, fine, result.best);
    refined.history.insert(refined.history.begin(), result.history.begin(), result.history.end());
    refined.generations += result.generations;
    result = std::move(refined);
  }
  const auto best = result.best.to_params();
  const auto br = objective_breakdown(result.best, data);

  ensure_out(c);
  write_out(c, "best.params", format_parameters(best));
  write_out(c, "history.csv", format_history_csv(result));
  std::string rep;
  rep += kv("objective", fmt(result.best_objective));
  rep += kv("trace_term", fmt(br.trace_term));
  rep += kv("cw_term", fmt(br.cw_term));
  rep += kv("amplitude", fmt(br.scale));
  rep += kv("generations", std::to_string(result.generations));
  rep += kv("stalled", result.stalled ? "true" : "false");
  if (o.refine_generations > 0) rep += kv("first_stage_objective", fmt(first_stage));
  rep += kv("R71", fmt(branching_ratio(best, BranchChannel::R71)));
  rep += kv("R27", fmt(branching_ratio(best, BranchChannel::R27)));
  rep += kv("R47", fmt(branching_ratio(best, BranchChannel::R47)));
  write_out(c, "fit_report.txt", rep);
  std::cout << rep;
  RunManifest m{"fit",
                {{"dataset", o.dataset},
                 {"config", o.config.empty() ? "-" : o.config},
                 {"start", o.start.empty() ? "-" : o.start},
                 {"refine_epsilon", fmt(o.refine_epsilon)},
                 {"refine_generations", std::to_string(o.refine_generations)}}};
  m.seed = std::to_string(cfg.rng_seed);
  m.write(c, params);
}

// optimize / speedup -----------------------------------------------------------

struct SweepOpts {
  std::string sweep;
  std::string grid;
  std::optional<double> tol;
  std::vector<std::string> kinds;
  double tau_m = 0.0;
};

SweepSpec load_sweep(const SweepOpts& o) {
  SweepSpec s = o.sweep.empty() ? SweepSpec{} : parse_sweep_spec(text::read_file(o.sweep), o.sweep);
  if (!o.grid.empty()) s.tau_m_grid = text::parse_grid(o.grid);
  if (o.tol) s.sensitivity.init_tol = *o.tol;
  if (!o.kinds.empty()) {
    s.kinds.clear();
    for (const auto& k : o.kinds) s.kinds.push_back(parse_protocol_kind(k));
  }
  s.sensitivity.validate();
  return s;
}

std::string describe(const OptimizedProtocol& o) {
  const auto& s = o.spec;
  std::string r;
  r += kv("kind", to_string(s.kind));
  r += kv("p_r_mw", fmt(s.p_r)) + kv("tau_r_ns", fmt(s.tau_r));
  if (s.kind == ProtocolKind::TPI) r += kv("p_h_mw", fmt(s.p_h)) + kv("tau_h_ns", fmt(s.tau_h));
  if (s.kind != ProtocolKind::RPI) r += kv("p_l_mw", fmt(s.p_l)) + kv("tau_l_ns", fmt(s.tau_l));
  r += kv("tau_p_ns", fmt(s.tau_p)) + kv("tau_i_ns", fmt(s.init_time()));
  r += kv("eta", fmt(o.result.eta));
  r += kv("c_opt", fmt(o.result.c_opt));
  r += kv("photons", fmt(o.result.photons));
  r += kv("readout_window_ns", fmt(o.result.readout.window.length));
  r += kv("init_spread", fmt(o.result.init.spread));
  r += kv("evaluations", std::to_string(o.evaluations));
  return r;
}

void cmd_optimize(Common& c, const SweepOpts& o) {
  const auto params = resolve_params(c);
  const auto s = load_sweep(o);
  if (!(o.tau_m > 0.0)) throw ValidationError("--tau-m must be > 0");
  ensure_out(c);
  std::string all = kv("tau_m_ns", fmt(o.tau_m));
  for (auto kind : s.kinds) {
    const auto best = optimize_protocol(kind, params, s.sensitivity, o.tau_m, s.bounds);
    const std::string name = to_string(kind);
    all += "\n[" + name + "]\n" + describe(best);
    write_out(c, "protocol_" + name + ".seq", format_sequence(build_protocol_sequence(best.spec)));
  }
  write_out(c, "protocols.txt", all);
  std::cout << all;
  RunManifest{"optimize", {{"sweep", o.sweep.empty() ? "-" : o.sweep}, {"tau_m_ns", fmt(o.tau_m)}}}.write(c, params);
}

void cmd_speedup(Common& c, const SweepOpts& o) {
  const auto params = resolve_params(c);
  auto s = load_sweep(o);
  if (s.tau_m_grid.empty()) s.tau_m_grid = text::parse_grid("500:1e5:20:log");
  const auto rep = speedup_sweep(s.tau_m_grid, params, s.sensitivity, s.bounds);
  ensure_out(c);
  write_out(c, "speedup.csv", format_speedup_csv(rep));
  const auto summary = format_speedup_summary(rep);
  write_out(c, "summary.txt", summary);
  std::cout << summary;
  RunManifest{"speedup", {{"sweep", o.sweep.empty() ? "-" : o.sweep}, {"grid", o.grid.empty() ? "-" : o.grid}}}
      .write(c, params);
}

// approx-check -----------------------------------------------------------------

void cmd_approx(Common& c, const GridOpts& o) {
  const auto params = resolve_params(c);
  const auto grid = text::parse_grid(o.grid.empty() ? "1e-4:1:9:log" : o.grid);
  if (o.laser != "init" && o.laser != "readout") throw ValidationError("--laser must be readout or init");
  const auto rows = approx_check(params, grid, o.laser == "init");
  const auto csv = format_approx_csv(rows);
  ensure_out(c);
  write_out(c, "approx.csv", csv);
  std::cout << csv;
  RunManifest{"approx-check", {{"grid", o.grid}, {"laser", o.laser}}}.write(c, params);
}

// background -------------------------------------------------------------------

struct BackgroundOpts {
  std::string grid;
  BackgroundModel model;
  std::optional<double> counts;
  double window_ns = 280.0;
};

void cmd_background(Common& c, const BackgroundOpts& o) {
  const auto params = resolve_params(c);
  const auto grid = text::parse_grid(o.grid.empty() ? "0:20:21" : o.grid);
  o.model.validate();
  std::string csv = o.counts ? "p_h_mw,background_cps,raw_counts,background_counts,corrected_counts,clamped\n"
                             : "p_h_mw,background_cps\n";
  for (double ph : grid) {
    csv += fmt(ph) + "," + fmt(background_rate(o.model, ph));
    if (o.counts) {
      const auto b = subtract_background(*o.counts, {0.0, o.window_ns}, o.model, ph);
      csv += "," + fmt(*o.counts) + "," + fmt(b.background) + "," + fmt(b.counts) + (b.clamped ? ",1" : ",0");
    }
    csv += "\n";
  }
  ensure_out(c);
  write_out(c, "background.csv", csv);
  std::cout << csv;
  RunManifest{"background",
              {{"grid", o.grid},
               {"b_zero", fmt(o.model.b_zero)},
               {"b_inf", fmt(o.model.b_inf)},
               {"p_c", fmt(o.model.p_c)},
               {"counts", o.counts ? fmt(*o.counts) : "-"},
               {"window_ns", fmt(o.window_ns)}}}
      .write(c, params);
}

// analyze ------------------------------------------------------------------------

struct AnalyzeOpts {
  std::string trace0, trace1;
  std::vector<std::string> windows;
  bool background = false;
  double p_h = 0.0;
  BackgroundModel model;
};

void cmd_analyze(Common& c, const AnalyzeOpts& o) {
  const auto params = resolve_params(c);
  const auto t0 = load_measured_trace(o.trace0);
  const auto t1 = load_measured_trace(o.trace1);
  std::vector<IntegrationWindow> windows;
  for (const auto& w : o.windows.empty() ? std::vector<std::string>{"0:50", "0:280"} : o.windows) {
    const auto parts = text::split(w, ':');
    if (parts.size() != 2) throw ValidationError("--window must be start:length, got '" + w + "'");
    windows.push_back({text::parse_double(parts[0], "window start"), text::parse_double(parts[1], "window length")});
  }
  const auto rep = analyze_measured(t0, t1, windows, o.background ? &o.model : nullptr, o.p_h);
  const auto text_rep = format_analysis_report(rep);
  ensure_out(c);
  write_out(c, "analysis.txt", text_rep);
  std::cout << text_rep;
  RunManifest{"analyze",
              {{"trace0", o.trace0},
               {"trace1", o.trace1},
               {"background", o.background ? "on" : "off"},
               {"p_h_mw", fmt(o.p_h)}}}
      .write(c, params);
}

// synthesize ---------------------------------------------------------------------

struct SynthOpts {
  std::string contexts;
  double budget = 0.0;
  std::uint64_t seed = 1;
  std::size_t samples = 500;
  double dt = 1.0;
  std::string cw = "0.1,0.3,1,3,10,30";
  std::string cw_laser = "readout";
};

/// Context list: `<label> <sequence file> [pi]` per line, paths relative to
/// the list file.
std::vector<SequenceContext> load_contexts(const std::string& path) {
  std::vector<SequenceContext> out;
  const auto base = fs::path(path).parent_path();
  std::istringstream in(text::read_file(path));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string label, file, flag;
    if (!(ls >> label)) continue;
    if (!(ls >> file)) throw ValidationError(path + ":" + std::to_string(n) + ": expected '<label> <sequence> [pi]'");
    ls >> flag;
    if (!flag.empty() && flag != "pi") throw ValidationError(path + ":" + std::to_string(n) + ": unknown flag '" + flag + "'");
    const auto seq_path = fs::path(file).is_absolute() ? fs::path(file) : base / file;
    out.push_back({label, load_sequence(seq_path.string()), flag == "pi"});
  }
  if (out.empty()) throw ValidationError(path + ": no contexts");
  return out;
}

void cmd_synthesize(Common& c, const SynthOpts& o) {
  const auto params = resolve_params(c);
  SynthesisOptions so;
  so.photon_budget = o.budget;
  so.seed = o.seed;
  so.samples = o.samples;
  so.dt = o.dt;
  if (o.cw_laser != "init" && o.cw_laser != "readout") throw ValidationError("--cw-laser must be readout or init");
  so.cw_on_init_laser = o.cw_laser == "init";
  const auto cw = o.cw == "none" ? std::vector<double>{} : text::parse_grid(o.cw);
  const auto data = synthesize_dataset(params, load_contexts(o.contexts), cw, so);
  ensure_out(c);
  save_dataset(data, c.out_dir);
  std::cout << "traces = " << data.traces.size() << "\ncw_points = " << data.cw.powers_mw.size() << "\n";
  RunManifest m{"synthesize",
                {{"contexts", o.contexts},
                 {"budget", fmt(o.budget)},
                 {"samples", std::to_string(o.samples)},
                 {"dt_ns", fmt(o.dt)},
                 {"cw", o.cw},
                 {"cw_laser", o.cw_laser}}};
  m.seed = std::to_string(o.seed);
  m.write(c, params);
}

void add_background_flags(CLI::App* sub, BackgroundModel& m) {
  sub->add_option("--b-zero", m.b_zero, "Background at zero high power, counts/s")->capture_default_str();
  sub->add_option("--b-inf", m.b_inf, "Background asymptote, counts/s")->capture_default_str();
  sub->add_option("--p-c", m.p_c, "Decay constant, mW")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eight-level NV charge/spin photodynamics toolkit"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  common.argv.assign(argv + 1, argv + argc);
  app.add_option("--params", common.params_path, "Parameter file (default: $NVDYN_PARAMS, else built-in reference set)");
  app.add_option("--set", common.overrides, "Parameter override key=value, file units (repeatable)");
  app.add_option("--out", common.out_dir, "Output directory")->capture_default_str();

  SimulateOpts sim;
  auto* s_sim = app.add_subcommand("simulate", "Simulate a pulse sequence and report readout contrast");
  s_sim->add_option("--sequence", sim.sequence, "Sequence file")->required();
  s_sim->add_option("--dt", sim.dt, "Sample spacing, ns")->capture_default_str();
  s_sim->add_option("--initial", sim.initial, "Initial state: periodic, relaxed or l1")->capture_default_str();

  GridOpts steady;
  auto* s_steady = app.add_subcommand("steady", "Steady states and relaxed initialization errors over power");
  s_steady->add_option("--grid", steady.grid, "Power grid, mW (list or start:stop:count[:log])");
  s_steady->add_option("--laser", steady.laser, "readout or init")->capture_default_str();

  FitOpts fit;
  auto* s_fit = app.add_subcommand("fit", "Genetic-algorithm fit of a dataset");
  s_fit->add_option("--dataset", fit.dataset, "Dataset directory or its dataset.txt")->required();
  s_fit->add_option("--config", fit.config, "GA configuration file");
  s_fit->add_option("--start", fit.start, "Starting parameter file (default: --params)");
  s_fit->add_option("--seed", fit.seed, "RNG seed (overrides the config)");
  s_fit->add_option("--max-generations", fit.max_generations, "Generation limit (overrides the config)");
  s_fit->add_option("--refine-epsilon", fit.refine_epsilon, "Mutation half-width of a second refinement stage");
  s_fit->add_option("--refine-generations", fit.refine_generations, "Generations of the refinement stage (0: off)");

  SweepOpts opt;
  auto* s_opt = app.add_subcommand("optimize", "Optimize initialization protocols at one tau_M");
  s_opt->add_option("--tau-m", opt.tau_m, "Free-evolution time, ns")->required();
  s_opt->add_option("--kind", opt.kinds, "rpi, spi or tpi (repeatable; default all)");
  s_opt->add_option("--sweep", opt.sweep, "Sweep specification file (bounds, fixed values)");
  s_opt->add_option("--tol", opt.tol, "Initialization tolerance");

  SweepOpts sweep;
  auto* s_speed = app.add_subcommand("speedup", "Speedup of SPI and TPI over RPI across tau_M");
  s_speed->add_option("--sweep", sweep.sweep, "Sweep specification file");
  s_speed->add_option("--grid", sweep.grid, "tau_M grid, ns (overrides the sweep file)");
  s_speed->add_option("--tol", sweep.tol, "Initialization tolerance");

  GridOpts approx;
  approx.laser = "init";
  auto* s_approx = app.add_subcommand("approx-check", "Low-power rate approximations against the full model");
  s_approx->add_option("--grid", approx.grid, "Power grid, mW");
  s_approx->add_option("--laser", approx.laser, "readout or init")->capture_default_str();

  BackgroundOpts bg;
  auto* s_bg = app.add_subcommand("background", "Background rate model and subtraction");
  s_bg->add_option("--grid", bg.grid, "High-power grid, mW");
  add_background_flags(s_bg, bg.model);
  s_bg->add_option("--counts", bg.counts, "Raw window counts to correct");
  s_bg->add_option("--window-ns", bg.window_ns, "Window length for --counts, ns")->capture_default_str();

  AnalyzeOpts an;
  auto* s_an = app.add_subcommand("analyze", "Contrast and SNR of a measured trace pair");
  s_an->add_option("--trace0", an.trace0, "Trace without pi-pulse (t_ns,counts)")->required();
  s_an->add_option("--trace1", an.trace1, "Trace with pi-pulse (t_ns,counts)")->required();
  s_an->add_option("--window", an.windows, "Window start:length in ns (repeatable)");
  s_an->add_flag("--background", an.background, "Subtract the background model");
  s_an->add_option("--p-h", an.p_h, "High power for the background model, mW");
  add_background_flags(s_an, an.model);

  SynthOpts syn;
  auto* s_syn = app.add_subcommand("synthesize", "Forward-simulate a Poisson-noised dataset");
  s_syn->add_option("--contexts", syn.contexts, "Context list file")->required();
  s_syn->add_option("--budget", syn.budget, "Expected photons in the first trace (0: noiseless)");
  s_syn->add_option("--seed", syn.seed, "Noise seed")->capture_default_str();
  s_syn->add_option("--samples", syn.samples, "Samples per trace")->capture_default_str();
  s_syn->add_option("--dt", syn.dt, "Sample spacing, ns")->capture_default_str();
  s_syn->add_option("--cw", syn.cw, "CW powers, mW, or 'none'")->capture_default_str();
  s_syn->add_option("--cw-laser", syn.cw_laser, "readout or init")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*s_sim) cmd_simulate(common, sim);
    else if (*s_steady) cmd_steady(common, steady);
    else if (*s_fit) cmd_fit(common, fit);
    else if (*s_opt) cmd_optimize(common, opt);
    else if (*s_speed) cmd_speedup(common, sweep);
    else if (*s_approx) cmd_approx(common, approx);
    else if (*s_bg) cmd_background(common, bg);
    else if (*s_an) cmd_analyze(common, an);
    else if (*s_syn) cmd_synthesize(common, syn);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
