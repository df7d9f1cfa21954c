#include "nvdyn/fitting.hpp"

#include "nvdyn/text_io.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

namespace nvdyn {

namespace {

constexpr std::array<const char*, kGenes> kGeneNames{
    "lifetime_2_7_ns", "lifetime_4_7_ns", "lifetime_7_1_ns", "lifetime_7_3_ns",
    "sigma_2_5",       "sigma_7_8",       "sigma_5_6",       "sigma_6_7",
    "sigma_6_1",       "sigma_6_3",       "ratio_8_4_over_8_2", "ratio_8_5_over_8_2",
    "kappa_readout_mhz_per_mw", "kappa_init_mhz_per_mw",
};

constexpr std::array<double ModelParameters::*, kGenes> kGeneFields{
    &ModelParameters::gamma_27, &ModelParameters::gamma_47, &ModelParameters::gamma_71,
    &ModelParameters::gamma_73, &ModelParameters::sigma_25, &ModelParameters::sigma_78,
    &ModelParameters::sigma_56, &ModelParameters::sigma_67, &ModelParameters::sigma_61,
    &ModelParameters::sigma_63, &ModelParameters::l8_ratio_42, &ModelParameters::l8_ratio_52,
    &ModelParameters::kappa_readout, &ModelParameters::kappa_init,
};

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace

const char* gene_name(int gene) {
  if (gene < 0 || gene >= kGenes) throw ValidationError("gene index out of range");
  return kGeneNames[static_cast<std::size_t>(gene)];
}

ParameterVector ParameterVector::from_params(const ModelParameters& params, double bound_factor) {
  params.validate();
  if (!(bound_factor >= 1.0)) throw ValidationError("bound factor must be >= 1");
  ParameterVector v;
  v.base = params;
  for (std::size_t g = 0; g < kGenes; ++g) {
    v.values[g] = params.*kGeneFields[g];
    v.lower[g] = v.values[g] / bound_factor;
    v.upper[g] = v.values[g] * bound_factor;
  }
  return v;
}

ModelParameters ParameterVector::to_params() const {
  ModelParameters p = base;
  for (std::size_t g = 0; g < kGenes; ++g) p.*kGeneFields[g] = values[g];
  p.sigma_45 = p.sigma_25;
  return p;
}

void ParameterVector::validate() const {
  for (std::size_t g = 0; g < kGenes; ++g) {
    const double v = values[g];
    const bool may_be_zero = g == GRatio52;
    if (!std::isfinite(v) || v < 0.0 || (!may_be_zero && v == 0.0))
      throw ValidationError(std::string("gene ") + kGeneNames[g] + " must be positive");
    if (!(lower[g] <= upper[g])) throw ValidationError(std::string("gene ") + kGeneNames[g] + " has empty bounds");
    if (v < lower[g] || v > upper[g])
      throw ValidationError(std::string("gene ") + kGeneNames[g] + " lies outside its bounds");
  }
}

void ParameterVector::clamp() {
  for (std::size_t g = 0; g < kGenes; ++g) values[g] = std::clamp(values[g], lower[g], upper[g]);
}

void FitDataset::validate() const {
  if (traces.empty() && cw.powers_mw.empty()) throw ValidationError("fit dataset is empty");
  for (const auto& t : traces) {
    t.sequence.validate();
    if (!t.sequence.readout_segment) throw ValidationError("trace '" + t.label + "' has no readout segment");
    if (t.measured.empty()) throw ValidationError("trace '" + t.label + "' has no samples");
    if (!(t.dt > 0.0)) throw ValidationError("trace '" + t.label + "' needs dt > 0");
    const double span = t.dt * static_cast<double>(t.measured.size() - 1);
    if (span > t.sequence.segments[*t.sequence.readout_segment].duration + 1e-9)
      throw ValidationError("trace '" + t.label + "' is longer than its readout segment");
  }
  if (cw.powers_mw.size() != cw.measured.size()) throw ValidationError("CW sweep columns differ in length");
  for (double p : cw.powers_mw)
    if (!(p > 0.0)) throw ValidationError("CW powers must be > 0");
  if (!(cw.integration_ns > 0.0)) throw ValidationError("CW integration time must be > 0");
  if (!(cw_weight >= 0.0)) throw ValidationError("cw_weight must be >= 0");
}

std::vector<double> simulate_trace(const ModelParameters& params, const TraceContext& context) {
  PulseSequence seq = context.sequence;
  const std::size_t r = *seq.readout_segment;
  if (context.pi_pulse) seq.pi_pulse_markers.push_back(r);
  const PopulationState start = periodic_state(seq, params, r);
  const RateGenerator gen = build_generator(params, seq.segments[r].drive);
  return signal_under(start.vector(), gen, params, context.measured.size(), context.dt);
}

std::vector<double> simulate_cw(const ModelParameters& params, const CwSweep& sweep) {
  std::vector<double> out;
  out.reserve(sweep.powers_mw.size());
  for (double p : sweep.powers_mw) {
    const LaserDrive d = sweep.on_init_laser ? LaserDrive{0.0, p} : LaserDrive{p, 0.0};
    out.push_back(luminescence(steady_state(build_generator(params, d)), params) * sweep.integration_ns);
  }
  return out;
}

ObjectiveBreakdown objective_breakdown(const ParameterVector& params, const FitDataset& data) {
  ObjectiveBreakdown out;
  std::vector<std::vector<double>> sims;
  std::vector<double> cw;
  try {
    const ModelParameters p = params.to_params();
    p.validate();
    for (const auto& t : data.traces) sims.push_back(simulate_trace(p, t));
    if (!data.cw.powers_mw.empty()) cw = simulate_cw(p, data.cw);
  } catch (const std::exception&) {
    out.failed = true;
    out.total = kFailurePenalty;
    return out;
  }

  // Per-term sums for the weighted closed-form amplitude.
  double t_sm = 0, t_ss = 0, t_mm = 0, c_sm = 0, c_ss = 0, c_mm = 0;
  for (std::size_t k = 0; k < sims.size(); ++k)
    for (std::size_t i = 0; i < sims[k].size(); ++i) {
      const double s = sims[k][i], m = data.traces[k].measured[i];
      t_sm += s * m;
      t_ss += s * s;
      t_mm += m * m;
    }
  for (std::size_t j = 0; j < cw.size(); ++j) {
    const double s = cw[j], m = data.cw.measured[j];
    c_sm += s * m;
    c_ss += s * s;
    c_mm += m * m;
  }
  const double wt = t_mm > 0.0 ? 1.0 / t_mm : 0.0;
  const double wc = c_mm > 0.0 ? data.cw_weight / c_mm : 0.0;
  const double den = wt * t_ss + wc * c_ss;
  out.scale = den > 0.0 ? (wt * t_sm + wc * c_sm) / den : 0.0;

  double tr = 0.0, cr = 0.0;
  for (std::size_t k = 0; k < sims.size(); ++k)
    for (std::size_t i = 0; i < sims[k].size(); ++i) {
      const double r = out.scale * sims[k][i] - data.traces[k].measured[i];
      tr += r * r;
    }
  for (std::size_t j = 0; j < cw.size(); ++j) {
    const double r = out.scale * cw[j] - data.cw.measured[j];
    cr += r * r;
  }
  out.trace_term = tr * wt;
  out.cw_term = cr * wc;
  out.total = out.trace_term + out.cw_term;
  if (!std::isfinite(out.total)) {
    out.failed = true;
    out.total = kFailurePenalty;
  }
  return out;
}

double objective(const ParameterVector& params, const FitDataset& data) {
  return objective_breakdown(params, data).total;
}

void GAConfig::validate() const {
  if (offspring_count < 2) throw ValidationError("offspring_count must be >= 2");
  if (!(mutation_probability >= 0.0) || mutation_probability > 1.0)
    throw ValidationError("mutation_probability must lie in [0, 1]");
  if (!(epsilon >= 0.0) || !(epsilon < 1.0)) throw ValidationError("epsilon must lie in [0, 1)");
  if (max_generations < 0 || stall_generations < 1)
    throw ValidationError("max_generations must be >= 0 and stall_generations >= 1");
  if (!(bound_factor >= 1.0)) throw ValidationError("bound_factor must be >= 1");
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ValidationError("Rng::index needs n > 0");
  return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed;
  std::uint64_t h = splitmix64(x);
  x ^= a * 0xD1B54A32D192ED03ULL;
  h ^= splitmix64(x);
  x ^= b * 0x8CB92BA72F3D8DD7ULL;
  h ^= splitmix64(x);
  return Rng(h);
}

ParameterVector crossover_at(const ParameterVector& p1, const ParameterVector& p2, std::size_t cut) {
  if (cut > kGenes) throw ValidationError("crossover cut out of range");
  ParameterVector child = p1;
  for (std::size_t g = 0; g < cut; ++g) child.values[g] = p2.values[g];
  return child;
}

std::vector<ParameterVector> crossover(const ParameterVector& p1, const ParameterVector& p2, int offspring_count,
                                       Rng& rng) {
  if (offspring_count < 1) throw ValidationError("offspring_count must be >= 1");
  std::vector<ParameterVector> out;
  while (static_cast<int>(out.size()) < offspring_count) {
    std::size_t a = 1 + rng.index(kGenes - 1); // cut in [1, n-1]
    std::size_t b = kGenes;
    if (rng.uniform() < 0.5) {
      b = 1 + rng.index(kGenes - 1);
      if (a > b) std::swap(a, b);
      if (a == b) b = kGenes;
    }
    // Block [a, b) swapped between the parents.
    ParameterVector c1 = p1, c2 = p2;
    for (std::size_t g = a; g < b; ++g) std::swap(c1.values[g], c2.values[g]);
    out.push_back(c1);
    if (static_cast<int>(out.size()) < offspring_count) out.push_back(c2);
  }
  return out;
}

ParameterVector mutate(const ParameterVector& child, const GAConfig& cfg, Rng& rng) {
  ParameterVector out = child;
  for (std::size_t g = 0; g < kGenes; ++g) {
    const double roll = rng.uniform();
    const double delta = rng.uniform(1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
    if (roll < cfg.mutation_probability) out.values[g] *= delta;
  }
  out.clamp();
  return out;
}

GAResult run_ga(const FitDataset& data, const GAConfig& cfg, const ParameterVector& initial) {
  cfg.validate();
  data.validate();
  initial.validate();

  ParameterVector second = initial;
  Rng init_rng = Rng::derive(cfg.rng_seed, 0, 0);
  for (std::size_t g = 0; g < kGenes; ++g) {
    const double lo = initial.lower[g], hi = initial.upper[g];
    const double u = init_rng.uniform();
    second.values[g] = lo > 0.0 ? std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))) : lo + u * (hi - lo);
  }
  second.clamp();

  struct Member {
    ParameterVector genes;
    double value;
  };
  std::array<Member, 2> parents{{{initial, objective(initial, data)}, {second, objective(second, data)}}};
  if (parents[1].value < parents[0].value) std::swap(parents[0], parents[1]);

  GAResult result;
  int stall = 0;
  for (int gen = 1; gen <= cfg.max_generations; ++gen) {
    Rng rng = Rng::derive(cfg.rng_seed, static_cast<std::uint64_t>(gen), 0);
    auto kids = crossover(parents[0].genes, parents[1].genes, cfg.offspring_count, rng);
    std::vector<double> values(kids.size());
    for (std::size_t i = 0; i < kids.size(); ++i) {
      Rng stream = Rng::derive(cfg.rng_seed, static_cast<std::uint64_t>(gen), i + 1);
      kids[i] = mutate(kids[i], cfg, stream);
    }
    detail::parallel_for(kids.size(), [&](std::size_t i) { values[i] = objective(kids[i], data); });

    // Parents first so ties keep the incumbents.
    std::vector<Member> pool{parents[0], parents[1]};
    for (std::size_t i = 0; i < kids.size(); ++i) pool.push_back({kids[i], values[i]});
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pool[a].value < pool[b].value; });
    const double previous = parents[0].value;
    parents = {pool[order[0]], pool[order[1]]};

    result.history.push_back(parents[0].value);
    result.generations = gen;
    stall = parents[0].value < previous ? 0 : stall + 1;
    if (stall >= cfg.stall_generations) {
      result.stalled = true;
      break;
    }
  }
  result.best = parents[0].genes;
  result.best_objective = parents[0].value;
  return result;
}

FitDataset synthesize_dataset(const ModelParameters& params, const std::vector<SequenceContext>& sequences,
                              const std::vector<double>& cw_powers, const SynthesisOptions& options) {
  params.validate();
  if (!(options.photon_budget >= 0.0)) throw ValidationError("photon budget must be >= 0");
  if (options.samples == 0 || !(options.dt > 0.0)) throw ValidationError("samples and dt must be > 0");
  FitDataset data;
  for (const auto& s : sequences) {
    TraceContext t;
    t.label = s.label;
    t.sequence = s.sequence;
    t.pi_pulse = s.pi_pulse;
    t.dt = options.dt;
    t.measured.assign(options.samples, 0.0);
    t.measured = simulate_trace(params, t);
    data.traces.push_back(std::move(t));
  }
  data.cw.powers_mw = cw_powers;
  data.cw.on_init_laser = options.cw_on_init_laser;
  data.cw.integration_ns = options.cw_integration_ns;
  data.cw.measured = simulate_cw(params, data.cw);
  data.validate();

  if (options.photon_budget > 0.0) {
    double reference = 0.0;
    if (!data.traces.empty()) {
      for (double v : data.traces.front().measured) reference += v;
    } else {
      for (double v : data.cw.measured) reference += v;
    }
    if (!(reference > 0.0)) throw NumericalError("reference trace carries no signal");
    const double k = options.photon_budget / reference;
    Rng rng = Rng::derive(options.seed, 0x5EED, 0);
    auto noisy = [&](double mean) {
      const double lambda = k * mean;
      if (!(lambda > 0.0)) return 0.0;
      std::poisson_distribution<long long> pd(lambda);
      return static_cast<double>(pd(rng.engine()));
    };
    for (auto& t : data.traces)
      for (double& v : t.measured) v = noisy(v);
    for (double& v : data.cw.measured) v = noisy(v);
  }
  return data;
}

namespace {

namespace fs = std::filesystem;

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ValidationError(where + ": expected a boolean, got '" + v + "'");
}

} // namespace

FitDataset load_dataset(const std::string& directory) {
  const fs::path dir(directory);
  const std::string index = (dir / "dataset.txt").string();
  FitDataset data;
  std::map<int, std::map<std::string, std::pair<std::string, std::string>>> traces;
  std::string cw_file;
  for (const auto& kv : text::parse_key_values(text::read_file(index), index)) {
    const std::string where = index + ":" + std::to_string(kv.line);
    if (kv.key == "cw_weight") {
      data.cw_weight = text::parse_double(kv.value, where);
    } else if (kv.key == "cw_file") {
      cw_file = kv.value;
    } else if (kv.key == "cw_laser") {
      if (kv.value != "readout" && kv.value != "init") throw ValidationError(where + ": cw_laser is readout or init");
      data.cw.on_init_laser = kv.value == "init";
    } else if (kv.key == "cw_integration_ns") {
      data.cw.integration_ns = text::parse_double(kv.value, where);
    } else if (kv.key.rfind("trace.", 0) == 0) {
      const auto parts = text::split(kv.key, '.');
      if (parts.size() != 3) throw ValidationError(where + ": expected trace.<n>.<field>");
      const int n = static_cast<int>(text::parse_double(parts[1], where));
      traces[n][parts[2]] = {kv.value, where};
    } else {
      throw ValidationError(where + ": unknown key '" + kv.key + "'");
    }
  }
  for (auto& [n, fields] : traces) {
    TraceContext t;
    t.label = "trace." + std::to_string(n);
    for (auto& [field, vw] : fields) {
      const auto& [value, where] = vw;
      if (field == "label") {
        t.label = value;
      } else if (field == "sequence") {
        t.sequence = load_sequence((dir / value).string());
      } else if (field == "pi_pulse") {
        t.pi_pulse = parse_bool(value, where);
      } else if (field == "dt_ns") {
        t.dt = text::parse_double(value, where);
      } else if (field == "data") {
        const auto table = text::load_csv((dir / value).string());
        t.measured = table.column_values("counts");
      } else {
        throw ValidationError(where + ": unknown trace field '" + field + "'");
      }
    }
    data.traces.push_back(std::move(t));
  }
  if (!cw_file.empty()) {
    const auto table = text::load_csv((dir / cw_file).string());
    data.cw.powers_mw = table.column_values("power_mw");
    data.cw.measured = table.column_values("counts");
  }
  data.validate();
  return data;
}

void save_dataset(const FitDataset& data, const std::string& directory) {
  data.validate();
  const fs::path dir(directory);
  fs::create_directories(dir);
  std::string index = "# fit dataset\n";
  index += "cw_weight = " + text::format_double(data.cw_weight) + "\n";
  index += std::string("cw_laser = ") + (data.cw.on_init_laser ? "init" : "readout") + "\n";
  index += "cw_integration_ns = " + text::format_double(data.cw.integration_ns) + "\n";
  if (!data.cw.powers_mw.empty()) {
    index += "cw_file = cw.csv\n";
    text::CsvTable cw{{"power_mw", "counts"}, {}};
    for (std::size_t j = 0; j < data.cw.powers_mw.size(); ++j) cw.rows.push_back({data.cw.powers_mw[j], data.cw.measured[j]});
    text::write_file((dir / "cw.csv").string(), text::format_csv(cw));
  }
  for (std::size_t k = 0; k < data.traces.size(); ++k) {
    const auto& t = data.traces[k];
    const std::string n = std::to_string(k + 1), stem = "trace_" + n;
    index += "trace." + n + ".label = " + t.label + "\n";
    index += "trace." + n + ".sequence = " + stem + ".seq\n";
    index += "trace." + n + ".pi_pulse = " + (t.pi_pulse ? "1" : "0") + "\n";
    index += "trace." + n + ".dt_ns = " + text::format_double(t.dt) + "\n";
    index += "trace." + n + ".data = " + stem + ".csv\n";
    text::write_file((dir / (stem + ".seq")).string(), format_sequence(t.sequence));
    text::CsvTable csv{{"t_ns", "counts"}, {}};
    for (std::size_t i = 0; i < t.measured.size(); ++i) csv.rows.push_back({t.dt * static_cast<double>(i), t.measured[i]});
    text::write_file((dir / (stem + ".csv")).string(), text::format_csv(csv));
  }
  text::write_file((dir / "dataset.txt").string(), index);
}

GAConfig parse_ga_config(const std::string& text, const std::string& source) {
  GAConfig cfg;
  for (const auto& kv : text::parse_key_values(text, source)) {
    const std::string where = source + ":" + std::to_string(kv.line);
    const double v = text::parse_double(kv.value, where);
    auto as_int = [&] {
      if (v != std::floor(v) || std::abs(v) > 1e9) throw ValidationError(where + ": expected an integer");
      return static_cast<int>(v);
    };
    if (kv.key == "offspring_count") cfg.offspring_count = as_int();
    else if (kv.key == "mutation_probability") cfg.mutation_probability = v;
    else if (kv.key == "epsilon") cfg.epsilon = v;
    else if (kv.key == "max_generations") cfg.max_generations = as_int();
    else if (kv.key == "stall_generations") cfg.stall_generations = as_int();
    else if (kv.key == "rng_seed") {
      if (v < 0 || v != std::floor(v)) throw ValidationError(where + ": seed must be a nonnegative integer");
      cfg.rng_seed = std::stoull(kv.value);
    } else if (kv.key == "bound_factor") cfg.bound_factor = v;
    else throw ValidationError(where + ": unknown GA setting '" + kv.key + "'");
  }
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return cfg;
}

std::string format_history_csv(const GAResult& result) {
  std::string out = "generation,best_objective\n";
  for (std::size_t i = 0; i < result.history.size(); ++i)
    out += std::to_string(i + 1) + "," + text::format_double(result.history[i]) + "\n";
  return out;
}

} // namespace nvdyn
