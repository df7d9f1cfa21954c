// Acceptance harness: one PASS/FAIL line per criterion, details indented.

#include "synthetic_contexts.hpp"

#include "nvdyn/approx.hpp"
#include "nvdyn/protocols.hpp"

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace nvdyn;

namespace {

int failures = 0;

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

void detail(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void detail(const char* fmt, ...) {
  va_list ap;
  va_start(ap, fmt);
  std::printf("    ");
  std::vprintf(fmt, ap);
  std::printf("\n");
  va_end(ap);
}

void criterion(int id, const char* name, const std::function<bool()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body();
  } catch (const std::exception& e) {
    detail("exception: %s", e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] %2d %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, name, secs);
  std::fflush(stdout);
  if (!ok) ++failures;
}

PopulationState random_state(std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Vector8 v;
  for (int i = 0; i < kLevels; ++i) v(i) = e(rng);
  return PopulationState(v / v.sum());
}

LaserDrive random_drive(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lg(-3.0, 2.0);
  return {std::pow(10.0, lg(rng)), std::pow(10.0, lg(rng))};
}

ReadoutOptimum read(const PopulationState& s, const ModelParameters& p, double pr) {
  return optimize_readout_window(readout_signals(s, p, pr, 3000.0, 1.0));
}

} // namespace

int main() {
  const auto p = ModelParameters::reference();

  criterion(1, "branching ratios R71 0.93, R27 0.12, R47 0.46 (+-0.01)", [&] {
    const double r71 = branching_ratio(p, BranchChannel::R71);
    const double r27 = branching_ratio(p, BranchChannel::R27);
    const double r47 = branching_ratio(p, BranchChannel::R47);
    detail("R71 = %.4f  R27 = %.4f  R47 = %.4f", r71, r27, r47);
    return within(r71, 0.93, 0.01) && within(r27, 0.12, 0.01) && within(r47, 0.46, 0.01);
  });

  criterion(2, "low-power spin polarization limit 0.98 +- 0.005", [&] {
    const double v = max_spin_polarization(p);
    detail("limit = %.4f", v);
    return within(v, 0.98, 0.005);
  });

  criterion(3, "relaxed NV0 fraction 0.195 +- 0.015 (<= 0.1 mW), 0.08 +- 0.015 (>= 20 mW)", [&] {
    bool ok = true;
    for (double pw : {0.001, 0.01, 0.1}) {
      const double f = relax(steady_state(build_generator(p, {pw, 0.0})), p)[L5];
      const bool pass = within(f, 0.195, 0.015);
      detail("%7.3f mW: %.4f %s", pw, f, pass ? "ok" : "out of band");
      ok = ok && pass;
    }
    for (double pw : {20.0, 50.0, 100.0}) {
      const double f = relax(steady_state(build_generator(p, {pw, 0.0})), p)[L5];
      const bool pass = within(f, 0.08, 0.015);
      detail("%7.3f mW: %.4f %s", pw, f, pass ? "ok" : "out of band");
      ok = ok && pass;
    }
    return ok;
  });

  criterion(4, "quench floor 0.35 +- 0.03 at 100 mW high power, 0.6 mW readout", [&] {
    const double q = quench_depth(p, 100.0, 0.6);
    detail("quench depth = %.4f", q);
    return within(q, 0.35, 0.03);
  });

  criterion(5, "contrast limits: two-power 0.48/0.38, perfect 0.52/0.41 (+-0.02)", [&] {
    const auto high = steady_state(build_generator(p, {0.0, 20.0}));
    const auto low = relax(propagate(high, build_generator(p, {0.0, 0.006}), 9.0e4), p);
    const auto tpi = read(low, p, 1.0);
    const auto perfect = read(PopulationState::basis(L1), p, 1.0);
    detail("two-power init: max %.4f, best-SNR %.4f (window %.0f ns)", tpi.max_contrast, tpi.contrast,
           tpi.window.length);
    detail("perfect init:   max %.4f, best-SNR %.4f (window %.0f ns)", perfect.max_contrast, perfect.contrast,
           perfect.window.length);
    return within(tpi.max_contrast, 0.48, 0.02) && within(tpi.contrast, 0.38, 0.02) &&
           within(perfect.max_contrast, 0.52, 0.02) && within(perfect.contrast, 0.41, 0.02);
  });

  criterion(6, "contrast from initial populations: 0.39 at L0 = 1, 0.33 at the max-population row (+-0.01)", [&] {
    const double a = population_contrast(p, 1.0, 0.0, 0.0);
    const double b = population_contrast(p, 0.79, 0.014, 1.0 - 0.79 - 0.014);
    detail("L0 = 1: %.4f   L0 = 0.79, L1 = 0.014, L5 = 0.196: %.4f", a, b);
    return within(a, 0.39, 0.01) && within(b, 0.33, 0.01);
  });

  criterion(7, "speedup: TPI >= 1.5 at tau_M >= 50 us, 1.2 +- 0.1 at 500 ns; SPI, TPI > 1 everywhere", [&] {
    std::vector<double> grid;
    for (int i = 0; i < 20; ++i) grid.push_back(500.0 * std::pow(200.0, i / 19.0));
    SensitivityConfig cfg;
    const auto rep = speedup_sweep(grid, p, cfg);
    bool long_ok = true, short_ok = false, all_above = true;
    detail("tau_M_ns   T_RPI/T_SPI  T_RPI/T_TPI   TPI p_l_mw  tau_l_ns");
    for (const auto& row : rep.rows) {
      const double s = 1.0 / row.t_spi_over_rpi, t = 1.0 / row.t_tpi_over_rpi;
      detail("%9.0f  %11.3f  %11.3f  %11.4f  %8.0f", row.tau_m, s, t, row.tpi.spec.p_l, row.tpi.spec.tau_l);
      if (row.tau_m >= 5e4 - 1e-6 && !(t >= 1.5)) long_ok = false;
      if (std::abs(row.tau_m - 500.0) < 1e-6) short_ok = within(t, 1.2, 0.1);
      if (!(s > 1.0) || !(t > 1.0)) all_above = false;
    }
    detail("long tau_M >= 1.5: %s   500 ns in 1.2 +- 0.1: %s   all > 1: %s", long_ok ? "yes" : "no",
           short_ok ? "yes" : "no", all_above ? "yes" : "no");

    // Informational: the same search with the high pulse left free.
    ProtocolBounds free_high;
    free_high.fixed_p_h.reset();
    free_high.fixed_tau_h.reset();
    for (double tm : {500.0, 5e4, 1e5}) {
      const auto r = optimize_protocol(ProtocolKind::RPI, p, cfg, tm, free_high);
      const auto t = optimize_protocol(ProtocolKind::TPI, p, cfg, tm, free_high);
      detail("info, free high pulse: tau_M %.0f ns  T_RPI/T_TPI %.3f  (p_h %.1f mW, tau_h %.0f ns)", tm,
             r.result.eta * r.result.eta / (t.result.eta * t.result.eta), t.spec.p_h, t.spec.tau_h);
    }
    return long_ok && short_ok && all_above;
  });

  criterion(8, "short-sequence regime: TPI max contrast 0.44, RPI 0.41 (+-0.02) at 0.7 mW", [&] {
    PulseSequence tpi;
    tpi.segments = {{{0.7, 0.0}, 3000.0}, {{0.0, 21.0}, 150.0}, {{}, 200.0}, {{0.0, 0.09}, 2000.0}};
    tpi.readout_segment = 0;
    PulseSequence rpi;
    rpi.segments = {{{0.7, 0.0}, 3000.0}, {{}, 1000.0}};
    rpi.readout_segment = 0;
    const auto a = read(periodic_state(tpi, p, 0), p, 0.7);
    const auto b = read(periodic_state(rpi, p, 0), p, 0.7);
    detail("TPI max %.4f (best-SNR %.4f)   RPI max %.4f (best-SNR %.4f)", a.max_contrast, a.contrast,
           b.max_contrast, b.contrast);
    return within(a.max_contrast, 0.44, 0.02) && within(b.max_contrast, 0.41, 0.02);
  });

  criterion(9, "property suites", [&] {
    std::mt19937_64 rng(2024);
    bool all = true;
    const auto report = [&](const char* name, bool ok) {
      detail("%-44s %s", name, ok ? "ok" : "VIOLATED");
      all = all && ok;
    };

    bool cols = true;
    for (int k = 0; k < 1000; ++k) {
      const Matrix8 m = build_generator(p, random_drive(rng)).matrix();
      const double scale = m.cwiseAbs().maxCoeff();
      for (int c = 0; c < kLevels; ++c) cols = cols && std::abs(m.col(c).sum()) <= 1e-12 * scale;
    }
    report("generator column sums vanish", cols);

    bool cons = true;
    std::uniform_real_distribution<double> lt(-2.0, 6.0);
    for (int k = 0; k < 10000; ++k) {
      const auto out = propagate(random_state(rng), build_generator(p, random_drive(rng)), std::pow(10.0, lt(rng)));
      cons = cons && std::abs(out.vector().sum() - 1.0) <= 1e-9 && out.vector().minCoeff() >= 0.0;
    }
    report("conservation and nonnegativity (1e4 runs)", cons);

    bool semi = true;
    for (int k = 0; k < 500; ++k) {
      const auto s = random_state(rng);
      const auto g = build_generator(p, random_drive(rng));
      const double a = std::pow(10.0, lt(rng) / 2), b = std::pow(10.0, lt(rng) / 2);
      semi = semi && (propagate(propagate(s, g, a), g, b).vector() - propagate(s, g, a + b).vector())
                             .cwiseAbs()
                             .maxCoeff() < 1e-9;
    }
    report("semigroup", semi);

    bool fixed = true;
    for (int k = 0; k < 200; ++k) {
      const auto g = build_generator(p, random_drive(rng));
      const auto ss = steady_state(g);
      fixed = fixed && (g.matrix() * ss.vector()).cwiseAbs().maxCoeff() < 1e-8 &&
              (propagate(ss, g, 1e4).vector() - ss.vector()).cwiseAbs().maxCoeff() < 1e-8;
    }
    report("steady-state fixed point residual < 1e-8", fixed);

    bool inv = true;
    for (int k = 0; k < 1000; ++k) {
      const auto s = random_state(rng);
      inv = inv && apply_pi_pulse(apply_pi_pulse(s)) == s;
    }
    report("pi-pulse involution", inv);

    bool ident = true, homog = true;
    std::uniform_real_distribution<double> u(1e-3, 1e4), ls(-5.0, 5.0);
    for (int k = 0; k < 10000; ++k) {
      double a = u(rng), b = u(rng);
      if (a < b) std::swap(a, b);
      const double c = contrast(a, b);
      ident = ident && std::abs(optical_contrast(a, b) - c / (2.0 - c)) <= 1e-12 * std::max(1.0, std::abs(c));
      const double s = std::exp(ls(rng));
      homog = homog && std::abs(snr(s * a, s * b) - std::sqrt(s) * snr(a, b)) <=
                           1e-10 * std::max(1.0, std::abs(snr(s * a, s * b)));
    }
    report("contrast / optical-contrast identity", ident);
    report("SNR homogeneity", homog);

    SynthesisOptions so;
    so.samples = 200;
    const auto data = synthesize_dataset(p, synthetic::fit_contexts(), synthetic::cw_powers(), so);
    const auto start = synthetic::jittered_start(p);
    GAConfig cfg;
    cfg.max_generations = 100;
    const auto r1 = run_ga(data, cfg, start);
    const auto r2 = run_ga(data, cfg, start);
    bool elit = true;
    for (std::size_t i = 1; i < r1.history.size(); ++i) elit = elit && r1.history[i] <= r1.history[i - 1];
    report("GA elitism", elit && r1.best_objective <= objective(start, data));

    bool prov = true, bounds = true;
    auto pa = ParameterVector::from_params(p), pb = pa;
    for (int g = 0; g < kGenes; ++g) {
      pa.values[g] = pa.lower[g] * 1.01;
      pb.values[g] = pb.upper[g] * 0.99;
    }
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
      Rng cr(seed);
      for (const auto& kid : crossover(pa, pb, cfg.offspring_count, cr)) {
        for (int g = 0; g < kGenes; ++g) prov = prov && (kid.values[g] == pa.values[g] || kid.values[g] == pb.values[g]);
        const auto m = mutate(kid, cfg, cr);
        for (int g = 0; g < kGenes; ++g) bounds = bounds && m.values[g] >= m.lower[g] && m.values[g] <= m.upper[g];
      }
    }
    report("GA gene provenance", prov);
    report("GA bounds", bounds);
    report("GA determinism", r1.history == r2.history && r1.best.values == r2.best.values);

    std::vector<double> powers;
    for (double lg = -1.0; lg >= -4.0; lg -= 0.25) powers.push_back(std::pow(10.0, lg));
    const auto rows = approx_check(p, powers);
    bool asym = true;
    for (const char* ch : {"ionization", "polarization", "recapture"}) {
      double prev = 1e300;
      for (const auto& row : rows) {
        if (row.channel != ch) continue;
        asym = asym && std::abs(row.relative_error) <= prev;
        prev = std::abs(row.relative_error);
      }
    }
    report("approximations improve as power decreases", asym);
    return all;
  });

  criterion(10, "GA synthetic recovery: noiseless floor < 1e-3; 1e6 photons/trace gives R71 0.93 +- 0.03", [&] {
    const auto start = synthetic::jittered_start(p);
    SynthesisOptions clean;
    const auto exact = synthesize_dataset(p, synthetic::fit_contexts(), synthetic::cw_powers(), clean);
    GAConfig cfg; // defaults: 5000 generations, 300 stall
    const auto fit0 = run_ga(exact, cfg, start);
    detail("noiseless: start %.3g -> %.3g after %d generations", objective(start, exact), fit0.best_objective,
           fit0.generations);
    for (int g = 0; g < kGenes; ++g) {
      const double truth = ParameterVector::from_params(p).values[g];
      if (truth > 0.0) detail("  %-26s fitted / true = %.3f", gene_name(g), fit0.best.values[g] / truth);
    }

    SynthesisOptions noisy;
    noisy.photon_budget = 1e6;
    noisy.seed = 7;
    const auto data = synthesize_dataset(p, synthetic::fit_contexts(), synthetic::cw_powers(), noisy);
    // Broad search, then a narrow-mutation refinement from its best point.
    GAConfig broad;
    broad.max_generations = 20000;
    broad.stall_generations = 3000;
    const auto s1 = run_ga(data, broad, start);
    GAConfig fine = broad;
    fine.epsilon = 0.05;
    fine.rng_seed = broad.rng_seed + 1000;
    const auto s2 = run_ga(data, fine, s1.best);
    const double r71 = branching_ratio(s2.best.to_params(), BranchChannel::R71);
    detail("noisy: objective at truth %.4g, broad %.4g (R71 %.4f), refined %.4g; R71 = %.4f",
           objective(ParameterVector::from_params(p), data), s1.best_objective,
           branching_ratio(s1.best.to_params(), BranchChannel::R71), s2.best_objective, r71);
    return fit0.best_objective < 1e-3 && within(r71, 0.93, 0.03);
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
