#include "doctest.h"

#include "nvdyn/protocols.hpp"

#include <cmath>

using namespace nvdyn;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, (i + 0.5) / n);
  return g;
}

} // namespace

TEST_SUITE("protocols") {

TEST_CASE("protocol layouts") {
  const auto r = build_protocol_sequence(ProtocolSpec::rpi(0.6, 3000.0));
  REQUIRE(r.segments.size() == 1);
  CHECK(r.readout_segment == 0u);
  CHECK(r.segments[0].drive.p_readout == 0.6);
  CHECK(r.segments[0].duration == 3000.0);

  const auto t = build_protocol_sequence(ProtocolSpec::tpi(0.7, 3000, 21, 150, 0.09, 2000, 200));
  REQUIRE(t.segments.size() == 4);
  CHECK(t.segments[1].drive.p_init == 21.0);
  CHECK(t.segments[1].duration == 150.0);
  CHECK(t.segments[2].drive.p_init == 0.09);
  CHECK(t.segments[3].is_pause());
  CHECK(t.segments[3].duration == 200.0);

  const auto s = build_protocol_sequence(ProtocolSpec::spi(0.7, 3000, 0.09, 2000, 0));
  CHECK(s.segments.size() == 2);
  CHECK(ProtocolSpec::tpi(1, 1, 0, 0, 1, 1, 1).warnings().size() == 1);
  CHECK(ProtocolSpec::tpi(1, 1, 0, 0, 1, 1, 1).init_time() == 3.0);

  ProtocolSpec bad = ProtocolSpec::rpi(1, 100);
  bad.p_l = 0.1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(ProtocolSpec::rpi(-1, 100).validate(), ValidationError);
  CHECK(parse_protocol_kind("tpi") == ProtocolKind::TPI);
  CHECK_THROWS_AS(parse_protocol_kind("xpi"), ValidationError);
}

TEST_CASE("initialization criterion") {
  const auto p = ModelParameters::reference();
  const auto none = is_initialized(ProtocolSpec::rpi(0.0, 0.0), p);
  CHECK_FALSE(none.initialized);
  CHECK(none.spread == doctest::Approx(1.0));
  CHECK(is_initialized(ProtocolSpec::rpi(0.0, 0.0), p, 1.0).initialized);
  CHECK_FALSE(is_initialized(ProtocolSpec::rpi(0.6, 100.0), p).initialized);
  CHECK(is_initialized(ProtocolSpec::rpi(0.6, 2500.0), p).initialized);

  const auto e = initialization_error(PopulationState::basis(L1), p);
  CHECK(e.spin == 0.0);
  CHECK(e.charge == 0.0);
  CHECK(e.total == 0.0);
  Vector8 v = Vector8::Zero();
  v(L1) = 0.7;
  v(L3) = 0.1;
  v(L5) = 0.2;
  const auto f = initialization_error(PopulationState(v), p);
  CHECK(f.spin == doctest::Approx(0.1));
  CHECK(f.charge == doctest::Approx(0.2));
  CHECK(f.total == doctest::Approx(0.3));
  const auto g = initialization_error(PopulationState::basis(L7), p);
  CHECK(g.spin == doctest::Approx(branching_ratio(p, BranchChannel::R73)));
}

TEST_CASE("RPI at 0.6 mW initializes within 2 us") {
  const auto p = ModelParameters::reference();
  const auto c = is_initialized(ProtocolSpec::rpi(0.6, 2000.0), p);
  INFO("spread after 2 us: " << c.spread);
  CHECK(c.initialized);
}

TEST_CASE("is_initialized monotonicity in tau_l (empirical)") {
  const auto p = ModelParameters::reference();
  int flips = 0;
  for (double pl : {0.01, 0.05, 0.2}) {
    bool prev = false;
    for (double tl : log_grid(10, 2e5, 30)) {
      const bool now = is_initialized(ProtocolSpec::spi(0.3, 300, pl, tl, 100), p).initialized;
      if (prev && !now) {
        ++flips;
        MESSAGE("initialization lost when extending tau_l: p_l=" << pl << " tau_l=" << tl);
      }
      prev = now;
    }
  }
  MESSAGE("tau_l monotonicity flips: " << flips);
}

TEST_CASE("sensitivity scaling and speedup identities") {
  const auto p = ModelParameters::reference();
  SensitivityConfig cfg;
  const auto spec = ProtocolSpec::rpi(0.6, 3000, 500);
  const auto a = sensitivity(spec, p, cfg, 1e4);
  REQUIRE(a.ok());
  CHECK(a.tau_i == 3500.0);
  CHECK(a.eta == doctest::Approx(std::sqrt(a.tau_i + 1e4) / std::sqrt(a.photons) / a.c_opt / 1e4 *
                                 std::exp(1e4 / cfg.t2_star)));
  auto cfg2 = cfg;
  cfg2.collection_efficiency = 0.5;
  CHECK(sensitivity(spec, p, cfg2, 1e4).eta == doctest::Approx(a.eta * std::sqrt(2.0)).epsilon(1e-12));

  const auto b = ProtocolSpec::spi(0.6, 2500, 0.05, 3000, 500);
  for (double tm : {500.0, 1e4, 1e5}) {
    CHECK(speedup(spec, spec, p, cfg, tm) == doctest::Approx(1.0).epsilon(1e-14));
    const double ab = speedup(spec, b, p, cfg, tm), ba = speedup(b, spec, p, cfg, tm);
    CHECK(std::abs(ab * ba - 1.0) < 1e-9);
    CHECK(speedup(spec, b, p, cfg2, tm) == doctest::Approx(ab).epsilon(1e-12));
  }

  const auto short_spec = sensitivity(ProtocolSpec::rpi(0.6, 100), p, cfg, 1e4);
  CHECK(short_spec.status == SensitivityStatus::NotInitialized);
  CHECK_FALSE(short_spec.ok());
  CHECK_THROWS_AS(speedup(ProtocolSpec::rpi(0.6, 100), spec, p, cfg, 1e4), NumericalError);
  CHECK_THROWS_AS(sensitivity(spec, p, cfg, 0.0), ValidationError);
}

TEST_CASE("eta versus tau_M is minimized near T2*/2") {
  const auto p = ModelParameters::reference();
  SensitivityConfig cfg;
  const auto spec = ProtocolSpec::rpi(0.6, 3000, 500);
  double best = 1e300, arg = 0.0;
  for (double tm = 5000.0; tm <= 2e5; tm *= 1.02) {
    const double e = sensitivity(spec, p, cfg, tm).eta;
    if (e < best) {
      best = e;
      arg = tm;
    }
  }
  // Stationary point of sqrt(tau_I + t) exp(t / T2) / t by bisection.
  const double ti = spec.init_time(), t2 = cfg.t2_star;
  const auto d = [&](double t) { return 0.5 / (ti + t) - 1.0 / t + 1.0 / t2; };
  double lo = 1e3, hi = 1e6;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (d(mid) < 0 ? lo : hi) = mid;
  }
  CHECK(arg == doctest::Approx(lo).epsilon(0.02));
  CHECK(arg == doctest::Approx(0.5 * t2).epsilon(0.1));
}

TEST_CASE("RPI optimizer agrees with an exhaustive grid") {
  const auto p = ModelParameters::reference();
  SensitivityConfig cfg;
  const double tm = 1e4;
  const auto opt = optimize_protocol(ProtocolKind::RPI, p, cfg, tm);
  REQUIRE(opt.result.ok());
  CHECK(opt.spec.tau_r >= 300.0);
  CHECK(opt.spec.tau_r <= 5000.0);

  const ProtocolBounds b;
  double grid_best = 1e300;
  for (double pr : log_grid(b.p_r.lo, b.p_r.hi, 24))
    for (double tr : log_grid(b.tau_r.lo, b.tau_r.hi, 24))
      for (double tp : log_grid(b.tau_p.lo, b.tau_p.hi, 6)) {
        const auto r = sensitivity(ProtocolSpec::rpi(pr, tr, tp), p, cfg, tm);
        if (r.ok()) grid_best = std::min(grid_best, r.eta);
      }
  CHECK(opt.result.eta <= grid_best * 1.02);
  CHECK(grid_best <= opt.result.eta * 1.02);
}

TEST_CASE("optimized ordering TPI <= SPI <= RPI") {
  const auto p = ModelParameters::reference();
  SensitivityConfig cfg;
  const auto rep = speedup_sweep({500.0, 5000.0, 5e4}, p, cfg);
  REQUIRE(rep.rows.size() == 3);
  for (const auto& row : rep.rows) {
    CHECK(row.tpi.result.eta <= row.spi.result.eta);
    CHECK(row.spi.result.eta <= row.rpi.result.eta);
    CHECK(row.t_spi_over_rpi > 0.0);
    CHECK(row.tpi.spec.p_h == 30.0);
    CHECK(row.tpi.spec.tau_h == 20.0);
  }
  // Optimal TPI low pulse: weaker and longer as tau_M grows.
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].tpi.spec.p_l <= rep.rows[i - 1].tpi.spec.p_l);
    CHECK(rep.rows[i].tpi.spec.tau_l >= rep.rows[i - 1].tpi.spec.tau_l);
  }
  const auto csv = format_speedup_csv(rep);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(format_speedup_summary(rep).find("tpi_beneficial_everywhere") != std::string::npos);
}

TEST_CASE("fixed low powers: stronger pulses win at short tau_M") {
  const auto p = ModelParameters::reference();
  SensitivityConfig cfg;
  std::vector<double> eta;
  for (double pl : {0.043, 0.2, 0.38}) {
    ProtocolBounds b;
    b.fixed_p_l = pl;
    eta.push_back(optimize_protocol(ProtocolKind::TPI, p, cfg, 500.0, b).result.eta);
  }
  CHECK(eta[2] <= eta[1]);
  CHECK(eta[1] <= eta[0]);
}

TEST_CASE("optimizer is deterministic") {
  const auto p = ModelParameters::reference();
  SensitivityConfig cfg;
  const auto a = optimize_protocol(ProtocolKind::SPI, p, cfg, 2000.0);
  const auto b = optimize_protocol(ProtocolKind::SPI, p, cfg, 2000.0);
  CHECK(a.result.eta == b.result.eta);
  CHECK(a.spec.tau_l == b.spec.tau_l);
  CHECK(a.evaluations == b.evaluations);
}

} // TEST_SUITE
