#include "doctest.h"
#include "oracles.hpp"

#include "nvdyn/rate_model.hpp"

#include <random>

using namespace nvdyn;

TEST_SUITE("ratemodel") {

TEST_CASE("zero drive leaves only decay entries") {
  const auto p = ModelParameters::reference();
  const RateGenerator g = build_generator(p, {0.0, 0.0});
  CHECK(g.rate(L2, L1) == doctest::Approx(1.0 / 13.0).epsilon(1e-15));
  // No pumped entries.
  CHECK(g.rate(L1, L2) == 0.0);
  CHECK(g.rate(L3, L4) == 0.0);
  CHECK(g.rate(L5, L6) == 0.0);
  CHECK(g.rate(L7, L8) == 0.0);
  for (int c = 0; c < kLevels; ++c) CHECK(std::abs(g.matrix().col(c).sum()) < 1e-15);
}

TEST_CASE("pump rate per laser and additivity") {
  const auto p = ModelParameters::reference();
  CHECK(build_generator(p, {1.0, 0.0}).rate(L1, L2) == doctest::Approx(0.035).epsilon(1e-14));
  CHECK(build_generator(p, {0.0, 1.0}).rate(L1, L2) == doctest::Approx(0.025).epsilon(1e-14));
  const double both = build_generator(p, {1.0, 1.0}).rate(L1, L2);
  CHECK(both == doctest::Approx(0.060).epsilon(1e-14));
  CHECK(both == doctest::Approx(build_generator(p, {1.0, 0.0}).rate(L1, L2) +
                                build_generator(p, {0.0, 1.0}).rate(L1, L2)));
}

TEST_CASE("generator matches hand-written transition list") {
  const auto p = ModelParameters::reference();
  const auto raw = oracle::reference_raw();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  for (int k = 0; k < 50; ++k) {
    const LaserDrive d{u(rng), u(rng)};
    const Matrix8 expect = oracle::assemble(oracle::eight_level(raw, 0.035 * d.p_readout + 0.025 * d.p_init));
    CHECK((build_generator(p, d).matrix() - expect).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("generator invariants and linearity in power") {
  const auto p = ModelParameters::reference();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int k = 0; k < 200; ++k) {
    const double a = u(rng), b = u(rng);
    const Matrix8 m = build_generator(p, {a, b}).matrix();
    const double scale = m.cwiseAbs().maxCoeff();
    for (int c = 0; c < kLevels; ++c) {
      CHECK(std::abs(m.col(c).sum()) <= 1e-12 * scale);
      for (int r = 0; r < kLevels; ++r)
        if (r != c) CHECK(m(r, c) >= 0.0);
    }
    const Matrix8 lin = build_generator(p, {a, 0}).matrix() + build_generator(p, {b, 0}).matrix() -
                        build_generator(p, {0, 0}).matrix();
    CHECK((build_generator(p, {a + b, 0}).matrix() - lin).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("branching ratios") {
  const auto p = ModelParameters::reference();
  CHECK(std::abs(branching_ratio(p, BranchChannel::R71) - 0.93) <= 0.01);
  CHECK(std::abs(branching_ratio(p, BranchChannel::R27) - 0.12) <= 0.01);
  CHECK(std::abs(branching_ratio(p, BranchChannel::R47) - 0.46) <= 0.01);
  CHECK(branching_ratio(p, BranchChannel::R71) + branching_ratio(p, BranchChannel::R73) == doctest::Approx(1.0));
  CHECK(branching_ratio(p, BranchChannel::R21) + branching_ratio(p, BranchChannel::R27) == doctest::Approx(1.0));
  CHECK(branching_ratio(p, BranchChannel::R43) + branching_ratio(p, BranchChannel::R47) == doctest::Approx(1.0));
  CHECK(parse_branch_channel("R73") == BranchChannel::R73);
  CHECK_THROWS_AS(parse_branch_channel("R99"), ValidationError);
}

TEST_CASE("max spin polarization limits") {
  auto p = ModelParameters::reference();
  CHECK(std::abs(max_spin_polarization(p) - 0.98) <= 0.005);
  auto q = p;
  q.gamma_73 = 1e-15;
  CHECK(max_spin_polarization(q) == doctest::Approx(1.0));
  auto s = p;
  s.gamma_73 = s.gamma_71;
  s.gamma_47 = s.gamma_27;
  s.gamma_43 = s.gamma_21;
  CHECK(max_spin_polarization(s) == doctest::Approx(0.5));
}

TEST_CASE("validation errors") {
  const auto p = ModelParameters::reference();
  CHECK_THROWS_AS(build_generator(p, {-1.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(build_generator(p, {0.0, std::nan("")}), ValidationError);
  auto q = p;
  q.gamma_21 = -0.1;
  CHECK_THROWS_AS(q.validate(), ValidationError);
  q = p;
  q.sigma_45 = 0.3;
  CHECK_THROWS_AS(q.validate(), ValidationError);
  q = p;
  q.beta = 1.5;
  CHECK_THROWS_AS(q.validate(), ValidationError);
  Matrix8 bad = build_generator(p, {1, 0}).matrix();
  bad(0, 0) += 1e-3;
  CHECK_THROWS_AS(RateGenerator{bad}, ValidationError);
}

TEST_CASE("parameter file parsing") {
  const auto p = parse_parameters("# comment\nlifetime_2_1_ns = 10 +- 1\nsigma_6_7 = 0.2\n"
                                  "kappa_readout_mhz_per_mw = 40\n",
                                  "test.params");
  CHECK(p.gamma_21 == doctest::Approx(0.1));
  CHECK(p.sigma_67 == doctest::Approx(0.2));
  CHECK(p.kappa_readout == doctest::Approx(0.040));
  CHECK(p.uncertainties.at("lifetime_2_1_ns") == doctest::Approx(1.0));
  CHECK(p.gamma_43 == doctest::Approx(1.0 / 13.0)); // unspecified keeps default

  const auto both = parse_parameters("sigma_2_5_and_4_5 = 0.3\n");
  CHECK(both.sigma_25 == 0.3);
  CHECK(both.sigma_45 == 0.3);

  try {
    parse_parameters("sigma_6_7 = 0.2\nsigma_99 = 1\n", "f.params");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("f.params:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_parameters("sigma_6_7 = 0.2\nsigma_6_7 = 0.3\n"), ValidationError);
  CHECK_THROWS_AS(parse_parameters("sigma_6_7 = abc\n"), ValidationError);
  CHECK_THROWS_AS(parse_parameters("lifetime_2_1_ns = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_parameters("sigma_2_5 = 0.3\n"), ValidationError); // breaks sigma_25 == sigma_45
}

TEST_CASE("parameter file round trip and shipped default") {
  auto p = ModelParameters::reference();
  p.sigma_56 = 0.5123456789012345;
  const auto q = parse_parameters(format_parameters(p));
  CHECK(q.sigma_56 == p.sigma_56);
  CHECK(q.gamma_73 == doctest::Approx(p.gamma_73).epsilon(1e-15));
  CHECK(q.uncertainties == p.uncertainties);

  const auto shipped = load_parameters(std::string(NVDYN_DATA_DIR) + "/reference.params");
  const auto t1 = ModelParameters::reference();
  CHECK(shipped.gamma_21 == doctest::Approx(t1.gamma_21).epsilon(1e-15));
  CHECK(shipped.gamma_73 == doctest::Approx(t1.gamma_73).epsilon(1e-15));
  CHECK(shipped.sigma_78 == doctest::Approx(t1.sigma_78).epsilon(1e-15));
  CHECK(shipped.kappa_init == doctest::Approx(t1.kappa_init).epsilon(1e-15));
  CHECK(shipped.l8_ratio_42 == doctest::Approx(2.7));
  CHECK(shipped.beta == doctest::Approx(0.6));
}

} // TEST_SUITE
