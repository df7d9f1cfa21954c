#include "doctest.h"

#include "nvdyn/fitting.hpp"
#include "synthetic_contexts.hpp"

#include <cmath>

using namespace nvdyn;

// Slow: a full default GA run on noiseless self-data. Registered as its own ctest entry.
TEST_SUITE("fitting_recovery") {

TEST_CASE("noiseless self-fit recovers every parameter within 10%") {
  const auto p = ModelParameters::reference();
  const auto truth = ParameterVector::from_params(p);
  const auto exact = synthesize_dataset(p, synthetic::fit_contexts(), synthetic::cw_powers(), SynthesisOptions{});
  REQUIRE(objective(truth, exact) < 1e-12);

  const auto fit = run_ga(exact, GAConfig{}, synthetic::jittered_start(p));
  CHECK(fit.best_objective < 1e-3);
  for (int g = 0; g < kGenes; ++g) {
    INFO(gene_name(g), ": fitted ", fit.best.values[g], " true ", truth.values[g]);
    if (truth.values[g] == 0.0)
      CHECK(fit.best.values[g] == 0.0);
    else
      CHECK(std::abs(fit.best.values[g] / truth.values[g] - 1.0) <= 0.10);
  }
}

} // TEST_SUITE
