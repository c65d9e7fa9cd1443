#pragma once

#include "sdelab/config.hpp"
#include "sdelab/landscapes.hpp"
#include "sdelab/noise.hpp"
#include "sdelab/optimizers.hpp"
#include "sdelab/sde_models.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sdelab {

struct SdeSpec {
  OptimizerFamily family = OptimizerFamily::SignSgd; // rmspropw/adamw read theta from the optimizer table
  SignSgdVariant variant = SignSgdVariant::Erf;
  SdeBaseline baseline = SdeBaseline::Ours;
  double dt = 0.0;   // 0 means "use the learning rate"
  std::size_t steps = 0; // 0 means "use experiment steps"
  double kappa = 1.0;
  // Hyperparameters for the SDE; copied from the optimizer table when it exists.
  OptimizerConfig hyper;
};

struct Observables {
  bool loss = true;
  bool mean = true;
  bool cov = true;
  bool phases = false;
};

struct ExperimentSpec {
  std::string id = "experiment";
  Landscape landscape = QuadraticDiag{{1.0}};
  NoiseModel noise = GaussianDiagNoise{{1.0}, 1.0};
  std::optional<OptimizerConfig> optimizer;
  std::optional<SdeSpec> sde;
  std::size_t runs = 500;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  Vec x0;
  Observables observables;
  std::vector<std::string> oracles;
  std::size_t recordEvery = 1;
  unsigned threads = 0; // 0 = hardware concurrency
};

// Reads the documented schema (see README). Applies [scaling] to the optimizer and
// propagates the resulting batch size into the noise model.
ExperimentSpec specFromConfig(const Config& cfg);
void validate(const ExperimentSpec& spec);

// Copy of `noise` with its batch replaced.
NoiseModel withBatch(const NoiseModel& noise, double batch);
// Copy of `noise` with its scale (sigma / Student scale) multiplied by `factor`.
NoiseModel withScale(const NoiseModel& noise, double factor);

double sdeStepSize(const ExperimentSpec& spec);
std::size_t sdeSteps(const ExperimentSpec& spec);
SdeSystem buildSde(const ExperimentSpec& spec);

} // namespace sdelab
