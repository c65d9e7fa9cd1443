#pragma once

#include "sdelab/experiment.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sdelab {

enum class Engine { Discrete, Sde, Oracle };
std::string toString(Engine e);
Engine parseEngine(const std::string& name);

struct EnsembleStats {
  std::string experimentId;
  Engine engine = Engine::Discrete;
  std::size_t dim = 0;
  std::vector<std::uint64_t> stepIndex;
  Vec time;
  Vec lossMean;
  Vec lossStd;
  std::vector<Vec> stateMean; // [record][coordinate]
  std::vector<Vec> stateCov;  // diagonal, [record][coordinate]
  std::size_t runs = 0;
  std::size_t nAlive = 0;
  std::size_t divergedCount = 0;
  std::optional<std::uint64_t> firstDivergenceStep;
  std::size_t vFloorEvents = 0;
  // [record][coordinate] -> counts of phase 1, 2, 3 (only when requested)
  std::vector<std::vector<std::array<std::uint32_t, 3>>> phaseHistogram;
  // [run][record] loss path, NaN after divergence (only when keepPaths)
  std::vector<Vec> lossPaths;

  std::size_t records() const { return stepIndex.size(); }
};

// Diverged trajectories are excluded from every moment and counted in divergedCount.
struct EnsembleOptions {
  bool keepPaths = false;
  unsigned threads = 0; // overrides spec.threads when non-zero
};

// Trajectory i of engine e uses seed mixSeed(mixSeed(spec.seed, tag(e)), i). Trajectories are
// grouped into fixed blocks whose partition depends only on spec.runs, and block statistics are
// merged in a fixed pairwise tree, so results are bit-identical for any thread count.
// Throws std::runtime_error when every trajectory diverged.
EnsembleStats runEnsemble(const ExperimentSpec& spec, Engine engine, const EnsembleOptions& options = {});
// Runs every engine defined by `spec` (discrete first).
std::vector<EnsembleStats> runEnsembles(const ExperimentSpec& spec, const EnsembleOptions& options = {});

// Observable names: "loss", "mean_<i>", "cov_<i>".
Vec observableSeries(const EnsembleStats& stats, const std::string& observable);
Vec observableStdErr(const EnsembleStats& stats, const std::string& observable);

struct WeakErrorReport {
  std::string observable;
  std::vector<std::uint64_t> stepIndex;
  Vec perStepGap;
  Vec perStepStdErr; // pooled Monte-Carlo standard error of the difference
  double maxGap = 0.0;
  std::size_t argMax = 0;
  double monteCarloStdErr = 0.0; // pooled standard error at argMax
};

WeakErrorReport weakError(const EnsembleStats& a, const EnsembleStats& b, const std::string& observable = "loss");

enum class OracleKind { Bound, Point };

struct OracleReport {
  bool pass = true;
  Vec residuals; // stats - oracle per record
  std::optional<std::size_t> firstViolation;
  double windowStat = 0.0;   // Point: mean of stats over the window
  double windowOracle = 0.0; // Point: mean of oracle over the window
  std::string message;
};

// Bound: stats <= oracle + tolerance * |oracle| at every record.
// Point: |mean_window(stats) - mean_window(oracle)| <= tolerance * |mean_window(oracle)| over the
// asymptotic window (last 20% of records).
OracleReport compareToOracle(const EnsembleStats& stats, const std::string& observable, const Vec& oracle,
                             OracleKind kind, double tolerance);

// Mean of a series over the last `fraction` of its records.
double windowMean(const Vec& series, double fraction = 0.2);

// An oracle curve packaged in the stats schema (engine = oracle, std = 0, n_alive = 0).
EnsembleStats makeOracleStats(const std::string& id, const std::vector<std::uint64_t>& stepIndex, const Vec& time,
                              const Vec& loss, const std::vector<Vec>& mean = {}, const std::vector<Vec>& cov = {});

} // namespace sdelab
