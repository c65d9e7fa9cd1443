#include "sdelab/ensemble.hpp"

#include "sdelab/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace sdelab {

std::string toString(Engine e) {
  switch (e) {
  case Engine::Discrete: return "discrete";
  case Engine::Sde: return "sde";
  case Engine::Oracle: return "oracle";
  }
  return "?";
}

Engine parseEngine(const std::string& name) {
  if (name == "discrete") return Engine::Discrete;
  if (name == "sde") return Engine::Sde;
  if (name == "oracle") return Engine::Oracle;
  throw std::invalid_argument("unknown engine '" + name + "'");
}

namespace {

constexpr std::size_t kMaxBlocks = 16;

// Welford accumulators for one block; layout [record][quantity], quantity 0 = loss.
struct BlockAccum {
  std::size_t n = 0;
  Vec mean;
  Vec m2;
  std::vector<std::uint32_t> phases; // [record][coord][3]
  std::size_t diverged = 0;
  std::optional<std::uint64_t> firstDiv;
  std::size_t vFloor = 0;
};

void mergeInto(BlockAccum& a, const BlockAccum& b) {
  if (b.n > 0) {
    if (a.n == 0) {
      a.mean = b.mean;
      a.m2 = b.m2;
    } else {
      const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n), n = na + nb;
      for (std::size_t j = 0; j < a.mean.size(); ++j) {
        const double delta = b.mean[j] - a.mean[j];
        a.mean[j] += delta * nb / n;
        a.m2[j] += b.m2[j] + delta * delta * na * nb / n;
      }
    }
    a.n += b.n;
  }
  for (std::size_t j = 0; j < a.phases.size(); ++j) a.phases[j] += b.phases[j];
  a.diverged += b.diverged;
  a.vFloor += b.vFloor;
  if (b.firstDiv && (!a.firstDiv || *b.firstDiv < *a.firstDiv)) a.firstDiv = b.firstDiv;
}

BlockAccum mergeTree(std::vector<BlockAccum>& blocks, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return std::move(blocks[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  BlockAccum left = mergeTree(blocks, lo, mid);
  BlockAccum right = mergeTree(blocks, mid, hi);
  mergeInto(left, right);
  return left;
}

std::uint64_t engineTag(Engine e) { return e == Engine::Discrete ? 0xD15C7E7EULL : 0x5DE5DE5DULL; }

bool tooLarge(std::span<const double> x) {
  double n2 = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) return true;
    n2 += v * v;
  }
  return n2 > kDivergenceNorm * kDivergenceNorm;
}

} // namespace

EnsembleStats runEnsemble(const ExperimentSpec& spec, Engine engine, const EnsembleOptions& options) {
  validate(spec);
  if (engine == Engine::Oracle) throw std::invalid_argument("runEnsemble: oracle is not a simulation engine");
  if (engine == Engine::Discrete && !spec.optimizer) throw std::invalid_argument("runEnsemble: no optimizer table");
  if (engine == Engine::Sde && !spec.sde) throw std::invalid_argument("runEnsemble: no sde table");
  if (spec.observables.phases && !isGaussianFamily(spec.noise))
    throw std::invalid_argument("phase observable needs Gaussian-family noise");

  const std::size_t d = dimension(spec.landscape);
  const std::size_t Q = 1 + d;
  const std::size_t steps = engine == Engine::Sde ? sdeSteps(spec) : spec.steps;
  const double dt = engine == Engine::Sde ? sdeStepSize(spec) : spec.optimizer->eta;
  const std::size_t every = spec.recordEvery;
  const std::size_t R = steps / every + 1;
  const bool wantPhases = spec.observables.phases;

  std::optional<SdeSystem> system;
  if (engine == Engine::Sde) system = buildSde(spec);

  const std::size_t nBlocks = std::min<std::size_t>(spec.runs, kMaxBlocks);
  std::vector<std::size_t> blockStart(nBlocks + 1);
  for (std::size_t b = 0; b <= nBlocks; ++b) blockStart[b] = b * spec.runs / nBlocks;

  std::vector<BlockAccum> blocks(nBlocks);
  std::vector<Vec> lossPaths;
  if (options.keepPaths) lossPaths.assign(spec.runs, Vec(R, std::numeric_limits<double>::quiet_NaN()));

  const std::uint64_t streamSeed = mixSeed(spec.seed, engineTag(engine));

  auto runBlock = [&](std::size_t b) {
    BlockAccum& acc = blocks[b];
    acc.mean.assign(R * Q, 0.0);
    acc.m2.assign(R * Q, 0.0);
    if (wantPhases) acc.phases.assign(R * d * 3, 0);
    Vec path(R * Q);
    std::vector<std::uint8_t> phasePath(wantPhases ? R * d : 0);
    Vec g(d), z(d);
    for (std::size_t i = blockStart[b]; i < blockStart[b + 1]; ++i) {
      Rng rng(mixSeed(streamSeed, i));
      std::size_t recorded = 0;
      auto record = [&](std::span<const double> x) {
        double* row = &path[recorded * Q];
        row[0] = evaluate(spec.landscape, x);
        for (std::size_t c = 0; c < d; ++c) row[1 + c] = x[c];
        if (wantPhases) {
          const auto ph = phaseClassify(x, spec.landscape, spec.noise);
          for (std::size_t c = 0; c < d; ++c) phasePath[recorded * d + c] = static_cast<std::uint8_t>(ph[c]) - 1;
        }
        ++recorded;
      };
      std::optional<std::uint64_t> divergedAt;
      if (engine == Engine::Discrete) {
        const OptimizerConfig& oc = *spec.optimizer;
        OptimizerState st = makeState(spec.x0);
        for (std::size_t k = 0;; ++k) {
          if (k % every == 0) record(st.x);
          if (k == steps) break;
          gradientInto(spec.landscape, st.x, g);
          sampleInto(spec.noise, spec.landscape, st.x, rng, z);
          for (std::size_t c = 0; c < d; ++c) g[c] += z[c];
          stepInPlace(oc, st, g, schedulerValue(oc.schedulerExponent, k));
          if (st.diverged || tooLarge(st.x)) {
            divergedAt = k + 1;
            break;
          }
        }
      } else {
        Vec state = system->initialState(spec.x0);
        std::size_t floors = 0;
        const auto div = eulerMaruyamaVisit(
            *system, state, dt, steps, rng,
            [&](std::size_t k, double, const Vec& s) {
              if (k % every == 0) record(std::span<const double>(s.data(), d));
            },
            &floors);
        acc.vFloor += floors;
        if (div) divergedAt = *div;
      }
      if (options.keepPaths)
        for (std::size_t r = 0; r < recorded; ++r) lossPaths[i][r] = path[r * Q];
      if (divergedAt) {
        ++acc.diverged;
        if (!acc.firstDiv || *divergedAt < *acc.firstDiv) acc.firstDiv = divergedAt;
        continue;
      }
      ++acc.n;
      const double inv = 1.0 / static_cast<double>(acc.n);
      for (std::size_t j = 0; j < R * Q; ++j) {
        const double delta = path[j] - acc.mean[j];
        acc.mean[j] += delta * inv;
        acc.m2[j] += delta * (path[j] - acc.mean[j]);
      }
      if (wantPhases)
        for (std::size_t j = 0; j < R * d; ++j) ++acc.phases[j * 3 + phasePath[j]];
    }
  };

  unsigned nThreads = options.threads ? options.threads : spec.threads;
  if (nThreads == 0) nThreads = std::max(1u, std::thread::hardware_concurrency());
  nThreads = static_cast<unsigned>(std::min<std::size_t>(nThreads, nBlocks));
  if (nThreads <= 1) {
    for (std::size_t b = 0; b < nBlocks; ++b) runBlock(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failMutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nThreads; ++t)
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < nBlocks; b = next++) {
          try {
            runBlock(b);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failMutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  BlockAccum total = mergeTree(blocks, 0, nBlocks);
  if (total.n == 0)
    throw std::runtime_error("all " + std::to_string(spec.runs) + " trajectories diverged; first divergence at step " +
                             std::to_string(total.firstDiv.value_or(0)));

  EnsembleStats st;
  st.experimentId = spec.id;
  st.engine = engine;
  st.dim = d;
  st.runs = spec.runs;
  st.nAlive = total.n;
  st.divergedCount = total.diverged;
  st.firstDivergenceStep = total.firstDiv;
  st.vFloorEvents = total.vFloor;
  st.stepIndex.resize(R);
  st.time.resize(R);
  st.lossMean.resize(R);
  st.lossStd.resize(R);
  st.stateMean.assign(R, Vec(d));
  st.stateCov.assign(R, Vec(d));
  const double denom = total.n > 1 ? static_cast<double>(total.n - 1) : 1.0;
  for (std::size_t r = 0; r < R; ++r) {
    st.stepIndex[r] = r * every;
    st.time[r] = static_cast<double>(r * every) * dt;
    st.lossMean[r] = total.mean[r * Q];
    st.lossStd[r] = std::sqrt(std::max(0.0, total.m2[r * Q] / denom));
    for (std::size_t c = 0; c < d; ++c) {
      st.stateMean[r][c] = total.mean[r * Q + 1 + c];
      st.stateCov[r][c] = std::max(0.0, total.m2[r * Q + 1 + c] / denom);
    }
  }
  if (wantPhases) {
    st.phaseHistogram.assign(R, std::vector<std::array<std::uint32_t, 3>>(d));
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t p = 0; p < 3; ++p) st.phaseHistogram[r][c][p] = total.phases[(r * d + c) * 3 + p];
  }
  st.lossPaths = std::move(lossPaths);
  return st;
}

std::vector<EnsembleStats> runEnsembles(const ExperimentSpec& spec, const EnsembleOptions& options) {
  std::vector<EnsembleStats> out;
  if (spec.optimizer) out.push_back(runEnsemble(spec, Engine::Discrete, options));
  if (spec.sde) out.push_back(runEnsemble(spec, Engine::Sde, options));
  return out;
}

namespace {

std::size_t coordinateOf(const std::string& observable, const std::string& prefix, std::size_t d) {
  const std::size_t c = std::stoul(observable.substr(prefix.size()));
  if (c >= d) throw std::invalid_argument("observable '" + observable + "' out of range");
  return c;
}

} // namespace

Vec observableSeries(const EnsembleStats& s, const std::string& obs) {
  if (obs == "loss") return s.lossMean;
  Vec out(s.records());
  if (obs.rfind("mean_", 0) == 0) {
    const std::size_t c = coordinateOf(obs, "mean_", s.dim);
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = s.stateMean[r][c];
    return out;
  }
  if (obs.rfind("cov_", 0) == 0) {
    const std::size_t c = coordinateOf(obs, "cov_", s.dim);
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = s.stateCov[r][c];
    return out;
  }
  throw std::invalid_argument("unknown observable '" + obs + "'");
}

Vec observableStdErr(const EnsembleStats& s, const std::string& obs) {
  Vec out(s.records(), 0.0);
  if (s.engine == Engine::Oracle || s.nAlive == 0) return out;
  const double n = static_cast<double>(s.nAlive);
  if (obs == "loss") {
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = s.lossStd[r] / std::sqrt(n);
    return out;
  }
  if (obs.rfind("mean_", 0) == 0) {
    const std::size_t c = coordinateOf(obs, "mean_", s.dim);
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = std::sqrt(s.stateCov[r][c] / n);
    return out;
  }
  if (obs.rfind("cov_", 0) == 0) {
    // Gaussian approximation of the sample-variance standard error
    const std::size_t c = coordinateOf(obs, "cov_", s.dim);
    for (std::size_t r = 0; r < out.size(); ++r)
      out[r] = s.stateCov[r][c] * std::sqrt(2.0 / std::max(1.0, n - 1.0));
    return out;
  }
  throw std::invalid_argument("unknown observable '" + obs + "'");
}

WeakErrorReport weakError(const EnsembleStats& a, const EnsembleStats& b, const std::string& observable) {
  if (a.records() != b.records() || a.stepIndex != b.stepIndex)
    throw std::invalid_argument("weakError: step grids differ");
  for (std::size_t r = 0; r < a.records(); ++r)
    if (std::abs(a.time[r] - b.time[r]) > 1e-9 * (1.0 + std::abs(a.time[r])))
      throw std::invalid_argument("weakError: time grids differ (dt must equal eta)");
  const Vec sa = observableSeries(a, observable), sb = observableSeries(b, observable);
  const Vec ea = observableStdErr(a, observable), eb = observableStdErr(b, observable);
  WeakErrorReport rep;
  rep.observable = observable;
  rep.stepIndex = a.stepIndex;
  rep.perStepGap.resize(sa.size());
  rep.perStepStdErr.resize(sa.size());
  for (std::size_t r = 0; r < sa.size(); ++r) {
    rep.perStepGap[r] = std::abs(sa[r] - sb[r]);
    rep.perStepStdErr[r] = std::sqrt(ea[r] * ea[r] + eb[r] * eb[r]);
    if (rep.perStepGap[r] > rep.maxGap) {
      rep.maxGap = rep.perStepGap[r];
      rep.argMax = r;
    }
  }
  rep.monteCarloStdErr = rep.perStepStdErr.empty() ? 0.0 : rep.perStepStdErr[rep.argMax];
  return rep;
}

double windowMean(const Vec& series, double fraction) {
  if (series.empty()) throw std::invalid_argument("windowMean: empty series");
  const std::size_t n = series.size();
  std::size_t w = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  w = std::clamp<std::size_t>(w, 1, n);
  double acc = 0.0;
  for (std::size_t i = n - w; i < n; ++i) acc += series[i];
  return acc / static_cast<double>(w);
}

OracleReport compareToOracle(const EnsembleStats& stats, const std::string& observable, const Vec& oracle,
                             OracleKind kind, double tolerance) {
  const Vec s = observableSeries(stats, observable);
  if (oracle.size() != s.size()) throw std::invalid_argument("compareToOracle: oracle not defined on the stats grid");
  OracleReport rep;
  rep.residuals.resize(s.size());
  for (std::size_t r = 0; r < s.size(); ++r) rep.residuals[r] = s[r] - oracle[r];
  if (kind == OracleKind::Bound) {
    for (std::size_t r = 0; r < s.size(); ++r)
      if (s[r] > oracle[r] + tolerance * std::abs(oracle[r])) {
        rep.pass = false;
        rep.firstViolation = r;
        rep.message = "bound violated first at step " + std::to_string(stats.stepIndex[r]);
        break;
      }
  } else {
    rep.windowStat = windowMean(s);
    rep.windowOracle = windowMean(oracle);
    const double err = std::abs(rep.windowStat - rep.windowOracle);
    rep.pass = err <= tolerance * std::abs(rep.windowOracle);
    if (!rep.pass) rep.message = "window mean off by " + std::to_string(err / std::abs(rep.windowOracle)) + " relative";
  }
  return rep;
}

EnsembleStats makeOracleStats(const std::string& id, const std::vector<std::uint64_t>& stepIndex, const Vec& time,
                              const Vec& loss, const std::vector<Vec>& mean, const std::vector<Vec>& cov) {
  if (stepIndex.size() != time.size() || time.size() != loss.size())
    throw std::invalid_argument("makeOracleStats: series lengths differ");
  EnsembleStats s;
  s.experimentId = id;
  s.engine = Engine::Oracle;
  s.stepIndex = stepIndex;
  s.time = time;
  s.lossMean = loss;
  s.lossStd.assign(loss.size(), 0.0);
  s.dim = mean.empty() ? 0 : mean.front().size();
  s.stateMean = mean.empty() ? std::vector<Vec>(loss.size()) : mean;
  s.stateCov = cov.empty() ? std::vector<Vec>(loss.size(), Vec(s.dim, 0.0)) : cov;
  return s;
}

} // namespace sdelab
