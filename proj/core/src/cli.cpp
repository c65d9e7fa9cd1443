#include "sdelab/cli.hpp"

#include "sdelab/analytics.hpp"
#include "sdelab/csv_io.hpp"
#include "sdelab/ensemble.hpp"
#include "sdelab/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sdelab {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<std::size_t> runs;
  std::string format = "csv";
  unsigned threads = 0;
};

class Session {
public:
  Session(const Globals& g, std::ostream& out) : g_(g), out_(out) {
    if (g.config.empty()) throw std::invalid_argument("--config is required");
    cfg_ = Config::load(g.config);
    if (g.seed) cfg_.set("experiment.seed", static_cast<double>(*g.seed));
    if (g.runs) cfg_.set("experiment.runs", static_cast<double>(*g.runs));
    const char* env = std::getenv("ADAPTIVE_SDE_LAB_OUT");
    dir_ = (env && *env) ? fs::path(env) : fs::path(g.out);
    fs::create_directories(dir_);
  }

  Config& cfg() { return cfg_; }
  ExperimentSpec spec() const { return specFromConfig(cfg_); }
  std::ostream& out() { return out_; }
  EnsembleOptions options(bool keepPaths = false) const { return {keepPaths, g_.threads}; }

  fs::path write(const EnsembleStats& s, const std::string& suffix = "") {
    const fs::path p = dir_ / (s.experimentId + suffix + "_" + toString(s.engine) + ".csv");
    writeStatsCsv(p.string(), s);
    out_ << "wrote " << p.string() << '\n';
    return p;
  }
  fs::path writeWeak(const WeakErrorReport& r, const std::string& id) {
    const fs::path p = dir_ / (id + "_weak_error.csv");
    writeWeakErrorCsv(p.string(), r);
    out_ << "wrote " << p.string() << '\n';
    return p;
  }
  fs::path path(const std::string& name) const { return dir_ / name; }

private:
  Globals g_;
  std::ostream& out_;
  Config cfg_;
  fs::path dir_;
};

const QuadraticDiag& requireQuadratic(const ExperimentSpec& spec, const char* what) {
  const auto* q = std::get_if<QuadraticDiag>(&spec.landscape);
  if (!q) throw std::invalid_argument(std::string(what) + " needs landscape.kind = \"quadratic\"");
  return *q;
}

// Per-coordinate noise standard deviations including the batch.
Vec noiseStd(const ExperimentSpec& spec) {
  if (!std::holds_alternative<GaussianDiagNoise>(spec.noise))
    throw std::invalid_argument("closed-form oracles need noise.kind = \"gaussian\"");
  Vec s = covarianceDiag(spec.noise, spec.landscape, spec.x0);
  for (double& v : s) v = std::sqrt(v);
  return s;
}

OptimizerConfig familyConfig(const ExperimentSpec& spec) {
  if (spec.optimizer) return *spec.optimizer;
  return spec.sde->hyper;
}

std::optional<AdaptiveFamily> adaptiveFamilyOf(const OptimizerConfig& oc) {
  switch (oc.family) {
  case OptimizerFamily::Rmsprop: return AdaptiveFamily::Rmsprop;
  case OptimizerFamily::RmspropW: return AdaptiveFamily::RmspropW;
  case OptimizerFamily::Adam: return oc.l2 > 0.0 ? AdaptiveFamily::AdamL2 : AdaptiveFamily::Adam;
  case OptimizerFamily::AdamW: return AdaptiveFamily::AdamW;
  default: return std::nullopt;
  }
}

std::optional<StationaryMoments> stationaryOracle(const ExperimentSpec& spec) {
  const auto& q = requireQuadratic(spec, "stationary oracle");
  const Vec sig = noiseStd(spec);
  const OptimizerConfig oc = familyConfig(spec);
  switch (oc.family) {
  case OptimizerFamily::SignSgd: return signsgdStationary(q.lambdas, sig, oc.eta, spec.x0);
  case OptimizerFamily::Sgd: return sgdStationary(q.lambdas, sig, oc.eta, spec.x0);
  default: break;
  }
  const auto fam = adaptiveFamilyOf(oc);
  if (!fam || *fam == AdaptiveFamily::AdamL2) return std::nullopt;
  return adaptiveStationary(*fam, q.lambdas, sig, oc.eta, oc.theta, spec.x0);
}

double maxOf(const Vec& v) { return *std::max_element(v.begin(), v.end()); }

std::optional<double> asymptoticBound(const ExperimentSpec& spec) {
  const CurvatureConstants c = constants(spec.landscape);
  if (!c.hasMu || !std::holds_alternative<GaussianDiagNoise>(spec.noise)) return std::nullopt;
  const Vec sig = noiseStd(spec);
  const OptimizerConfig oc = familyConfig(spec);
  const double s0 = evaluate(spec.landscape, spec.x0);
  if (oc.family == OptimizerFamily::Sgd) return sgdLossBound(c.mu, c.traceBound, maxOf(sig), oc.eta, s0).limit();
  if (oc.family == OptimizerFamily::SignSgd)
    return signsgdLossBound(3, c.mu, c.traceBound, maxOf(sig), oc.eta, s0, sig.size()).limit();
  const auto fam = adaptiveFamilyOf(oc);
  AdaptiveBoundParams p;
  p.mu = c.mu;
  p.L = c.smoothness;
  p.lTau = c.traceBound;
  p.sigma = maxOf(sig);
  p.eta = oc.eta;
  p.theta = *fam == AdaptiveFamily::AdamL2 ? oc.l2 : oc.theta;
  return adaptiveAsymptoticLoss(*fam, p);
}

EnsembleStats stationaryOracleStats(const ExperimentSpec& spec, const EnsembleStats& grid,
                                    const StationaryMoments& m) {
  const auto& q = requireQuadratic(spec, "stationary oracle");
  std::vector<Vec> mean, cov;
  Vec loss;
  for (double t : grid.time) {
    Vec mu = m.transientMean(t), c = m.transientCov(t);
    double l = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) l += 0.5 * q.lambdas[i] * (mu[i] * mu[i] + c[i]);
    loss.push_back(l);
    mean.push_back(std::move(mu));
    cov.push_back(std::move(c));
  }
  return makeOracleStats(spec.id, grid.stepIndex, grid.time, loss, mean, cov);
}

Engine defaultEngine(const ExperimentSpec& spec) { return spec.optimizer ? Engine::Discrete : Engine::Sde; }

void emitConfiguredOracles(Session& s, const ExperimentSpec& spec, const EnsembleStats& grid) {
  for (const auto& name : spec.oracles) {
    if (name == "stationary") {
      const auto m = stationaryOracle(spec);
      if (!m) throw std::invalid_argument("no stationary oracle for this optimizer family");
      s.write(stationaryOracleStats(spec, grid, *m), "_stationary");
    } else if (name == "bound") {
      const auto b = asymptoticBound(spec);
      if (!b) throw std::invalid_argument("no loss bound for this landscape/noise");
      s.write(makeOracleStats(spec.id, grid.stepIndex, grid.time, Vec(grid.records(), *b)), "_bound");
    } else {
      throw std::invalid_argument("unknown oracle '" + name + "' (expected stationary or bound)");
    }
  }
}

// ---- subcommands ----

int cmdSimulate(Session& s, const std::string& engineName) {
  const ExperimentSpec spec = s.spec();
  const Engine engine = engineName.empty() ? defaultEngine(spec) : parseEngine(engineName);
  const EnsembleStats st = runEnsemble(spec, engine, s.options());
  s.write(st);
  s.out() << "final loss_mean " << formatDouble(st.lossMean.back()) << " n_alive " << st.nAlive << " diverged "
          << st.divergedCount << '\n';
  emitConfiguredOracles(s, spec, st);
  return 0;
}

int cmdCompare(Session& s, bool baselines) {
  ExperimentSpec spec = s.spec();
  if (!spec.sde) throw std::invalid_argument("compare needs an [sde] table");
  if (!baselines) {
    if (!spec.optimizer) throw std::invalid_argument("compare needs an [optimizer] table (or --baselines)");
    const EnsembleStats a = runEnsemble(spec, Engine::Discrete, s.options());
    const EnsembleStats b = runEnsemble(spec, Engine::Sde, s.options());
    s.write(a);
    s.write(b);
    const WeakErrorReport w = weakError(a, b, "loss");
    s.writeWeak(w, spec.id);
    s.out() << "max_gap " << formatDouble(w.maxGap) << " at step " << w.stepIndex[w.argMax] << " mc_stderr "
            << formatDouble(w.monteCarloStdErr) << '\n';
    return 0;
  }
  std::optional<EnsembleStats> discrete;
  if (spec.optimizer) {
    discrete = runEnsemble(spec, Engine::Discrete, s.options());
    s.write(*discrete);
  }
  for (SdeBaseline b : {SdeBaseline::Ours, SdeBaseline::Malladi}) {
    ExperimentSpec v = spec;
    v.sde->baseline = b;
    v.id = spec.id + "_" + toString(b);
    const EnsembleStats st = runEnsemble(v, Engine::Sde, s.options());
    s.write(st);
    if (discrete) {
      const WeakErrorReport w = weakError(*discrete, st, "loss");
      s.writeWeak(w, v.id);
      s.out() << toString(b) << " max_gap " << formatDouble(w.maxGap) << " mc_stderr "
              << formatDouble(w.monteCarloStdErr) << '\n';
    }
  }
  return 0;
}

int cmdPhases(Session& s) {
  s.cfg().set("experiment.observables", std::vector<std::string>{"loss", "mean", "cov", "phases"});
  const ExperimentSpec spec = s.spec();
  const OptimizerConfig oc = familyConfig(spec);
  if (oc.family != OptimizerFamily::SignSgd) throw std::invalid_argument("phases needs the signsgd family");
  const Engine engine = spec.sde ? Engine::Sde : Engine::Discrete;
  const EnsembleStats st = runEnsemble(spec, engine, s.options());
  s.write(st);

  const fs::path p = s.path(spec.id + "_phases.csv");
  {
    std::ofstream f(p);
    f << "step,time,coordinate,phase1,phase2,phase3\n";
    for (std::size_t r = 0; r < st.records(); ++r)
      for (std::size_t c = 0; c < st.dim; ++c) {
        const auto& h = st.phaseHistogram[r][c];
        f << st.stepIndex[r] << ',' << formatDouble(st.time[r]) << ',' << c << ',' << h[0] << ',' << h[1] << ','
          << h[2] << '\n';
      }
    if (!f) throw std::runtime_error("write failed for '" + p.string() + "'");
  }
  s.out() << "wrote " << p.string() << '\n';

  for (std::size_t c = 0; c < st.dim; ++c) {
    s.out() << "coordinate " << c << ':';
    int last = 0;
    for (std::size_t r = 0; r < st.records(); ++r) {
      const auto& h = st.phaseHistogram[r][c];
      const int ph = 1 + static_cast<int>(std::max_element(h.begin(), h.end()) - h.begin());
      if (ph != last) {
        s.out() << " phase" << ph << "@t=" << formatDouble(st.time[r]);
        last = ph;
      }
    }
    s.out() << '\n';
  }

  const CurvatureConstants cc = constants(spec.landscape);
  if (cc.hasMu && isGaussianFamily(spec.noise) && std::holds_alternative<GaussianDiagNoise>(spec.noise)) {
    const double s0 = evaluate(spec.landscape, spec.x0);
    const double sig = maxOf(noiseStd(spec));
    for (int phase = 1; phase <= 3; ++phase) {
      const LossBoundCurve b = signsgdLossBound(phase, cc.mu, cc.traceBound, sig, oc.eta, s0, st.dim);
      Vec v;
      for (double t : st.time) v.push_back(b.value(t));
      s.write(makeOracleStats(spec.id, st.stepIndex, st.time, v), "_envelope_phase" + std::to_string(phase));
      if (phase == 1) s.out() << "phase1 t* " << formatDouble(b.tStar) << '\n';
      if (b.degenerate) s.out() << "phase" << phase << " bound flagged: " << b.note << '\n';
    }
  }
  return 0;
}

int cmdStationary(Session& s) {
  const ExperimentSpec spec = s.spec();
  const auto m = stationaryOracle(spec);
  if (!m) throw std::invalid_argument("no stationary oracle for this optimizer family");
  for (const EnsembleStats& st : runEnsembles(spec, s.options())) {
    s.write(st);
    for (std::size_t c = 0; c < st.dim; ++c) {
      const double emp = windowMean(observableSeries(st, "cov_" + std::to_string(c)));
      s.out() << toString(st.engine) << " cov_" << c << "_" << c << " empirical " << formatDouble(emp) << " oracle "
              << formatDouble(m->cov[c]) << " rel_err " << formatDouble(std::abs(emp - m->cov[c]) / m->cov[c])
              << '\n';
    }
    if (st.engine == Engine::Discrete || !spec.optimizer) s.write(stationaryOracleStats(spec, st, *m));
  }
  return 0;
}

int cmdScaling(Session& s, const std::string& rule, double delta) {
  if (!s.cfg().has("optimizer.family")) throw std::invalid_argument("scaling needs an [optimizer] table");
  if (s.cfg().has("scaling.rule")) throw std::invalid_argument("remove [scaling] from the config; use --rule/--delta");
  ExperimentSpec baseline = s.spec();
  baseline.sde.reset();
  const ScalingRule sr{parseScalingRule(rule), delta};
  ExperimentSpec scaled = baseline;
  scaled.optimizer = applyScaling(*baseline.optimizer, sr);
  scaled.noise = withBatch(baseline.noise, scaled.optimizer->batch);
  scaled.id = baseline.id + "_rescaled";
  std::vector<ExperimentSpec> runs{baseline, scaled};
  if (baseline.optimizer->theta != 0.0) {
    ExperimentSpec nr = scaled;
    nr.optimizer->theta = baseline.optimizer->theta;
    nr.id = baseline.id + "_theta_not_rescaled";
    runs.push_back(nr);
  }
  runs.front().id = baseline.id + "_baseline";
  double ref = 0.0;
  for (const ExperimentSpec& r : runs) {
    const EnsembleStats st = runEnsemble(r, Engine::Discrete, s.options());
    s.write(st);
    const double plateau = windowMean(st.lossMean);
    if (&r == &runs.front()) ref = plateau;
    s.out() << r.id << " eta " << formatDouble(r.optimizer->eta) << " beta1 " << formatDouble(r.optimizer->beta1)
            << " beta2 " << formatDouble(r.optimizer->beta2) << " theta " << formatDouble(r.optimizer->theta)
            << " batch " << formatDouble(r.optimizer->batch) << " plateau " << formatDouble(plateau)
            << " rel_to_baseline " << formatDouble(std::abs(plateau - ref) / ref) << '\n';
  }
  return 0;
}

int cmdSchedulers(Session& s, const std::vector<double>& varthetas) {
  const ExperimentSpec spec0 = s.spec();
  if (!spec0.optimizer || spec0.optimizer->family != OptimizerFamily::SignSgd)
    throw std::invalid_argument("schedulers needs optimizer.family = \"signsgd\"");
  const CurvatureConstants cc = constants(spec0.landscape);
  const double sig = maxOf(noiseStd(spec0));
  for (double th : varthetas) {
    ExperimentSpec spec = spec0;
    spec.sde.reset();
    spec.optimizer->schedulerExponent = th;
    std::ostringstream id;
    id << spec0.id << "_vartheta" << formatDouble(th);
    spec.id = id.str();
    const EnsembleStats st = runEnsemble(spec, Engine::Discrete, s.options());
    s.write(st);
    const SchedulerVerdict v = schedulerVerdict(th, cc.traceBound, sig, cc.mu);
    Vec env;
    for (auto k : st.stepIndex) env.push_back(v.envelope(spec.optimizer->eta, k));
    s.write(makeOracleStats(spec.id, st.stepIndex, st.time, env), "_envelope");
    s.out() << "vartheta " << formatDouble(th) << " converges " << (v.converges ? "yes" : "no") << " final_loss "
            << formatDouble(st.lossMean.back()) << " final_envelope " << formatDouble(env.back()) << '\n';
  }
  return 0;
}

int cmdSweepSigma(Session& s, const std::vector<double>& sigmas) {
  if (s.cfg().string("noise.kind", "gaussian") != "gaussian")
    throw std::invalid_argument("sweep-sigma needs noise.kind = \"gaussian\"");
  std::vector<double> ls, lp;
  for (double sigma : sigmas) {
    Config c = s.cfg();
    c.set("noise.sigma", std::vector<double>{sigma});
    ExperimentSpec spec = specFromConfig(c);
    spec.sde.reset();
    std::ostringstream id;
    id << spec.id << "_sigma" << formatDouble(sigma);
    spec.id = id.str();
    const EnsembleStats st = runEnsemble(spec, Engine::Discrete, s.options());
    s.write(st);
    const double plateau = windowMean(st.lossMean);
    const auto bound = asymptoticBound(spec);
    s.out() << "sigma " << formatDouble(sigma) << " plateau " << formatDouble(plateau);
    if (bound) s.out() << " bound " << formatDouble(*bound);
    s.out() << '\n';
    ls.push_back(std::log(sigma));
    lp.push_back(std::log(plateau));
  }
  if (ls.size() >= 2) {
    const double n = static_cast<double>(ls.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ls.size(); ++i) {
      sx += ls[i];
      sy += lp[i];
      sxx += ls[i] * ls[i];
      sxy += ls[i] * lp[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const std::size_t k = ls.size() - 1;
    s.out() << "loglog_slope " << formatDouble(slope) << " last_local_slope "
            << formatDouble((lp[k] - lp[k - 1]) / (ls[k] - ls[k - 1])) << '\n';
  }
  return 0;
}

int cmdOracle(Session& s) {
  const ExperimentSpec spec = s.spec();
  const PhaseConstants pc = phaseConstants();
  auto& o = s.out();
  o << "phase_constants m " << formatDouble(pc.m) << " q1 " << formatDouble(pc.q1) << " q2 " << formatDouble(pc.q2)
    << " x_star " << formatDouble(pc.xStar) << '\n';
  const CurvatureConstants cc = constants(spec.landscape);
  if (cc.hasMu)
    o << "curvature mu " << formatDouble(cc.mu) << " L " << formatDouble(cc.smoothness) << " L_tau "
      << formatDouble(cc.traceBound) << '\n';
  if (const auto* q = std::get_if<QuadraticDiag>(&spec.landscape); q && std::holds_alternative<GaussianDiagNoise>(spec.noise)) {
    (void)q;
    if (const auto m = stationaryOracle(spec)) {
      o << "stationary_cov";
      for (double c : m->cov) o << ' ' << formatDouble(c);
      o << '\n';
    }
    if (const auto b = asymptoticBound(spec)) o << "asymptotic_loss_bound " << formatDouble(*b) << '\n';
  }
  return 0;
}

} // namespace

int cliMain(int argc, char** argv) { return cliMain(argc, argv, std::cout, std::cerr); }

int cliMain(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte-Carlo laboratory for optimizer SDEs on analytic landscapes", "adaptive-sde-lab"};
  Globals g;
  app.option_defaults()->always_capture_default();
  app.add_option("--config", g.config, "experiment file");
  app.add_option("--seed", g.seed, "master seed override");
  app.add_option("--out", g.out, "output directory (ADAPTIVE_SDE_LAB_OUT takes precedence)");
  app.add_option("--runs", g.runs, "ensemble size override")->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv"}));
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.require_subcommand(1);
  app.fallthrough();

  std::string engine;
  auto* simulate = app.add_subcommand("simulate", "run one engine");
  simulate->add_option("--engine", engine, "discrete or sde")->check(CLI::IsMember({"discrete", "sde"}));
  bool baselines = false;
  auto* compare = app.add_subcommand("compare", "optimizer vs SDE, or SDE baselines");
  compare->add_flag("--baselines", baselines, "compare ours and malladi SDE baselines");
  auto* phases = app.add_subcommand("phases", "SignSGD phase timeline and envelopes");
  auto* stationary = app.add_subcommand("stationary", "long-run moments vs closed forms");
  std::string rule = "ours";
  double delta = 4.0;
  auto* scaling = app.add_subcommand("scaling", "baseline vs rescaled hyperparameters");
  scaling->add_option("--rule", rule)->check(CLI::IsMember({"ours", "malladi", "linear-sgd"}));
  scaling->add_option("--delta", delta)->check(CLI::Range(1.0, 1e12));
  std::vector<double> varthetas{0.1, 0.5, 1.5};
  auto* schedulers = app.add_subcommand("schedulers", "SignSGD learning-rate decay sweep");
  schedulers->add_option("--varthetas", varthetas);
  std::vector<double> sigmas{0.01, 0.1, 1.0, 10.0, 100.0};
  auto* sweep = app.add_subcommand("sweep-sigma", "asymptotic loss across noise levels");
  sweep->add_option("--sigmas", sigmas)->check(CLI::PositiveNumber);
  auto* oracle = app.add_subcommand("oracle", "print closed-form values for a config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return 2;
  }

  try {
    Session s(g, out);
    if (simulate->parsed()) return cmdSimulate(s, engine);
    if (compare->parsed()) return cmdCompare(s, baselines);
    if (phases->parsed()) return cmdPhases(s);
    if (stationary->parsed()) return cmdStationary(s);
    if (scaling->parsed()) return cmdScaling(s, rule, delta);
    if (schedulers->parsed()) return cmdSchedulers(s, varthetas);
    if (sweep->parsed()) return cmdSweepSigma(s, sigmas);
    if (oracle->parsed()) return cmdOracle(s);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return 1;
  }
  return 1;
}

} // namespace sdelab
