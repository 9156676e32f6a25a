#include <loopspace/io.hpp>
#include <loopspace/loopspace.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#ifndef LOOPSPACE_DEFAULT_CONFIG
#define LOOPSPACE_DEFAULT_CONFIG "config/defaults.json"
#endif

namespace fs = std::filesystem;
using namespace loopspace;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed = -1;
  int modes = -1;
  double s = -1.0;
  int jobs = -1;
};

struct Settings {
  json raw;
  ModelManifold model = ModelManifold::flat_torus(2);
  LoopPath loop;
  HamiltonianSpec spec;
  FlowConfig flow;
  std::uint64_t seed = 1;
  int jobs = 1;
};

json merge(json base, const json& over) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object())
      base[it.key()] = merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
  return base;
}

Settings load_settings(const Common& c) {
  json raw;
  const std::string defaults = LOOPSPACE_DEFAULT_CONFIG;
  if (fs::exists(defaults)) raw = read_json_file(defaults);
  if (!c.config_path.empty()) {
    json user = read_json_file(c.config_path);
    // a bare HamiltonianSpec is accepted as well as a full config
    if (user.contains("rho0") || user.contains("rho_star")) user = json{{"hamiltonian", user}};
    raw = merge(raw, user);
  }
  Settings st;
  st.model = model_from_json(raw.value("model", json::object()));
  if (raw.contains("seed")) st.seed = raw["seed"].get<std::uint64_t>();
  if (raw.contains("jobs")) st.jobs = raw["jobs"].get<int>();
  json ham = raw.value("hamiltonian", json::object());
  if (c.modes > 0) ham["J"] = c.modes;
  if (c.s > 0.0) ham["s"] = c.s;
  st.spec = spec_from_json(ham);
  json fl = raw.value("flow", json::object());
  fl["J"] = st.spec.J;
  fl["s"] = st.spec.s;
  st.flow = flow_from_json(fl);
  json lj = raw.value("loop", json::object());
  if (!lj.contains("winding")) {
    lj["winding"] = std::vector<int>(st.model.dim(), 0);
    lj["winding"][0] = 1;
  }
  st.loop = loop_from_json(lj, st.model);
  if (st.loop.modes() > st.spec.J) throw ConfigError("loop has more Fourier modes than J");
  if (c.seed >= 0) st.seed = static_cast<std::uint64_t>(c.seed);
  if (c.jobs > 0) st.jobs = c.jobs;
  raw["hamiltonian"] = spec_to_json(st.spec);
  raw["flow"] = flow_to_json(st.flow);
  raw["model"] = model_to_json(st.model);
  raw["loop"] = loop_to_json(st.loop);
  raw["seed"] = st.seed;
  raw.erase("jobs");  // does not influence results
  st.raw = raw;
  return st;
}

std::string prepare_out(const Common& c) {
  fs::create_directories(c.out_dir);
  return c.out_dir;
}

void finish(const std::string& dir, RunManifest& man, const std::vector<std::pair<std::string, std::string>>& files) {
  for (const auto& [name, text] : files) {
    write_text_file((fs::path(dir) / name).string(), text);
    man.artifacts.push_back(name);
  }
  man.artifacts.push_back("manifest.json");
  write_text_file((fs::path(dir) / "manifest.json").string(), man.to_json().dump(2) + "\n");
}

json section(const Settings& st, const char* key) { return st.raw.value(key, json::object()); }

// ---------------------------------------------------------------------------

int cmd_spectrum(const Common& c, const std::string& method_name) {
  Settings st = load_settings(c);
  FrameMethod method = FrameMethod::Auto;
  if (method_name == "dense") method = FrameMethod::Dense;
  else if (method_name == "analytic") method = FrameMethod::Analytic;
  else if (method_name != "auto") throw ConfigError("unknown --method " + method_name);
  RunManifest man{"spectrum", st.raw, st.seed};
  man.config["method"] = method_name;
  const SpectralFrame f = eigendecompose(st.model, st.loop, st.spec.J, method);
  CsvTable csv({"j", "lambda_j", "sup_norm_xi_j"});
  double max_sup = 0.0;
  for (int j = 0; j < f.size(); ++j) {
    const double sup = sup_norm(f.basis, f.eigenfield(j));
    max_sup = std::max(max_sup, sup);
    csv.row({std::to_string(j), format_number(f.eigenvalues(j)), format_number(sup)});
  }
  const GrowthConstants g = fit_growth_constants(st.model, st.loop, f);
  json fj = frame_to_json(f);
  fj["growth"] = {{"c", g.c}, {"C", g.C}, {"d", g.d}};
  fj["max_sup_norm"] = max_sup;
  fj["loop"] = loop_to_json(st.loop);
  const std::string dir = prepare_out(c);
  finish(dir, man, {{"spectrum.csv", csv.str(man.hash())}, {"frame.json", fj.dump(2) + "\n"}});
  std::cout << "spectrum: D=" << f.size() << " kernel_dim=" << f.kernel_dim << " max_sup_norm=" << format_number(max_sup)
            << " c=" << format_number(g.c) << " C=" << format_number(g.C) << " d=" << format_number(g.d) << "\n";
  if (max_sup > std::sqrt(2.0) + 1e-6) throw NumericalFailure("eigenfield sup norm exceeds sqrt(2)");
  return kExitOk;
}

int cmd_metrics(const Common& c, int n_max_flag, std::vector<double> r_list) {
  Settings st = load_settings(c);
  const json mj = section(st, "metrics");
  const int n_max = n_max_flag > 0 ? n_max_flag : mj.value("n_max", 8);
  if (r_list.empty()) r_list = mj.value("r_list", std::vector<double>{0.0, 0.25, 0.5, 1.0});
  for (double r : r_list)
    if (r < 0.0 || r > 1.0) throw ConfigError("metrics-compare: r must lie in [0, 1]");
  if (n_max < 1) throw ConfigError("metrics-compare: n-max must be positive");
  RunManifest man{"metrics-compare", st.raw, st.seed};
  man.config["metrics"] = {{"n_max", n_max}, {"r_list", r_list}};
  const ModelManifold circle = ModelManifold::embedded_circle();
  const int modes = std::min(st.spec.J, 16);
  const FourierBasis basis(1, modes);
  CsvTable csv({"n", "r", "norm_intrinsic", "norm_embedded", "ratio"});
  double worst = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    const LoopPath q = straight_loop(circle, Eigen::VectorXi::Constant(1, n), 0);
    const FramePtr f = make_frame(circle, q, modes);
    const Eigen::VectorXd pn = basis.constant(Eigen::VectorXd::Ones(1));
    const FiberField p = FiberField::from_fourier(f, pn);
    for (double r : r_list) {
      const double intr = inner_r(r, p, p);
      const double emb = inner_r_emb(circle, q, basis, r, pn, pn);
      const double ratio = emb / intr;
      worst = std::max(worst, std::abs(ratio - std::pow(1.0 + std::pow(kTwoPi * n, 2), r)));
      csv.row({std::to_string(n), format_number(r), format_number(intr), format_number(emb), format_number(ratio)});
    }
  }
  const std::string dir = prepare_out(c);
  finish(dir, man, {{"metrics.csv", csv.str(man.hash())}});
  std::cout << "metrics-compare: rows=" << csv.size() << " max_closed_form_error=" << format_number(worst) << "\n";
  if (worst > 1e-8) throw NumericalFailure("embedded norms deviate from the closed form");
  return kExitOk;
}

int cmd_sweep(const Common& c, double r_min, double r_max, int points) {
  Settings st = load_settings(c);
  if (st.model.name() != "flat-torus") throw ConfigError("orbit-sweep needs a flat-torus model");
  const json sj = section(st, "sweep");
  if (r_min <= 0.0) r_min = sj.value("r_min", 0.05);
  if (r_max <= 0.0) r_max = sj.value("r_max", 2.0);
  if (points < 0) points = sj.value("points", 20);
  if (points > 0 && !(r_min > 0.0 && r_max >= r_min)) throw ConfigError("orbit-sweep: need 0 < r-min <= r-max");
  std::vector<double> grid;
  for (int i = 0; i < points; ++i)
    grid.push_back(points == 1 ? r_min : r_min + (r_max - r_min) * i / (points - 1));
  RunManifest man{"orbit-sweep", st.raw, st.seed};
  man.config["sweep"] = {{"r_min", r_min}, {"r_max", r_max}, {"points", points}};
  MinimaxOptions opt;
  opt.seed = st.seed;
  const SweepResult res = orbit_sweep(st.model, {st.loop}, st.spec, grid, st.flow, st.jobs, opt);
  CsvTable csv({"r", "theta", "classification", "action", "sigma", "leaf_action", "grad_norm", "steps"});
  bool failed = false;
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const auto& rec = res.records[i];
    if (!res.errors[i].empty()) {
      failed = true;
      csv.row({format_number(rec.r), "nan", "error", "nan", "nan", "nan", "nan", "0"});
      continue;
    }
    csv.row({format_number(rec.r), format_number(rec.theta), kind_name(rec.classification.kind),
             format_number(rec.action), format_number(rec.classification.sigma), format_number(rec.leaf_action),
             format_number(rec.grad_norm), std::to_string(rec.steps)});
  }
  json summary;
  summary["r0"] = res.r0;
  summary["alpha"] = res.alpha;
  summary["leaf_action_bound"] = res.leaf_bound;
  auto hit = [&](int i) -> json {
    if (i < 0) return nullptr;
    const auto& rec = res.records[i];
    return {{"r", rec.r}, {"sigma", rec.classification.sigma}, {"leaf_action", rec.leaf_action},
            {"within_bound", rec.leaf_action > 0.0 && rec.leaf_action < res.leaf_bound},
            {"hamilton_residual", rec.residual}};
  };
  summary["first_on_hypersurface"] = hit(res.first_hit);
  summary["first_on_hypersurface_after_r0"] = hit(res.first_hit_after_r0);
  summary["closed_geodesic_plateau_spread"] = std::isnan(res.plateau_spread) ? json(nullptr) : json(res.plateau_spread);
  bool low_confidence = false;
  for (const auto& rec : res.records) low_confidence = low_confidence || !rec.confident;
  summary["low_confidence"] = low_confidence;
  summary["errors"] = res.errors;
  const std::string dir = prepare_out(c);
  finish(dir, man, {{"sweep.csv", csv.str(man.hash())}, {"summary.json", summary.dump(2) + "\n"}});
  std::cout << "orbit-sweep: points=" << grid.size() << " r0=" << format_number(res.r0)
            << " alpha=" << format_number(res.alpha);
  if (res.first_hit >= 0) {
    const auto& rec = res.records[res.first_hit];
    std::cout << " first_on_hypersurface r=" << format_number(rec.r) << " leaf_action=" << format_number(rec.leaf_action)
              << " bound=" << format_number(res.leaf_bound);
  } else if (!grid.empty()) {
    std::cout << " no on-hypersurface hit; closed-geodesic plateau spread="
              << format_number(res.plateau_spread);
  }
  std::cout << "\n";
  if (failed) throw NumericalFailure("some grid points failed; partial results written");
  return kExitOk;
}

int cmd_ps(const Common& c, int seeds_flag, double horizon_flag, const std::string& fixture) {
  Settings st = load_settings(c);
  const json pj = section(st, "ps");
  const int seeds = seeds_flag > 0 ? seeds_flag : pj.value("seeds", 4);
  const double horizon = horizon_flag > 0.0 ? horizon_flag : pj.value("horizon", 2.0);
  const double pert = pj.value("perturbation", 0.1);
  RunManifest man{"ps-diagnose", st.raw, st.seed};
  man.config["ps"] = {{"seeds", seeds}, {"horizon", horizon}, {"perturbation", pert}, {"fixture", fixture}};
  const double c_norm = std::sqrt(2.0 * loop_energy(st.model, st.loop));
  const FlowConfig cfg = st.flow.derived(fiber_action_bound(st.spec, c_norm));
  const FourierBasis basis(st.model.dim(), st.spec.J);
  const Eigen::VectorXd qdot = velocity_coefficients(st.model, st.loop, basis);
  CsvTable csv({"seed", "t", "action", "grad_norm", "step1", "step2", "step3", "parallel", "transverse"});
  std::vector<std::string> flagged;
  for (int k = 0; k < seeds; ++k) {
    std::vector<PhasePoint> states;
    std::vector<double> times, actions, grads;
    if (fixture == "divergent") {
      for (int i = 0; i <= 40; ++i) {
        const double lambda = 1.0 + 2.0 * i;
        states.push_back(make_phase_point(st.model, st.loop, lambda * qdot, st.spec.s, st.spec.J));
        times.push_back(i);
      }
    } else if (fixture.empty()) {
      std::mt19937_64 rng(st.seed * 1000003ULL + static_cast<std::uint64_t>(k));
      const PhasePoint x0 = make_phase_point(st.model, st.loop, qdot, st.spec.s, st.spec.J);
      Eigen::VectorXd h = random_field(basis, rng), v = random_field(basis, rng);
      const double scale = k == 0 ? 0.0 : pert / std::sqrt(h.squaredNorm() + v.squaredNorm());
      const PhasePoint start = moved(st.model, x0, scale * h, scale * v);
      const FlowTrajectory tr = flow(st.model, start, st.spec, cfg, horizon, {false, 10});
      states = tr.states;
      times = tr.times;
    } else {
      throw ConfigError("unknown --fixture " + fixture);
    }
    for (const auto& x : states) {
      actions.push_back(action(st.model, x, st.spec));
      grads.push_back(gradient_norm(st.model, x, st.spec));
    }
    const PsReport rep = ps_diagnostics(st.model, states);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& r = rep.rows[i];
      csv.row({std::to_string(k), format_number(times[i]), format_number(actions[i]), format_number(grads[i]),
               format_number(r.step1), format_number(r.step2), format_number(r.step3), format_number(r.parallel),
               format_number(r.transverse)});
    }
    if (rep.diverging) flagged.push_back("seed " + std::to_string(k) + ": " + rep.flagged);
  }
  const std::string dir = prepare_out(c);
  finish(dir, man, {{"ps.csv", csv.str(man.hash())}});
  std::cout << "ps-diagnose: seeds=" << seeds << " rows=" << csv.size() << " diverging=" << flagged.size() << "\n";
  for (const auto& f : flagged) std::cout << "  diverging " << f << "\n";
  if (!flagged.empty()) throw NumericalFailure("Palais-Smale bounds diverge");
  return kExitOk;
}

int cmd_gradient_check(const Common& c, int points_flag) {
  Settings st = load_settings(c);
  const json gj = section(st, "gradient_check");
  const int points = points_flag > 0 ? points_flag : gj.value("points", 100);
  const double h = gj.value("step", 1e-5);
  const double tol = gj.value("tolerance", 1e-5);
  RunManifest man{"gradient-check", st.raw, st.seed};
  man.config["gradient_check"] = {{"points", points}, {"step", h}, {"tolerance", tol}};
  std::mt19937_64 rng(st.seed);
  CsvTable csv({"point", "finite_difference", "gradient_pairing", "relative_error"});
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const PhasePoint x = random_phase_point(st.model, rng, st.spec.J, st.spec.s);
    const Eigen::VectorXd dq = random_field(x.basis(), rng), dp = random_field(x.basis(), rng);
    const double fd = (action(st.model, moved(st.model, x, h * dq, h * dp), st.spec) -
                       action(st.model, moved(st.model, x, -h * dq, -h * dp), st.spec)) / (2.0 * h);
    const double an = metric_pairing(x, gradient(st.model, x, st.spec), dq, dp);
    const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-300});
    worst = std::max(worst, rel);
    csv.row({std::to_string(i), format_number(fd), format_number(an), format_number(rel)});
  }
  const std::string dir = prepare_out(c);
  finish(dir, man, {{"gradient_check.csv", csv.str(man.hash())}});
  std::cout << "gradient-check: points=" << points << " max_relative_error=" << format_number(worst) << "\n";
  if (worst > tol) throw NumericalFailure("gradient disagrees with finite differences");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral loop-space numerics: fractional Sobolev metrics, action functionals and minimax sweeps"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config (full config or a bare Hamiltonian spec)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", common.out_dir, "Output directory");
    sub->add_option("--seed", common.seed, "Random seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--modes", common.modes, "Fourier mode cutoff J")->check(CLI::PositiveNumber);
    sub->add_option("--s", common.s, "Regularity s in (1/2, 1)");
    sub->add_option("--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  std::string method = "auto";
  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues and eigenfield sup norms along a loop");
  add_common(spectrum);
  spectrum->add_option("--method", method, "auto | analytic | dense");

  int n_max = -1;
  std::vector<double> r_list;
  auto* metrics = app.add_subcommand("metrics-compare", "Intrinsic vs embedded fractional norms on the circle");
  add_common(metrics);
  metrics->add_option("--n-max", n_max, "Largest winding number");
  metrics->add_option("--r-list", r_list, "Sobolev exponents in [0, 1]")->delimiter(',');

  double r_min = -1.0, r_max = -1.0;
  int points = -1;
  auto* sweep = app.add_subcommand("orbit-sweep", "Minimax values and critical witnesses over an r-grid");
  add_common(sweep);
  sweep->add_option("--r-min", r_min, "Smallest r");
  sweep->add_option("--r-max", r_max, "Largest r");
  sweep->add_option("--points", points, "Grid size (0 gives an empty sweep)")->check(CLI::NonNegativeNumber);

  int seeds = -1;
  double horizon = -1.0;
  std::string fixture;
  auto* ps = app.add_subcommand("ps-diagnose", "Palais-Smale bound report along flow trajectories");
  add_common(ps);
  ps->add_option("--seeds", seeds, "Number of trajectories");
  ps->add_option("--horizon", horizon, "Flow time per trajectory");
  ps->add_option("--fixture", fixture, "Synthetic trajectory instead of a flow (divergent)");

  int gc_points = -1;
  auto* gc = app.add_subcommand("gradient-check", "Finite-difference check of the action gradient");
  add_common(gc);
  gc->add_option("--points", gc_points, "Number of random phase points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*spectrum) return cmd_spectrum(common, method);
    if (*metrics) return cmd_metrics(common, n_max, r_list);
    if (*sweep) return cmd_sweep(common, r_min, r_max, points);
    if (*ps) return cmd_ps(common, seeds, horizon, fixture);
    if (*gc) return cmd_gradient_check(common, gc_points);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
