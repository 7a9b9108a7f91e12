// slsphere: spectral solver and verification suite for the coupled
// Liouville/Dirac system on the round two-sphere.
//
// Exit codes:
//   0  success, all applicable checks passed
//   2  usage error (bad flags/subcommand)
//   3  malformed configuration
//   4  check failure or non-convergence
//   5  i/o or checkpoint version error
//   6  exponential overflow (solution blow-up)

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "sl/report.hpp"

using namespace sl;

namespace {

std::string now_timestamp() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
  return buf;
}

std::string out_path(const std::string& dir_flag, const std::string& name) {
  std::string dir = dir_flag;
  if (dir.empty()) {
    if (const char* env = std::getenv("SLSPHERE_OUT")) dir = env;
  }
  if (dir.empty()) dir = ".";
  return dir + "/" + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << content;
  if (!f) throw IoError("write failure on " + path);
}

struct LoadedState {
  SphereGrid grid;
  std::unique_ptr<Harmonics> ops;
  std::unique_ptr<DiracBasis> basis;
  Checkpoint ckpt;
  std::unique_ptr<SolutionPair> state;
};

LoadedState load_state(const std::string& path) {
  LoadedState ls;
  ls.ckpt = load_checkpoint(path);
  ls.grid = build_grid(ls.ckpt.band_l);
  ls.ops = std::make_unique<Harmonics>(ls.grid, ls.ckpt.band_l);
  ls.basis = std::make_unique<DiracBasis>(ls.grid, ls.ckpt.band_lambda);
  ls.state = std::make_unique<SolutionPair>(
      ls.ckpt.materialize(*ls.ops, *ls.basis));
  return ls;
}

MobiusMap random_mobius(std::mt19937& rng, double scale) {
  std::normal_distribution<double> nd;
  // exponential of a small sl(2,C) element; stays in the well-resolved
  // regime of the band-limited pullbacks
  Eigen::Matrix2cd A;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) A(r, c) = Complex(nd(rng), nd(rng));
  A -= Eigen::Matrix2cd::Identity() * (A.trace() / 2.0);
  A *= scale;
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2cd term = Eigen::Matrix2cd::Identity();
  for (int k = 1; k <= 24; ++k) {
    term = (term * A / double(k)).eval();
    m += term;
  }
  return MobiusMap(m);
}

int cmd_solve(const std::string& config_path, const std::string& outdir,
              const std::string& tag, bool refine) {
  AppConfig cfg = load_config(config_path);
  SphereGrid grid = build_grid(cfg.grid_l);
  Harmonics ops(grid, cfg.grid_l);
  DiracBasis basis(grid, cfg.dirac_band);
  ScalarField h1 = cfg.h1.build(ops, cfg.grid_l);
  ScalarField h2 = cfg.h2.build(ops, cfg.grid_l);

  MinimizeResult res = minimize(cfg.solve, ops, basis, h1, h2, std::nullopt,
                                &std::cout);
  if (refine && res.converged) {
    NewtonResult nr = newton_refine(res.state, cfg.solve.tol_residual);
    if (nr.converged) res.state = nr.state;
    std::cout << "newton_refine: converged=" << nr.converged
              << " iterations=" << nr.iterations
              << " sup_residual=" << nr.sup_residual
              << " min_singular=" << nr.min_singular_value << "\n";
  }

  Checkpoint ck = Checkpoint::from_state(res.state, cfg.solve.seed,
                                         cfg.hash());
  save_checkpoint(ck, out_path(outdir, tag + ".ckpt"));
  DiagnosticsReport rep = run_diagnostics(res.state);
  write_file(out_path(outdir, tag + ".report.json"),
             rep.to_json(now_timestamp()));
  std::cout << "converged=" << res.converged << " energy=" << res.energy
            << " inner_iterations=" << res.iterations << "\n";
  if (!res.converged) return 4;
  return rep.all_passed(1e-8) ? 0 : 4;
}

int cmd_verify(const std::string& ckpt_path, const std::string& outdir,
               bool emit) {
  LoadedState ls = load_state(ckpt_path);
  DiagnosticsReport rep = run_diagnostics(*ls.state);
  std::string json = rep.to_json(now_timestamp());
  if (emit) write_file(out_path(outdir, "verify.report.json"), json);
  std::cout << json;
  return rep.all_passed(1e-8) ? 0 : 4;
}

int cmd_spectrum(int band, int grid_l) {
  SphereGrid grid = build_grid(grid_l);
  DiracBasis basis(grid, band);
  std::cout << "lambda  complex_multiplicity\n";
  for (int k = 0; k < band; ++k) {
    std::cout << "  +" << (k + 1) << "      " << 2 * (k + 1) << "\n";
    std::cout << "  -" << (k + 1) << "      " << 2 * (k + 1) << "\n";
  }
  // sanity: count the constructed eigenspinors
  int expect = 0;
  for (int k = 0; k < band; ++k) expect += 4 * (k + 1);
  if (basis.size() != expect) {
    std::cerr << "basis size " << basis.size() << " != " << expect << "\n";
    return 4;
  }
  return 0;
}

int cmd_mt_check(const std::string& variant, int samples, unsigned seed,
                 int band) {
  MtVariant v;
  if (variant == "standard") v = MtVariant::standard;
  else if (variant == "centroid" || variant == "centroid_sharp")
    v = MtVariant::centroid_sharp;
  else if (variant == "even") v = MtVariant::even;
  else throw ConfigError("unknown variant '" + variant + "'");

  SphereGrid grid = build_grid(band);
  Harmonics ops(grid, band);
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  int violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    int n = (band + 1) * (band + 1);
    Eigen::VectorXd c(n);
    for (int l = 0; l <= band; ++l)
      for (int m = -l; m <= l; ++m) {
        double scale = 0.4 / (1.0 + l);
        // the sharpened variants hold on even fields; generate them
        // directly (an even field has exactly zero centroid)
        bool zero = v != MtVariant::standard && (l % 2 == 1);
        c[l * l + l + m] = zero ? 0.0 : scale * nd(rng);
      }
    ScalarField f = ops.field_from_coeffs(c, band);
    MtResult r = ops.mt_check(f, v);
    if (!r.satisfied) ++violations;
    worst = std::min(worst, r.margin / std::max(1.0, std::abs(r.rhs)));
  }
  std::cout << "variant=" << variant << " samples=" << samples
            << " violations=" << violations
            << " min_relative_margin=" << worst << "\n";
  return violations == 0 ? 0 : 4;
}

int cmd_conformal(const std::string& ckpt_path, int maps, unsigned seed,
                  double scale) {
  LoadedState ls = load_state(ckpt_path);
  const Harmonics& ops = *ls.ops;
  const ScalarField& u = ls.state->u;
  double s0 = s_functional(ops, u);
  double m0 = ops.grid().integrate(ops.exp_values(u, 2.0));
  std::mt19937 rng(seed);
  double worst_s = 0.0, worst_m = 0.0;
  for (int k = 0; k < maps; ++k) {
    MobiusMap mob = random_mobius(rng, scale);
    ScalarField up = pullback_scalar(ops, u, mob);
    worst_s = std::max(worst_s, std::abs(s_functional(ops, up) - s0));
    double m = ops.grid().integrate(ops.exp_values(up, 2.0));
    worst_m = std::max(worst_m, std::abs(m - m0) / std::abs(m0));
  }
  std::cout << "maps=" << maps << " max|S[u_phi]-S[u]|=" << worst_s
            << " max_rel_mass_drift=" << worst_m << "\n";
  return (worst_s <= 1e-6 && worst_m <= 1e-6) ? 0 : 4;
}

int cmd_special(const std::string& name, double rho, int grid_l, int band,
                const std::string& outdir, const std::string& tag) {
  if (rho < 1.0) throw ConfigError("special: rho must be >= 1");
  SphereGrid grid = build_grid(grid_l);
  Harmonics ops(grid, grid_l);
  DiracBasis basis(grid, band);
  ScalarField h1 = ops.constant(1.0, grid_l);
  SolutionPair state = [&] {
    if (name == "rho-family") {
      ScalarField h2 = ops.constant(rho, grid_l);
      VecXc a = basis.killing_spinor().coeffs() *
                (std::sqrt(rho * rho - 1.0) / rho);
      return SolutionPair(ops, basis, ops.constant(-std::log(rho), grid_l),
                          SpinorState(basis, a), h1, h2);
    }
    if (name == "killing") {
      ScalarField h2 = ops.constant(1.0, grid_l);
      return SolutionPair(ops, basis, ops.constant(0.0, grid_l),
                          basis.killing_spinor(), h1, h2);
    }
    if (name == "zero") {
      ScalarField h2 = ops.constant(1.0, grid_l);
      return SolutionPair(ops, basis, ops.constant(0.0, grid_l),
                          basis.zero_state(), h1, h2);
    }
    throw ConfigError("unknown special solution '" + name +
                      "' (rho-family|killing|zero)");
  }();
  Checkpoint ck = Checkpoint::from_state(state, 0, "special:" + name);
  save_checkpoint(ck, out_path(outdir, tag + ".ckpt"));
  DiagnosticsReport rep = run_diagnostics(state);
  write_file(out_path(outdir, tag + ".report.json"),
             rep.to_json(now_timestamp()));
  std::cout << "energy=" << rep.energy_value
            << " pde_sup=" << rep.pde_sup_u << "\n";
  return rep.all_passed(1e-8) ? 0 : 4;
}

int cmd_concentration(const std::string& ckpt_path,
                      const std::vector<double>& radii, int stride,
                      const std::string& outdir) {
  LoadedState ls = load_state(ckpt_path);
  const SphereGrid& g = ls.grid;
  const Harmonics& ops = *ls.ops;
  const SolutionPair& s = *ls.state;
  Eigen::VectorXd density =
      s.h1.values.cwiseProduct(ops.exp_values(s.u, 2.0)) +
      s.h2.values.cwiseProduct(ops.exp_values(s.u, 1.0))
          .cwiseProduct(s.psi.density());
  std::ostringstream csv;
  csv << "center_x,center_y,center_z,radius,mass\n";
  csv.precision(17);
  for (double r : radii)
    for (int i = 0; i < g.n_theta; i += stride)
      for (int k = 0; k < g.n_phi; k += stride) {
        const Vec3& c = g.nodes[g.node_index(i, k)];
        csv << c[0] << ',' << c[1] << ',' << c[2] << ',' << r << ','
            << g.ball_mass(density, c, r) << "\n";
      }
  write_file(out_path(outdir, "concentration.csv"), csv.str());
  std::cout << "wrote " << out_path(outdir, "concentration.csv") << "\n";
  return 0;
}

int cmd_report(const std::string& ckpt_path, const std::string& outdir,
               const std::string& timestamp) {
  LoadedState ls = load_state(ckpt_path);
  DiagnosticsReport rep = run_diagnostics(*ls.state);
  std::string json =
      rep.to_json(timestamp.empty() ? now_timestamp() : timestamp);
  write_file(out_path(outdir, "report.json"), json);
  std::cout << json;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral super-Liouville solver on the round sphere"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string outdir;
  app.add_option("--output-dir", outdir,
                 "output directory (overrides SLSPHERE_OUT)");

  // solve
  auto* solve = app.add_subcommand("solve", "run the constrained minimizer");
  std::string config_path, tag = "solution";
  bool refine = true;
  solve->add_option("--config", config_path, "configuration file")
      ->required();
  solve->add_option("--tag", tag, "output file stem");
  solve->add_flag("!--no-refine", refine, "skip the Newton polish");

  // verify
  auto* verify = app.add_subcommand("verify", "re-run diagnostics on a checkpoint");
  std::string ckpt;
  bool emit = false;
  verify->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  verify->add_flag("--emit", emit, "also write verify.report.json");

  // spectrum
  auto* spectrum = app.add_subcommand("spectrum", "Dirac eigenvalue table");
  int band = 5, grid_l = 16;
  spectrum->add_option("--band", band, "truncation Lambda");
  spectrum->add_option("--grid-L", grid_l, "grid band");

  // mt-check
  auto* mt = app.add_subcommand("mt-check", "Moser-Trudinger property run");
  std::string variant = "standard";
  int samples = 1000;
  unsigned seed = 1;
  int mt_band = 8;
  mt->add_option("--variant", variant, "standard|centroid|even");
  mt->add_option("--samples", samples, "number of random fields");
  mt->add_option("--seed", seed, "rng seed");
  mt->add_option("--band", mt_band, "field band limit");

  // conformal
  auto* conf = app.add_subcommand("conformal", "Moebius invariance checks");
  std::string conf_ckpt;
  int maps = 100;
  unsigned conf_seed = 1;
  double scale = 0.25;
  conf->add_option("--checkpoint", conf_ckpt, "checkpoint file")->required();
  conf->add_option("--maps", maps, "number of random maps");
  conf->add_option("--seed", conf_seed, "rng seed");
  conf->add_option("--scale", scale, "Lie-algebra scale of the maps");

  // special
  auto* special = app.add_subcommand("special", "materialize a closed-form solution");
  std::string name = "rho-family", sp_tag = "special";
  double rho = 2.0;
  int sp_l = 16, sp_band = 5;
  special->add_option("--name", name, "rho-family|killing|zero");
  special->add_option("--rho", rho, "family parameter (>= 1)");
  special->add_option("--grid-L", sp_l, "grid band");
  special->add_option("--band", sp_band, "Dirac truncation");
  special->add_option("--tag", sp_tag, "output file stem");

  // concentration
  auto* conc = app.add_subcommand("concentration", "ball-mass map as CSV");
  std::string conc_ckpt;
  std::vector<double> radii{0.5};
  int stride = 4;
  conc->add_option("--checkpoint", conc_ckpt, "checkpoint file")->required();
  conc->add_option("--radii", radii, "ball radii");
  conc->add_option("--stride", stride, "center decimation stride");

  // report
  auto* report = app.add_subcommand("report", "emit the JSON report");
  std::string rep_ckpt, timestamp;
  report->add_option("--checkpoint", rep_ckpt, "checkpoint file")->required();
  report->add_option("--timestamp", timestamp,
                     "fixed timestamp (for reproducible output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(config_path, outdir, tag, refine);
    if (verify->parsed()) return cmd_verify(ckpt, outdir, emit);
    if (spectrum->parsed()) return cmd_spectrum(band, grid_l);
    if (mt->parsed()) return cmd_mt_check(variant, samples, seed, mt_band);
    if (conf->parsed()) return cmd_conformal(conf_ckpt, maps, conf_seed, scale);
    if (special->parsed())
      return cmd_special(name, rho, sp_l, sp_band, outdir, sp_tag);
    if (conc->parsed()) return cmd_concentration(conc_ckpt, radii, stride, outdir);
    if (report->parsed()) return cmd_report(rep_ckpt, outdir, timestamp);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 5;
  } catch (const std::overflow_error& e) {
    std::cerr << "overflow: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
