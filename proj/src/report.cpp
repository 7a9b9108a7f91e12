#include "sl/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace sl {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr const char* kToolVersion = "slsphere-1.0.0";

std::string hexfloat(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hexfloat(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw IoError("checkpoint: bad float token '" + s + "'");
  return v;
}

}  // namespace

bool DiagnosticsReport::all_passed(double tol) const {
  bool ok = std::abs(stokes_residual) <= tol &&
            std::abs(nehari_residual) <= tol && neg_constraint_max <= tol;
  ok = ok && coupling_in_window;
  if (kazdan_warner_applicable) ok = ok && kazdan_warner.norm() <= 1e-5;
  for (const auto& h : holder_checks) ok = ok && h.satisfied;
  for (const auto& m : mt_results)
    if (m.applicable) ok = ok && m.result.satisfied;
  double red = std::abs(energy_value - reduced_energy_value);
  ok = ok && red <= tol * (1.0 + std::abs(energy_value));
  return ok;
}

std::string DiagnosticsReport::to_json(const std::string& timestamp) const {
  nlohmann::ordered_json j;
  j["schema"] = "slsphere-report-v1";
  j["timestamp"] = timestamp;
  j["band_l"] = band_l;
  j["band_lambda"] = band_lambda;
  j["energy"] = energy_value;
  j["reduced_energy"] = reduced_energy_value;
  j["stokes_residual"] = stokes_residual;
  j["nehari_residual"] = nehari_residual;
  j["neg_constraint_max"] = neg_constraint_max;
  j["coupling_window"] = {{"value", coupling},
                          {"in_window", coupling_in_window}};
  j["kazdan_warner"] = {
      {"applicable", kazdan_warner_applicable},
      {"vector",
       {kazdan_warner[0], kazdan_warner[1], kazdan_warner[2]}}};
  j["spinor_norms"] = {{"l2", psi_l2},
                       {"l4", psi_l4},
                       {"h_half_hilbert", psi_h_half_hilbert},
                       {"h_half_equivalent", psi_h_half_equivalent},
                       {"plus_l2", psi_plus_l2},
                       {"minus_l2", psi_minus_l2}};
  j["holder_checks"] = nlohmann::ordered_json::array();
  for (const auto& h : holder_checks)
    j["holder_checks"].push_back({{"alpha", h.alpha},
                                  {"beta", h.beta},
                                  {"lhs", h.lhs},
                                  {"rhs", h.rhs},
                                  {"satisfied", h.satisfied}});
  j["mt_results"] = nlohmann::ordered_json::array();
  for (const auto& m : mt_results)
    j["mt_results"].push_back({{"variant", m.result.variant},
                               {"applicable", m.applicable},
                               {"lhs", m.result.lhs},
                               {"rhs", m.result.rhs},
                               {"margin", m.result.margin},
                               {"satisfied", m.result.satisfied}});
  j["concentration_map"] = nlohmann::ordered_json::array();
  for (const auto& c : concentration_map)
    j["concentration_map"].push_back(
        {{"radius", c.radius},
         {"max_mass", c.max_mass},
         {"center", {c.argmax[0], c.argmax[1], c.argmax[2]}}});
  j["s_functional"] = s_functional_value;
  j["centroid"] = {centroid_value[0], centroid_value[1], centroid_value[2]};
  j["pde_residual"] = {{"sup_u", pde_sup_u}, {"norm_psi", pde_norm_psi}};
  return j.dump(2) + "\n";
}

DiagnosticsReport run_diagnostics(const SolutionPair& state,
                                  const DiagnosticsOptions& opt) {
  DiagnosticsReport rep;
  const Harmonics& ops = *state.ops;
  const DiracBasis& basis = *state.basis;
  const SphereGrid& g = ops.grid();

  rep.band_l = state.u.band;
  rep.band_lambda = basis.band();

  const ConstraintResidual& r = constraint_residuals(state);
  rep.stokes_residual = r.r_mass;
  rep.nehari_residual = r.r_nehari;
  rep.neg_constraint_max = 0.0;
  for (int j = 0; j < r.r_neg.size(); ++j)
    rep.neg_constraint_max = std::max(rep.neg_constraint_max,
                                      std::abs(r.r_neg[j]));

  double h2_spread =
      state.h2.values.maxCoeff() - state.h2.values.minCoeff();
  rep.kazdan_warner_applicable = h2_spread <= 1e-10;
  if (rep.kazdan_warner_applicable)
    rep.kazdan_warner = kazdan_warner(ops, state.u, state.h1);

  rep.psi_l2 = std::sqrt(state.psi.l2_norm_sq());
  double l4 = 0.0;
  for (int i = 0; i < g.n_nodes(); ++i)
    l4 += g.weights[i] * state.psi.density()[i] * state.psi.density()[i];
  rep.psi_l4 = std::pow(l4, 0.25);
  HHalfNorms hh = basis.h_half_norm(state.psi);
  rep.psi_h_half_hilbert = std::sqrt(hh.hilbert_sq);
  rep.psi_h_half_equivalent = std::sqrt(hh.equivalent_sq);
  auto [plus, minus] = basis.split_pm(state.psi);
  rep.psi_plus_l2 = std::sqrt(plus.l2_norm_sq());
  rep.psi_minus_l2 = std::sqrt(minus.l2_norm_sq());

  rep.coupling = coupling_integral(state);
  rep.coupling_in_window =
      rep.coupling >= -opt.tol && rep.coupling <= kFourPi + opt.tol;

  rep.holder_checks = {holder_check(state, 2.0), holder_check(state, 4.0)};

  for (MtVariant v :
       {MtVariant::standard, MtVariant::centroid_sharp, MtVariant::even}) {
    DiagnosticsReport::MtEntry e;
    try {
      e.result = ops.mt_check(state.u, v);
      e.applicable = true;
    } catch (const std::domain_error&) {
      e.result.variant = v == MtVariant::standard        ? "standard"
                         : v == MtVariant::centroid_sharp ? "centroid_sharp"
                                                          : "even";
      e.applicable = false;
    }
    rep.mt_results.push_back(e);
  }

  Eigen::VectorXd density =
      state.h1.values.cwiseProduct(ops.exp_values(state.u, 2.0)) +
      state.h2.values.cwiseProduct(ops.exp_values(state.u, 1.0))
          .cwiseProduct(state.psi.density());
  for (double radius : opt.radii) {
    ConcentrationEntry ce;
    ce.radius = radius;
    for (int i = 0; i < g.n_theta; i += opt.center_stride)
      for (int k = 0; k < g.n_phi; k += opt.center_stride) {
        const Vec3& c = g.nodes[g.node_index(i, k)];
        double m = g.ball_mass(density, c, radius);
        if (m > ce.max_mass) {
          ce.max_mass = m;
          ce.argmax = c;
        }
      }
    rep.concentration_map.push_back(ce);
  }

  rep.s_functional_value = s_functional(ops, state.u);
  rep.centroid_value = centroid(ops, state.u);
  rep.energy_value = energy(state);
  rep.reduced_energy_value = reduced_energy(state);
  PdeResidual pr = pde_residual(state);
  rep.pde_sup_u = pr.sup_u;
  rep.pde_norm_psi = pr.norm_psi;
  return rep;
}

Checkpoint Checkpoint::from_state(const SolutionPair& state, unsigned seed,
                                  const std::string& config_hash) {
  Checkpoint c;
  // store all scalar fields at one common band so materialize needs no
  // per-field band bookkeeping
  c.band_l = std::max({state.u.band, state.h1.band, state.h2.band});
  c.band_lambda = state.basis->band();
  c.seed = seed;
  c.config_hash = config_hash;
  c.tool_version = kToolVersion;
  auto pad = [&](const Eigen::VectorXd& coeffs) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero((c.band_l + 1) * (c.band_l + 1));
    out.head(coeffs.size()) = coeffs;
    return out;
  };
  c.u_coeffs = pad(state.u.coeffs);
  c.psi_coeffs = state.psi.coeffs();
  c.h1_coeffs = pad(state.h1.coeffs);
  c.h2_coeffs = pad(state.h2.coeffs);
  return c;
}

SolutionPair Checkpoint::materialize(const Harmonics& ops,
                                     const DiracBasis& basis) const {
  if (band_l > ops.max_band())
    throw IoError("checkpoint band L " + std::to_string(band_l) +
                  " exceeds transform capacity " +
                  std::to_string(ops.max_band()));
  if (band_lambda != basis.band())
    throw IoError("checkpoint Lambda " + std::to_string(band_lambda) +
                  " does not match requested basis band " +
                  std::to_string(basis.band()));
  return SolutionPair(
      ops, basis, ops.field_from_coeffs(u_coeffs, band_l),
      SpinorState(basis, psi_coeffs),
      ops.field_from_coeffs(h1_coeffs, band_l),
      ops.field_from_coeffs(h2_coeffs, band_l));
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "slsphere-checkpoint " << c.version << "\n";
  f << "L " << c.band_l << "\n";
  f << "Lambda " << c.band_lambda << "\n";
  f << "phase " << c.phase_tag << "\n";
  f << "seed " << c.seed << "\n";
  f << "config_hash " << c.config_hash << "\n";
  f << "tool " << c.tool_version << "\n";
  f << "u " << c.u_coeffs.size() << "\n";
  for (int i = 0; i < c.u_coeffs.size(); ++i)
    f << hexfloat(c.u_coeffs[i]) << "\n";
  f << "psi " << c.psi_coeffs.size() << "\n";
  for (int i = 0; i < c.psi_coeffs.size(); ++i)
    f << hexfloat(c.psi_coeffs[i].real()) << " "
      << hexfloat(c.psi_coeffs[i].imag()) << "\n";
  f << "h1 " << c.h1_coeffs.size() << "\n";
  for (int i = 0; i < c.h1_coeffs.size(); ++i)
    f << hexfloat(c.h1_coeffs[i]) << "\n";
  f << "h2 " << c.h2_coeffs.size() << "\n";
  for (int i = 0; i < c.h2_coeffs.size(); ++i)
    f << hexfloat(c.h2_coeffs[i]) << "\n";
  f << "end\n";
  if (!f) throw IoError("write failure on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  auto expect = [&](const std::string& tag) {
    std::string s;
    if (!(f >> s) || s != tag)
      throw IoError("checkpoint " + path + ": expected '" + tag +
                    "', got '" + s + "'");
  };
  Checkpoint c;
  expect("slsphere-checkpoint");
  if (!(f >> c.version)) throw IoError("checkpoint: missing version");
  if (c.version != 1)
    throw IoError("checkpoint version " + std::to_string(c.version) +
                  " unsupported (this build reads version 1)");
  expect("L");
  f >> c.band_l;
  expect("Lambda");
  f >> c.band_lambda;
  expect("phase");
  f >> c.phase_tag;
  expect("seed");
  f >> c.seed;
  expect("config_hash");
  f >> c.config_hash;
  expect("tool");
  f >> c.tool_version;
  auto read_vec = [&](const std::string& tag, Eigen::VectorXd& out) {
    expect(tag);
    int n = -1;
    f >> n;
    if (n < 0) throw IoError("checkpoint: bad length for " + tag);
    out.resize(n);
    std::string tok;
    for (int i = 0; i < n; ++i) {
      if (!(f >> tok)) throw IoError("checkpoint truncated in " + tag);
      out[i] = parse_hexfloat(tok);
    }
  };
  read_vec("u", c.u_coeffs);
  expect("psi");
  int n = -1;
  f >> n;
  if (n < 0) throw IoError("checkpoint: bad psi length");
  c.psi_coeffs.resize(n);
  std::string tr, ti;
  for (int i = 0; i < n; ++i) {
    if (!(f >> tr >> ti)) throw IoError("checkpoint truncated in psi");
    c.psi_coeffs[i] = Complex(parse_hexfloat(tr), parse_hexfloat(ti));
  }
  read_vec("h1", c.h1_coeffs);
  read_vec("h2", c.h2_coeffs);
  expect("end");
  return c;
}

ScalarField FieldSpec::build(const Harmonics& ops, int band) const {
  if (kind == "constant") return ops.constant(value, band);
  if (kind == "legendre") {
    Eigen::VectorXd lc =
        Eigen::Map<const Eigen::VectorXd>(coeffs.data(), coeffs.size());
    return ops.zonal_legendre(lc, band);
  }
  if (kind == "ylm") {
    int n = (band + 1) * (band + 1);
    if (static_cast<int>(coeffs.size()) > n)
      throw ConfigError("field coefficients exceed band " +
                        std::to_string(band));
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (size_t i = 0; i < coeffs.size(); ++i) c[i] = coeffs[i];
    return ops.field_from_coeffs(c, band);
  }
  throw ConfigError("unknown field kind '" + kind +
                    "' (constant|legendre|ylm)");
}

std::string AppConfig::hash() const {
  std::ostringstream s;
  s << grid_l << '|' << dirac_band << '|' << h1.kind << '|' << h1.value;
  for (double v : h1.coeffs) s << ',' << v;
  s << '|' << h2.kind << '|' << h2.value;
  for (double v : h2.coeffs) s << ',' << v;
  s << '|' << solve.tol_constraint << '|' << solve.tol_gradient << '|'
    << solve.tol_residual << '|' << solve.max_outer << '|' << solve.max_inner
    << '|' << solve.parity_even << '|' << static_cast<int>(solve.init) << '|'
    << solve.seed << '|' << solve.rho_start << '|' << solve.rho_end << '|'
    << solve.rho_step << '|' << solve.penalty_growth << '|'
    << solve.penalty_init << '|' << solve.gauge_weight;
  std::string t = s.str();
  uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : t) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

AppConfig parse_config(const std::string& text) {
  AppConfig cfg;
  cfg.h2.value = 2.0;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto as_double = [](const std::string& k, const std::string& v) {
    try {
      size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("bad numeric value '" + v + "' for key " + k);
    }
  };
  auto as_int = [&](const std::string& k, const std::string& v) {
    double d = as_double(k, v);
    int i = static_cast<int>(std::lround(d));
    if (i != d) throw ConfigError("key " + k + " needs an integer, got " + v);
    return i;
  };
  auto as_bool = [](const std::string& k, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key " + k + " needs true/false, got '" + v + "'");
  };
  auto as_list = [&](const std::string& k, const std::string& v) {
    std::vector<double> out;
    std::istringstream ls(v);
    std::string item;
    while (std::getline(ls, item, ','))
      out.push_back(as_double(k, item));
    if (out.empty()) throw ConfigError("key " + k + " needs a list");
    return out;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string()
                                    : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("line " + std::to_string(lineno) +
                        ": empty key or value");

    if (key == "grid.L") cfg.grid_l = as_int(key, val);
    else if (key == "dirac.band") cfg.dirac_band = as_int(key, val);
    else if (key == "h1.kind") cfg.h1.kind = val;
    else if (key == "h1.value") cfg.h1.value = as_double(key, val);
    else if (key == "h1.coeffs") cfg.h1.coeffs = as_list(key, val);
    else if (key == "h2.kind") cfg.h2.kind = val;
    else if (key == "h2.value") cfg.h2.value = as_double(key, val);
    else if (key == "h2.coeffs") cfg.h2.coeffs = as_list(key, val);
    else if (key == "solve.tol_constraint")
      cfg.solve.tol_constraint = as_double(key, val);
    else if (key == "solve.tol_gradient")
      cfg.solve.tol_gradient = as_double(key, val);
    else if (key == "solve.tol_residual")
      cfg.solve.tol_residual = as_double(key, val);
    else if (key == "solve.max_iter") cfg.solve.max_inner = as_int(key, val);
    else if (key == "solve.max_outer") cfg.solve.max_outer = as_int(key, val);
    else if (key == "solve.parity") cfg.solve.parity_even = as_bool(key, val);
    else if (key == "solve.seed")
      cfg.solve.seed = static_cast<unsigned>(as_int(key, val));
    else if (key == "solve.init") {
      if (val == "zero") cfg.solve.init = InitKind::zero;
      else if (val == "perturbed-special")
        cfg.solve.init = InitKind::perturbed_special;
      else if (val == "random") cfg.solve.init = InitKind::random;
      else throw ConfigError("solve.init: unknown mode '" + val + "'");
    } else if (key == "solve.penalty_growth")
      cfg.solve.penalty_growth = as_double(key, val);
    else if (key == "solve.penalty_init")
      cfg.solve.penalty_init = as_double(key, val);
    else if (key == "solve.gauge_weight")
      cfg.solve.gauge_weight = as_double(key, val);
    else if (key == "continuation.rho_start")
      cfg.solve.rho_start = as_double(key, val);
    else if (key == "continuation.rho_end")
      cfg.solve.rho_end = as_double(key, val);
    else if (key == "continuation.rho_step")
      cfg.solve.rho_step = as_double(key, val);
    else
      throw ConfigError("unknown configuration key '" + key + "' (line " +
                        std::to_string(lineno) + ")");
  }
  cfg.solve.band_l = cfg.grid_l;
  cfg.solve.band_lambda = cfg.dirac_band;
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace sl
