// twaves command-line driver.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli.hpp"
#include "suites.hpp"
#include "twaves/nlsf.hpp"
#include "twaves/transonic.hpp"

using namespace twaves;
using cli::Csv;

namespace {

struct Args {
  std::string model = "gp";
  std::vector<std::string> params;
  int dim = 1;
  std::string mode;
  std::optional<double> c, k;
  std::string grid, box, sweep, out, in;
  bool box_auto = false;
  double tol_residual = 1e-8, tol_pohozaev = 1e-6, tol_update = 1e-10;
  unsigned seed = 0;
};

cli::RunConfig to_config(const Args& a) {
  cli::RunConfig cfg;
  cfg.model = a.model;
  cfg.params = cli::parse_params(a.params);
  cfg.dim = a.dim;
  cfg.mode = a.mode;
  cfg.c = a.c;
  cfg.k = a.k;
  if (!a.grid.empty()) cfg.grid = cli::parse_sizes(a.grid);
  if (!a.box.empty()) cfg.box = cli::parse_lengths(a.box);
  cfg.box_auto = a.box_auto;
  cfg.sweep = a.sweep;
  cfg.tol_residual = a.tol_residual;
  cfg.tol_pohozaev = a.tol_pohozaev;
  cfg.tol_update = a.tol_update;
  cfg.out = a.out;
  cfg.seed = a.seed;
  return cli::resolve(cfg);
}

void model_options(CLI::App* sub, Args& a) {
  sub->add_option("--model", a.model, "model id (gp, cubic-quintic, saturating, power-sum)")->capture_default_str();
  sub->add_option("--param", a.params, "model parameters key=value[,key=value]");
}

void grid_options(CLI::App* sub, Args& a) {
  sub->add_option("--dim", a.dim, "dimension 1, 2 or 3")->capture_default_str();
  sub->add_option("--grid", a.grid, "grid sizes n1[xn2[xn3]], powers of two");
  sub->add_option("--box", a.box, "box lengths L1[xL2[xL3]]");
  sub->add_flag("--box-auto", a.box_auto, "transonic box L1 = 60/eps, Lperp = 120/eps^2 (default without --box)");
}

Metadata solution_meta(const cli::RunConfig& cfg, const TwSolution& s) {
  Metadata m{{"kind", "tw"}, {"model", cfg.model}, {"mode", cfg.mode}, {"c", Csv::num(s.c)}, {"eps", Csv::num(s.eps)}};
  for (const auto& [k, v] : cfg.params) m["param." + k] = Csv::num(v);
  if (cfg.box_auto) m["box_auto"] = "1";
  return m;
}

Nonlinearity model_from_meta(const Metadata& m) {
  std::map<std::string, double> params;
  for (const auto& [k, v] : m)
    if (k.rfind("param.", 0) == 0) params[k.substr(6)] = cli::parse_double(v, k);
  const auto it = m.find("model");
  return make_model(it == m.end() ? "gp" : it->second, params);
}

double meta_number(const Metadata& m, const std::string& key, const std::string& path) {
  const auto it = m.find(key);
  if (it == m.end()) fail(ErrorCode::ParseError, path + ": metadata lacks '" + key + "'");
  return cli::parse_double(it->second, key);
}

// ---- kpi -----------------------------------------------------------------------

int kpi_ground(const Args& a, double cs, double gamma, double tol) {
  if (a.dim < 1 || a.dim > 3) fail(ErrorCode::ValidationError, "dimension must be 1, 2 or 3");
  // defaults match the slow box of the auto-boxed travelling waves
  const auto sizes = !a.grid.empty() ? cli::parse_sizes(a.grid) : a.dim == 1 ? std::vector<std::size_t>{4096} : std::vector<std::size_t>(a.dim, 128);
  std::vector<double> lens = a.dim == 1 ? std::vector<double>{400.0} : std::vector<double>{60.0, 120.0, 120.0};
  if (a.box.empty()) lens.resize(sizes.size());
  else lens = cli::parse_lengths(a.box);
  if (static_cast<int>(sizes.size()) != a.dim || static_cast<int>(lens.size()) != a.dim)
    fail(ErrorCode::ValidationError, "grid and box must have one entry per dimension");
  for (auto n : sizes)
    if (!cli::power_of_two(n)) fail(ErrorCode::ValidationError, "grid size " + std::to_string(n) + " is not a power of two");
  PetviashviliOptions opt;
  opt.tol = tol;
  const KpiWave w = a.dim == 1 ? kdv_soliton(Grid::make(sizes, lens), cs, gamma) : petviashvili_ground_state(Grid::make(sizes, lens), cs, gamma, opt);
  const std::string out = cli::output_path(a.out.empty() ? "kpi.nlsf" : a.out);
  write_nlsf(out, center_wave(w.w), {{"kind", "kpi"}, {"cs", Csv::num(cs)}, {"gamma", Csv::num(gamma)}});
  Csv csv{"kpi-ground", {"file", "converged", "iterations", "residual", "action", "multiplier"}, {}};
  csv.rows.push_back({out, w.converged ? "1" : "0", std::to_string(w.iterations), Csv::num(w.residual), Csv::num(w.action), Csv::num(w.multiplier)});
  std::cout << csv.str();
  return w.converged ? 0 : 1;
}

int kpi_check(const std::string& in) {
  const NlsfFile f = read_nlsf(in);
  if (f.is_complex()) fail(ErrorCode::ValidationError, in + " holds a complex field, not a KP-I profile");
  const Metadata m = read_metadata(in);
  const double cs = m.count("cs") ? meta_number(m, "cs", in) : std::sqrt(2.0);
  const double gamma = m.count("gamma") ? meta_number(m, "gamma", in) : 6.0;
  const KpiWave w = make_kpi_wave(std::get<RField>(f.field), cs, gamma);
  const int dim = w.w.grid.ndim;
  const auto r = pohozaev_ratios(w, dim);
  const auto t = kpi_integrals(w.w);
  Csv csv{"kpi-check", {"dim", "residual", "r_deriv", "r_cubic", "r_mass", "S", "mu"}, {}};
  csv.rows.push_back({std::to_string(dim), Csv::num(sw_residual(w)), Csv::num(r.r_deriv), Csv::num(r.r_cubic), Csv::num(r.r_mass), Csv::num(w.action),
                      Csv::num(t.mass / (cs * cs))});
  std::cout << csv.str();
  return 0;
}

// ---- tw ------------------------------------------------------------------------

TwSolution solve(const cli::RunConfig& cfg, const Nonlinearity& nl) {
  if (cfg.mode == "newton1d") {
    const double eps = speed_eps(nl, *cfg.c);
    Solve1dOptions opt;
    opt.tol = std::min(opt.tol, cfg.tol_update);
    return solve_1d(nl, *cfg.c, cli::make_grid(cfg, eps), opt);
  }
  if (cfg.mode == "fixed-k") {
    FixedKineticOptions opt;
    opt.tol = std::min(opt.tol, cfg.tol_update);
    const Grid g = cfg.box_auto ? Grid::make(cfg.grid, {1.0, 1.0}) : Grid::make(cfg.grid, cfg.box);
    return solve_2d_fixed_kinetic(nl, *cfg.k, g, opt, cfg.box_auto);
  }
  PohozaevOptions opt;
  opt.descent_iter = 0;
  opt.tol_residual = cfg.tol_residual;
  opt.tol_pohozaev = cfg.tol_pohozaev;
  const double eps = speed_eps(nl, *cfg.c);
  return solve_3d_pohozaev(nl, *cfg.c, cli::make_grid(cfg, eps), opt);
}

int tw_solve(const Args& a) {
  const cli::RunConfig cfg = to_config(a);
  const Nonlinearity nl = make_model(cfg.model, cfg.params);
  const TwSolution s = solve(cfg, nl);
  const std::string out = cli::output_path(cfg.out.empty() ? "tw.nlsf" : cfg.out);
  write_nlsf(out, s.u, solution_meta(cfg, s));
  Csv csv{"tw-solve", {"file", "c", "eps", "E", "Q", "residual", "min_modulus", "iterations"}, {}};
  csv.rows.push_back({out, Csv::num(s.c), Csv::num(s.eps), Csv::num(s.energy), Csv::num(s.momentum), Csv::num(s.residual), Csv::num(s.min_modulus),
                      std::to_string(s.iterations)});
  std::cout << csv.str();
  return s.residual <= cfg.tol_residual ? 0 : 1;
}

int tw_check(const std::string& in) {
  const NlsfFile f = read_nlsf(in);
  if (!f.is_complex()) fail(ErrorCode::ValidationError, in + " holds a real field, not a travelling wave");
  const Metadata m = read_metadata(in);
  const Nonlinearity nl = model_from_meta(m);
  const double c = meta_number(m, "c", in);
  const TwSolution s = make_solution(std::get<CField>(f.field), c, nl);
  const ToolsGaps g = tools_identities(s.u, c, nl, 1.0);
  Csv csv{"tw-check", {"c", "eps", "E", "Q", "P_c", "residual", "min_modulus", "gap_energy", "gap_phase"}, {}};
  csv.rows.push_back({Csv::num(c), Csv::num(s.eps), Csv::num(s.energy), Csv::num(s.momentum), Csv::num(s.pohozaev_p), Csv::num(s.residual),
                      Csv::num(s.min_modulus), Csv::num(g.gap_energy), Csv::num(g.gap_phase)});
  std::cout << csv.str();
  return 0;
}

// ---- transonic / curve -----------------------------------------------------------

int transonic_compare(const std::string& tw, const std::string& kpi, const std::string& out) {
  const NlsfFile ft = read_nlsf(tw), fk = read_nlsf(kpi);
  if (!ft.is_complex() || fk.is_complex()) fail(ErrorCode::ValidationError, "--tw needs a complex field and --kpi a real one");
  const Metadata mt = read_metadata(tw), mk = read_metadata(kpi);
  const Nonlinearity nl = model_from_meta(mt);
  const TwSolution s = make_solution(std::get<CField>(ft.field), meta_number(mt, "c", tw), nl);
  const double cs = mk.count("cs") ? meta_number(mk, "cs", kpi) : nl.c_s();
  const double gamma = mk.count("gamma") ? meta_number(mk, "gamma", kpi) : nl.gamma();
  const KpiWave w = make_kpi_wave(std::get<RField>(fk.field), cs, gamma);
  // box-auto files must sit on the auto box; others are taken as they are
  const std::optional<BoxAuto> expected = mt.count("box_auto") ? std::optional<BoxAuto>(BoxAuto{}) : std::nullopt;
  const TransonicProfiles p = rescale_to_slow(s, expected);
  const GroundStateComparison r = compare_to_ground_state(p, w);
  const auto mad = madelung_residuals(p, nl);
  Csv csv{"transonic-compare", {"eps", "err_a", "err_w", "err_phase_constraint", "shift1", "shift2", "shift3", "madelung_res1", "madelung_res2"}, {}};
  csv.rows.push_back({Csv::num(p.eps), Csv::num(r.err_a), Csv::num(r.err_w), Csv::num(r.err_phase_constraint), Csv::num(r.shift[0]), Csv::num(r.shift[1]),
                      Csv::num(r.shift[2]), Csv::num(mad.first), Csv::num(mad.second)});
  const std::string path = cli::output_path(out.empty() ? "report.csv" : out);
  csv.write(path);
  std::cout << csv.str();
  return 0;
}

int curve(const Args& a, bool cold) {
  Args b = a;
  cli::RunConfig cfg = [&] {
    if (b.sweep.empty()) fail(ErrorCode::ValidationError, "--sweep is required");
    return to_config(b);
  }();
  if (cfg.dim != 2 && cfg.dim != 3) fail(ErrorCode::ValidationError, "curves run in 2D or 3D");
  const Nonlinearity nl = make_model(cfg.model, cfg.params);
  std::vector<double> values = cli::parse_sweep(cfg.sweep);
  // 3D sweep values are fractions of the sound speed
  if (cfg.dim == 3)
    for (double& v : values) v *= nl.c_s();
  SweepOptions opt;
  opt.warm_start = !cold;
  opt.threads = suites::worker_cap();
  opt.pohozaev.descent_iter = 0;
  opt.pohozaev.tol_residual = cfg.tol_residual;
  opt.pohozaev.tol_pohozaev = cfg.tol_pohozaev;
  Grid g = cfg.dim == 2 ? Grid::make(cfg.grid, {1.0, 1.0}) : Grid::make(cfg.grid, cfg.box.empty() ? std::vector<double>{60.0, 60.0, 60.0} : cfg.box);
  if (cfg.dim == 2 && !cfg.box_auto) fail(ErrorCode::ValidationError, "2D curves use the auto box");
  const SweepResult r = jones_roberts_sweep(nl, cfg.dim, values, g, opt);
  Csv csv{"curve", {"c", "eps", "E", "Q", "EplusCQ", "k", "Tc", "minmod", "flags"}, {}};
  for (const auto& p : r.points)
    csv.rows.push_back({Csv::num(p.c), Csv::num(p.eps), Csv::num(p.E), Csv::num(p.Q), Csv::num(p.E_plus_cQ), Csv::num(p.k), Csv::num(p.T_c_estimate),
                        Csv::num(p.min_modulus), p.accepted ? p.flags : "rejected: " + p.flags});
  const std::string path = cli::output_path(cfg.out.empty() ? "curve.csv" : cfg.out);
  csv.write(path);
  std::cerr << "q_negative=" << r.q_negative << (cfg.dim == 2 ? " speed_decreasing_in_k=" + std::to_string(r.speed_decreasing_in_k)
                                                              : " tc_decreasing_in_c=" + std::to_string(r.tc_decreasing_in_c) +
                                                                    " secant_inequality=" + std::to_string(r.secant_inequality))
            << '\n';
  const bool any = std::any_of(r.points.begin(), r.points.end(), [](const CurvePoint& p) { return p.accepted; });
  return any ? 0 : 1;
}

// ---- reproduce -------------------------------------------------------------------

int reproduce(const std::string& suite, bool verbose) {
  const auto criteria = suites::suite_criteria(suite);
  if (criteria.empty()) {
    std::string names;
    for (const auto& n : suites::suite_names()) names += (names.empty() ? "" : ", ") + n;
    std::cerr << "unknown suite '" << suite << "' (available: " << names << ")\n";
    return 2;
  }
  suites::Report rep;
  if (verbose) rep.log = [](const std::string& s) { std::cerr << s << '\n'; };
  for (int c : criteria) {
    try {
      suites::run_criterion(c, rep);
    } catch (const std::exception& e) {
      rep.add(c, std::string("error: ") + e.what(), 0.0, 0.0, false);
    }
  }
  const auto path = suites::out_dir() / ("report_" + suite + ".csv");
  std::ofstream(path) << rep.csv();
  std::cout << path.string() << '\n';
  for (const auto& k : rep.checks)
    if (!k.pass) std::cout << "FAIL criterion " << k.criterion << ": " << k.name << " = " << k.value << " (limit " << k.limit << ")\n";
  return rep.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Travelling waves of nonlinear Schroedinger equations and their KP-I limits"};
  app.set_config("--config", "", "key=value file with [sections] named after subcommands");
  app.require_subcommand(1);
  Args a;

  auto* kpi = app.add_subcommand("kpi", "KP-I ground states");
  kpi->require_subcommand(1);
  double cs = std::sqrt(2.0), gamma = 6.0, ktol = 1e-10;
  auto* kg = kpi->add_subcommand("ground", "Petviashvili ground state (KdV soliton in 1D)");
  kg->add_option("--dim", a.dim)->capture_default_str();
  kg->add_option("--cs", cs)->capture_default_str();
  kg->add_option("--gamma", gamma)->capture_default_str();
  kg->add_option("--grid", a.grid, "n1[xn2[xn3]] (default 4096 in 1D, 128 per axis otherwise)");
  kg->add_option("--box", a.box, "L1[xL2[xL3]] (default 400 in 1D, 60x120x120 otherwise)");
  kg->add_option("--tol", ktol, "update tolerance")->capture_default_str();
  kg->add_option("--out", a.out, "output NLSF file");
  auto* kc = kpi->add_subcommand("check", "residual, identity ratios, S and mu of a profile");
  kc->add_option("--in", a.in)->required();

  auto* tw = app.add_subcommand("tw", "travelling waves");
  tw->require_subcommand(1);
  auto* ts = tw->add_subcommand("solve", "solve for one travelling wave");
  model_options(ts, a);
  grid_options(ts, a);
  ts->add_option("--mode", a.mode, "newton1d, fixed-k or pohozaev (default by dimension)");
  ts->add_option("--c", a.c, "speed");
  ts->add_option("--k", a.k, "kinetic level (fixed-k mode)");
  ts->add_option("--tol-residual", a.tol_residual)->capture_default_str();
  ts->add_option("--tol-pohozaev", a.tol_pohozaev)->capture_default_str();
  ts->add_option("--tol-update", a.tol_update)->capture_default_str();
  ts->add_option("--seed", a.seed)->capture_default_str();
  ts->add_option("--out", a.out, "output NLSF file");
  auto* tc = tw->add_subcommand("check", "diagnostics of a stored wave");
  tc->add_option("--in", a.in)->required();

  auto* tr = app.add_subcommand("transonic", "slow-variable analysis");
  tr->require_subcommand(1);
  auto* cmp = tr->add_subcommand("compare", "compare a wave with a KP-I profile");
  std::string twf, kpif;
  cmp->add_option("--tw", twf)->required();
  cmp->add_option("--kpi", kpif)->required();
  cmp->add_option("--out", a.out, "CSV report")->capture_default_str();

  auto* cv = app.add_subcommand("curve", "energy-momentum curves");
  cv->require_subcommand(1);
  auto* jr = cv->add_subcommand("jones-roberts", "sweep of kinetic levels (2D) or speeds c/c_s (3D)");
  bool cold = false;
  model_options(jr, a);
  grid_options(jr, a);
  jr->add_option("--sweep", a.sweep, "v1,v2,... or start:stop:count")->required();
  jr->add_flag("--cold", cold, "solve every point from scratch (parallel up to TWAVES_THREADS)");
  jr->add_option("--tol-residual", a.tol_residual)->capture_default_str();
  jr->add_option("--tol-pohozaev", a.tol_pohozaev)->capture_default_str();
  jr->add_option("--out", a.out, "CSV output")->capture_default_str();

  auto* rp = app.add_subcommand("reproduce", "run a reproduction suite and write report_<suite>.csv");
  std::string suite;
  bool verbose = false;
  rp->add_option("suite", suite, "oned, kpi2d, transonic2d, kpi3d or transonic3d")->required();
  rp->add_flag("-v,--verbose", verbose);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*kg) return kpi_ground(a, cs, gamma, ktol);
    if (*kc) return kpi_check(a.in);
    if (*ts) {
      if (a.mode == "fixed-k" || (a.mode.empty() && a.dim == 2)) a.c.reset();
      return tw_solve(a);
    }
    if (*tc) return tw_check(a.in);
    if (*cmp) return transonic_compare(twf, kpif, a.out);
    if (*jr) {
      if (a.dim == 2) a.k = 1.0;
      else a.c = 1.0;
      return curve(a, cold);
    }
    if (*rp) return reproduce(suite, verbose);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ParseError || e.code() == ErrorCode::ValidationError ? 2 : 1;
  }
  return 0;
}
