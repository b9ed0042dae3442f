#include "mubsearch/cli.hpp"

#include "mubsearch/distance.hpp"
#include "mubsearch/family.hpp"
#include "mubsearch/optimizer.hpp"
#include "mubsearch/serialize.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace mub::cli {
namespace {

using io::Json;

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidUsage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  int dim = 0;
  int bases = 0;
  int runs = 0;
  std::uint64_t seed = 1;
  std::string retraction = "exp";
  double grad_tol = 1e-10;
  int max_iters = 20000;
  double kappa = 1.0;
  bool no_line_search = false;
  bool cg = false;
  int jobs = 0;
  double bin_width = kHistogramBinWidth;
  std::string out;
  std::string format = "json";
  std::string grid;
  double theta_x = 0.0;
  double theta_t = 0.0;
  int points = 100;
  int fame_points = 20;
  int oracle_pairs = 200;
  double perturb = 0.0;
  int max_dim = 6;
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open " + path.string() + " for writing");
  f << content;
  f.flush();
  if (!f) throw IoFailure("write to " + path.string() + " failed");
}

/// out_dir/<stem of out><suffix>
std::filesystem::path companion(const std::string& out, const std::string& suffix) {
  const std::filesystem::path p(out);
  return p.parent_path() / (p.stem().string() + suffix);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void emit(const Options& o, std::ostream& out, const std::string& content) {
  if (o.out.empty()) {
    out << content;
  } else {
    write_file(o.out, content);
  }
}

void require_csv_path(const Options& o) {
  if (o.format == "csv" && o.out.empty()) throw InvalidUsage("--format csv requires --out");
}

OptimizerConfig make_config(const Options& o) {
  OptimizerConfig cfg;
  cfg.retraction = *parse_retraction(o.retraction);
  cfg.grad_tol = o.grad_tol;
  cfg.max_iters = o.max_iters;
  cfg.kappa_init = o.kappa;
  cfg.line_search = !o.no_line_search;
  cfg.use_conjugate_gradient = o.cg;
  cfg.seed = Seed{o.seed};
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw InvalidUsage(e.what());
  }
  return cfg;
}

void check_search_args(const Options& o) {
  if (o.dim < 2) throw InvalidUsage("--dim must be at least 2");
  if (o.bases < 2) throw InvalidUsage("--bases must be at least 2");
  if (o.runs < 1) throw InvalidUsage("--runs must be at least 1");
  if (o.jobs < 0) throw InvalidUsage("--jobs must be non-negative");
  if (!(o.bin_width > 0.0)) throw InvalidUsage("--bin-width must be positive");
}

Json header(const std::string& command) { return Json{{"schema", io::kSchemaVersion}, {"command", command}}; }

std::string histogram_csv(const MultiStartSummary& s) {
  std::ostringstream os;
  os << "center,frequency,fraction\n";
  for (const auto& b : s.maxima_histogram) {
    os << io::format_double(b.center) << ',' << b.frequency << ','
       << io::format_double(static_cast<double>(b.frequency) / s.runs) << '\n';
  }
  return os.str();
}

int cmd_search(const Options& o, std::ostream& out) {
  check_search_args(o);
  require_csv_path(o);
  const OptimizerConfig cfg = make_config(o);
  const MultiStartSummary s = multistart(o.dim, o.bases, o.runs, cfg, {o.jobs, o.bin_width});
  const BasisSet best = polish(s.best().final_set);

  if (o.format == "csv") {
    std::ostringstream runs;
    runs << "run,seed,final_asd,iterations,final_grad_norm,status\n";
    for (std::size_t i = 0; i < s.records.size(); ++i) {
      const RunRecord& r = s.records[i];
      runs << i << ',' << r.seed.value << ',' << io::format_double(r.final_asd) << ',' << r.iterations << ','
           << io::format_double(r.final_grad_norm) << ',' << to_string(r.status) << '\n';
    }
    std::ostringstream bases;
    io::write_basis_set_csv(bases, best);
    write_file(o.out, runs.str());
    write_file(companion(o.out, "_histogram.csv"), histogram_csv(s));
    write_file(companion(o.out, "_bases.csv"), bases.str());
    return kOk;
  }

  Json j = header("search");
  j["dim"] = o.dim;
  j["k"] = o.bases;
  j["config"] = io::config_to_json(cfg);
  j["summary"] = io::summary_to_json(s, o.bin_width);
  Json runs = Json::array();
  for (const auto& r : s.records) runs.push_back(io::run_to_json(r));
  j["records"] = std::move(runs);
  j["best_set"] = io::basis_set_to_json(best);
  j["best_set_asd"] = average_distance_sq(best).asd;
  emit(o, out, dump(j));
  return kOk;
}

int cmd_histogram(const Options& o, std::ostream& out) {
  check_search_args(o);
  const OptimizerConfig cfg = make_config(o);
  const MultiStartSummary s = multistart(o.dim, o.bases, o.runs, cfg, {o.jobs, o.bin_width});
  if (o.format == "csv") {
    emit(o, out, histogram_csv(s));
    return kOk;
  }
  Json j = header("histogram");
  j["dim"] = o.dim;
  j["k"] = o.bases;
  j["config"] = io::config_to_json(cfg);
  j["summary"] = io::summary_to_json(s, o.bin_width);
  emit(o, out, dump(j));
  return kOk;
}

int cmd_family_eval(const Options& o, std::ostream& out) {
  const family::FamilyParams p(o.theta_x, o.theta_t);
  const double asd = family::family_asd(p);
  const double brute = family::family_asd_brute(p);
  const family::FameSolutions fame = family::fame_constraint(p.theta_x());
  const double fres = family::fame_residual(p);
  const BasisSet set = family::family_set(p);
  const DistanceReport rep = average_distance_sq(set);

  if (o.format == "csv") {
    std::ostringstream os;
    os << "theta_x,theta_t,asd,asd_brute,pair_d2_12,fame_residual\n";
    os << io::format_double(p.theta_x()) << ',' << io::format_double(p.theta_t()) << ',' << io::format_double(asd)
       << ',' << io::format_double(brute) << ',' << io::format_double(family::pair_distance_poly(p)) << ','
       << io::format_double(fres) << '\n';
    emit(o, out, os.str());
    return kOk;
  }
  Json j = header("family-eval");
  j["theta_x"] = p.theta_x();
  j["theta_t"] = p.theta_t();
  j["asd"] = asd;
  j["asd_brute"] = brute;
  j["pair_d2_12"] = family::pair_distance_poly(p);
  Json d2 = Json::array();
  for (int a = 0; a < 4; ++a) {
    Json row = Json::array();
    for (int b = 0; b < 4; ++b) row.push_back(rep.pair_d2(a, b));
    d2.push_back(std::move(row));
  }
  j["pair_d2"] = std::move(d2);
  Json had = Json::array();
  for (int i = 1; i <= 3; ++i) had.push_back(is_hadamard(std::sqrt(6.0) * set[i].matrix(), 1e-10));
  j["hadamard"] = std::move(had);
  if (std::isfinite(fres)) {
    j["fame_residual"] = fres;
  } else {
    j["fame_residual"] = nullptr;
  }
  j["fame_theta_t"] = fame.theta_t;
  emit(o, out, dump(j));
  return kOk;
}

int cmd_family_optimum(const Options& o, std::ostream& out) {
  const family::OptimumResult r = family::optimal_params();
  if (o.format == "csv") {
    std::ostringstream os;
    os << "theta_x,theta_t,asd\n";
    for (const auto& p : r.theta_pairs) {
      os << io::format_double(p.theta_x()) << ',' << io::format_double(p.theta_t()) << ','
         << io::format_double(family::family_asd(p)) << '\n';
    }
    emit(o, out, os.str());
    return kOk;
  }
  Json j = header("family-optimum");
  j["r"] = r.r_const;
  j["p_sq"] = r.p_sq_opt;
  j["q"] = r.q_opt;
  j["d2_pair_max"] = r.d2_pair_max;
  j["asd_max"] = r.asd_max;
  j["cubic_residual"] = r.cubic_residual;
  Json optima = Json::array();
  for (const auto& p : r.theta_pairs) {
    optima.push_back(Json{{"theta_x", p.theta_x()}, {"theta_t", p.theta_t()}, {"asd", family::family_asd(p)}});
  }
  j["optima"] = std::move(optima);
  emit(o, out, dump(j));
  return kOk;
}

std::pair<int, int> parse_grid(const std::string& s) {
  int nx = 0;
  int nt = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%dx%d%c", &nx, &nt, &tail) != 2) {
    throw InvalidUsage("--grid must look like NxM, got '" + s + "'");
  }
  if (nx < 2 || nt < 2) throw InvalidUsage("--grid dimensions must be at least 2");
  return {nx, nt};
}

std::string points_csv(const std::vector<family::GridPoint>& pts) {
  std::ostringstream os;
  os << "theta_x,theta_t,asd\n";
  for (const auto& g : pts) {
    os << io::format_double(g.theta_x) << ',' << io::format_double(g.theta_t) << ',' << io::format_double(g.asd)
       << '\n';
  }
  return os.str();
}

Json point_json(const family::GridPoint& g) {
  return Json{{"theta_x", g.theta_x}, {"theta_t", g.theta_t}, {"asd", g.asd}};
}

int cmd_contour(const Options& o, std::ostream& out) {
  const auto [nx, nt] = parse_grid(o.grid);
  require_csv_path(o);
  const family::ContourGrid g = family::contour_grid({}, {}, nx, nt);
  if (o.format == "csv") {
    write_file(o.out, points_csv(g.points));
    write_file(companion(o.out, "_fame.csv"), points_csv(g.fame_points));
    return kOk;
  }
  Json j = header("contour");
  j["nx"] = nx;
  j["nt"] = nt;
  Json pts = Json::array();
  for (const auto& p : g.points) pts.push_back(point_json(p));
  j["points"] = std::move(pts);
  Json fame = Json::array();
  for (const auto& p : g.fame_points) fame.push_back(point_json(p));
  j["fame_points"] = std::move(fame);
  j["grid_max"] = point_json(g.grid_max);
  Json refined = Json::array();
  for (const auto& p : g.refined_maxima) refined.push_back(point_json(p));
  j["refined_maxima"] = std::move(refined);
  j["fame_max"] = point_json(g.fame_max);
  emit(o, out, dump(j));
  return kOk;
}

struct Aggregate {
  double worst = 0.0;
  double threshold = 0.0;
  int checked = 0;
  bool informational = false;
};

void absorb(std::map<std::string, Aggregate>& table, std::vector<std::string>& order, const family::Residual& r) {
  auto [it, inserted] = table.try_emplace(r.name);
  if (inserted) order.push_back(r.name);
  Aggregate& a = it->second;
  a.threshold = r.threshold;
  a.informational = r.informational;
  if (!r.applies) return;
  ++a.checked;
  a.worst = std::max(a.worst, std::isfinite(r.value) ? r.value : HUGE_VAL);
}

int cmd_verify(const Options& o, std::ostream& out, bool single_point) {
  if (o.points < 0 || o.fame_points < 0 || o.oracle_pairs < 0) throw InvalidUsage("counts must be non-negative");
  Rng rng = make_rng(Seed{o.seed});
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);

  std::map<std::string, Aggregate> table;
  std::vector<std::string> order;
  int evaluated = 0;
  auto run_point = [&](const family::FamilyParams& p) {
    for (const auto& r : family::verify_identities(p, o.perturb).residuals) absorb(table, order, r);
    ++evaluated;
  };

  const family::OptimumResult opt = family::optimal_params();
  if (single_point) {
    run_point(family::FamilyParams(o.theta_x, o.theta_t));
  } else {
    for (int i = 0; i < o.points; ++i) {
      const double tx = angle(rng);
      run_point(family::FamilyParams(tx, angle(rng)));
    }
    int found = 0;
    while (found < o.fame_points) {
      const double tx = angle(rng);
      const family::FameSolutions sol = family::fame_constraint(tx);
      if (sol.theta_t.empty()) continue;
      const std::size_t pick = sol.theta_t.size() == 1 ? 0 : static_cast<std::size_t>(rng() & 1u);
      run_point(family::FamilyParams(tx, sol.theta_t[pick]));
      ++found;
    }
  }
  for (const auto& p : opt.theta_pairs) run_point(p);

  family::Residual oracle{"hs_oracle_vs_distance", 0.0, 1e-10};
  family::Residual spectrum{"rho_spectrum", 0.0, 1e-9};
  for (int i = 0; i < o.oracle_pairs; ++i) {
    const int d = 2 + static_cast<int>(rng() % 5);
    const Basis a = random_basis(d, rng);
    const Basis b = random_basis(d, rng);
    const double h = hs_distance_oracle(a, b);
    oracle.value = std::max(oracle.value, std::abs(h * h - pair_distance_sq(a, b)));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(two_qudit_state(a).matrix, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();
    for (int j = 0; j < ev.size(); ++j) {
      const double expected = j < d * d - d ? 0.0 : 1.0 / d;
      spectrum.value = std::max(spectrum.value, std::abs(ev(j) - expected));
    }
  }
  if (o.oracle_pairs > 0) {
    absorb(table, order, oracle);
    absorb(table, order, spectrum);
    table.at(oracle.name).checked = o.oracle_pairs;
    table.at(spectrum.name).checked = o.oracle_pairs;
  }

  const double optimum_asd = family::family_asd(opt.theta_pairs.front());
  family::Residual closed_form{"optimum_vs_closed_form", std::abs(optimum_asd - opt.asd_max), 1e-12};
  absorb(table, order, closed_form);
  family::Residual cubic{"optimum_cubic", std::abs(opt.cubic_residual), 1e-10};
  absorb(table, order, cubic);

  bool ok = true;
  std::ostringstream os;
  os << std::left << std::setw(28) << "identity" << std::right << std::setw(8) << "checked" << std::setw(14)
     << "max_residual" << std::setw(12) << "threshold"
     << "  result\n";
  Json rows = Json::array();
  for (const auto& name : order) {
    const Aggregate& a = table.at(name);
    const bool pass = a.informational || a.worst <= a.threshold;
    const char* verdict = a.checked == 0 ? "SKIP" : a.informational ? "INFO" : pass ? "PASS" : "FAIL";
    if (a.checked > 0 && !pass) ok = false;
    char worst[32];
    char thr[32];
    std::snprintf(worst, sizeof worst, "%.3e", a.worst);
    std::snprintf(thr, sizeof thr, "%.0e", a.threshold);
    os << std::left << std::setw(28) << name << std::right << std::setw(8) << a.checked << std::setw(14) << worst
       << std::setw(12) << thr << "  " << verdict << '\n';
    rows.push_back(Json{{"name", name},
                        {"checked", a.checked},
                        {"max_residual", a.worst},
                        {"threshold", a.threshold},
                        {"result", verdict}});
  }
  char asd_line[64];
  std::snprintf(asd_line, sizeof asd_line, "asd = %.4f (%.12f)", optimum_asd, optimum_asd);
  os << "parameter points: " << evaluated << '\n';
  os << "optimum (" << std::fixed << std::setprecision(5) << opt.theta_pairs.front().theta_x() << ", "
     << opt.theta_pairs.front().theta_t() << "): " << asd_line << '\n';
  os << (ok ? "all identities hold\n" : "identity check FAILED\n");
  out << os.str();

  if (!o.out.empty()) {
    Json j = header("verify");
    j["points"] = evaluated;
    j["perturbation"] = o.perturb;
    j["optimum_asd"] = optimum_asd;
    j["residuals"] = std::move(rows);
    j["passed"] = ok;
    write_file(o.out, dump(j));
  }
  return ok ? kOk : kVerifyFailed;
}

std::vector<std::pair<int, int>> table1_cells(int max_dim) {
  std::vector<std::pair<int, int>> cells;
  for (int d = 2; d <= max_dim; ++d) {
    cells.emplace_back(d, 4);
    if (d + 1 != 4) cells.emplace_back(d, d + 1);
  }
  return cells;
}

int cmd_table1(const Options& o, std::ostream& out) {
  if (o.runs < 1) throw InvalidUsage("--runs must be at least 1");
  if (o.max_dim < 2) throw InvalidUsage("--max-dim must be at least 2");
  if (o.jobs < 0) throw InvalidUsage("--jobs must be non-negative");
  const OptimizerConfig base = make_config(o);

  Json cells = Json::array();
  std::ostringstream csv;
  csv << "d,k,runs,best_asd,success_rate\n";
  std::ostringstream text;
  text << "   d   k  runs        best_asd  success   cpu_s\n";
  for (const auto& [d, k] : table1_cells(o.max_dim)) {
    OptimizerConfig cfg = base;
    cfg.seed = derive_seed(base.seed, static_cast<std::uint64_t>(100 * d + k));
    const std::clock_t c0 = std::clock();
    const MultiStartSummary s = multistart(d, k, o.runs, cfg, {o.jobs, kHistogramBinWidth});
    const double cpu = static_cast<double>(std::clock() - c0) / CLOCKS_PER_SEC;
    const double best = s.best().final_asd;
    cells.push_back(Json{{"d", d}, {"k", k}, {"runs", o.runs}, {"best_asd", best}, {"success_rate", s.success_rate}});
    csv << d << ',' << k << ',' << o.runs << ',' << io::format_double(best) << ','
        << io::format_double(s.success_rate) << '\n';
    char line[128];
    std::snprintf(line, sizeof line, "%4d%4d%6d%16.10f%8.1f%%%8.2f\n", d, k, o.runs, best, 100.0 * s.success_rate,
                  cpu);
    text << line;
  }
  out << text.str();
  if (!o.out.empty()) {
    if (o.format == "csv") {
      write_file(o.out, csv.str());
    } else {
      Json j = header("table1");
      j["config"] = io::config_to_json(base);
      j["cells"] = std::move(cells);
      write_file(o.out, dump(j));
    }
  }
  return kOk;
}

void add_optimizer_flags(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--retraction", o.retraction, "Unitary update")
      ->check(CLI::IsMember({"exp", "cayley", "series"}));
  sub->add_option("--grad-tol", o.grad_tol, "Stop when the gradient norm drops below this");
  sub->add_option("--max-iters", o.max_iters, "Iteration budget per run");
  sub->add_option("--kappa", o.kappa, "Initial step length");
  sub->add_flag("--no-line-search", o.no_line_search, "Backtracking instead of golden-section search");
  sub->add_flag("--cg", o.cg, "Polak-Ribiere conjugate directions");
  sub->add_option("--jobs", o.jobs, "Worker threads (0: all cores)");
}

void add_output_flags(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "Output file (stdout if omitted)");
  sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Search for maximally distant orthonormal bases and evaluate the d=6 Hadamard family",
               "mubsearch"};
  app.require_subcommand(1);

  auto* search = app.add_subcommand("search", "Multistart ascent; writes the summary and the polished best set");
  search->add_option("--dim", o.dim, "Dimension d")->required();
  search->add_option("--bases", o.bases, "Number of bases k")->required();
  search->add_option("--runs", o.runs, "Random starts")->default_val(100);
  search->add_option("--bin-width", o.bin_width, "Histogram bin width");
  add_optimizer_flags(search, o);
  add_output_flags(search, o);

  auto* hist = app.add_subcommand("histogram", "Histogram of local maxima reached from random starts");
  hist->add_option("--dim", o.dim, "Dimension d")->default_val(6);
  hist->add_option("--bases", o.bases, "Number of bases k")->default_val(4);
  hist->add_option("--runs", o.runs, "Random starts")->default_val(500);
  hist->add_option("--bin-width", o.bin_width, "Histogram bin width");
  add_optimizer_flags(hist, o);
  add_output_flags(hist, o);

  auto* eval = app.add_subcommand("family-eval", "Evaluate the family at one parameter point");
  eval->add_option("--theta-x", o.theta_x, "Angle of x")->required();
  eval->add_option("--theta-t", o.theta_t, "Angle of t")->required();
  add_output_flags(eval, o);

  auto* optimum = app.add_subcommand("family-optimum", "Closed-form maximum of the family");
  add_output_flags(optimum, o);

  auto* contour = app.add_subcommand("contour", "ASD of the family on a grid over both angles");
  contour->add_option("--grid", o.grid, "Grid size NxM (theta_x by theta_t)")->required();
  add_output_flags(contour, o);

  auto* verify = app.add_subcommand("verify", "Check every family identity and the distance oracle");
  auto* vx = verify->add_option("--theta-x", o.theta_x, "Check a single point instead of random ones");
  auto* vt = verify->add_option("--theta-t", o.theta_t, "Check a single point instead of random ones");
  vx->needs(vt);
  vt->needs(vx);
  verify->add_option("--points", o.points, "Random parameter points");
  verify->add_option("--fame-points", o.fame_points, "Points on the constraint curve");
  verify->add_option("--oracle-pairs", o.oracle_pairs, "Random basis pairs for the distance oracle");
  verify->add_option("--seed", o.seed, "Seed for the sampled points");
  verify->add_option("--perturb", o.perturb, "Rotate M1 by this angle before checking (negative control)");
  verify->add_option("--out", o.out, "Optional JSON report");

  auto* table1 = app.add_subcommand("table1", "Best ASD and success rate for d = 2..max-dim, k in {4, d+1}");
  table1->add_option("--runs", o.runs, "Random starts per cell")->default_val(50);
  table1->add_option("--max-dim", o.max_dim, "Largest dimension");
  add_optimizer_flags(table1, o);
  add_output_flags(table1, o);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInvalidUsage;
  }

  try {
    if (search->parsed()) return cmd_search(o, out);
    if (hist->parsed()) return cmd_histogram(o, out);
    if (eval->parsed()) return cmd_family_eval(o, out);
    if (optimum->parsed()) return cmd_family_optimum(o, out);
    if (contour->parsed()) return cmd_contour(o, out);
    if (verify->parsed()) return cmd_verify(o, out, vx->count() > 0);
    if (table1->parsed()) return cmd_table1(o, out);
  } catch (const InvalidUsage& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInvalidUsage;
  } catch (const IoFailure& e) {
    err << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInvalidUsage;
  }
  err << app.help();
  return kInvalidUsage;
}

}  // namespace mub::cli
