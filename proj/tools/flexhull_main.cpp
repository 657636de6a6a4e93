#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "flexhull/json_io.hpp"

namespace fs = std::filesystem;
using namespace flexhull;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 verification failed, 2 infeasible,
// 3 solver/numerical failure, 4 size budget refused, 64 usage,
// 65 schema/data error.
constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitSolverFailure = 3;
constexpr int kExitBudget = 4;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

FeederModel load_model(const std::string& path, std::optional<double> delta_override) {
  FeederModel model = build_feeder(path);
  if (delta_override) {
    if (*delta_override < 0.0) throw SchemaError("--delta must be >= 0");
    model.uncertainty.delta = *delta_override;
  }
  return model;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

json solver_diag(const PolicySolution& sol) {
  return json{{"backend", "clarabel"},
              {"status", conic::to_string(sol.status)},
              {"iterations", sol.iterations},
              {"solve_seconds", sol.solve_seconds},
              {"message", sol.message}};
}

std::string human_report(const std::string& model_path, const std::string& model_sha,
                         const PolicySolution& sol, const ReducedSystem& red,
                         const NullspaceBasis& basis) {
  std::ostringstream os;
  os << "flexhull solve report\n";
  os << "  model: " << model_path << " (sha256 " << model_sha.substr(0, 16) << "...)\n";
  os << "  policy: " << to_string(sol.kind) << "\n";
  os << "  status: " << conic::to_string(sol.status) << "\n";
  os << "  dimensions: T=" << sol.T << " Nu=" << sol.Nu << " m=" << red.m
     << " ny=" << sol.ny << "\n";
  if (!sol.optimal()) {
    if (!sol.message.empty()) os << "  solver message: " << sol.message << "\n";
    if (sol.status == conic::SolveStatus::kInfeasible) {
      os << "  note: flexibility region is empty or the uncertainty level is too large\n";
    }
    return os.str();
  }
  const VolumeReport vr = volume(sol);
  if (sol.kind == PolicyKind::kBox) {
    os << "  log-volume sum log(u-l) = " << fmt(sol.box.logvol) << "\n";
    os << "  volume (Lebesgue, = product of side lengths) = " << fmt(vr.lebesgue) << "\n";
  } else {
    os << "  logdet(E) = " << fmt(sol.ellipsoid.logdet) << "\n";
    os << "  det(E) (shape-determinant convention) = " << fmt(vr.det_measure) << "\n";
    os << "  volume (Lebesgue convention, det(E) * unit-ball volume) = "
       << fmt(vr.lebesgue) << "\n";
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sol.ellipsoid.E);
    const double emin = es.eigenvalues().minCoeff();
    const double emax = es.eigenvalues().maxCoeff();
    if (emax > 0.0 && emin < 1e-6 * emax) {
      os << "  WARNING: ellipsoid is nearly degenerate (min/max eigenvalue = "
         << fmt(emin / emax) << ")\n";
    }
  }
  if (sol.kind == PolicyKind::kQuadratic) {
    os << "  S-lemma tightness factor (metadata): 9.19*sqrt(ln(T+1)) = "
       << fmt(tightness_factor(sol.T)) << "\n";
  }
  os << "  solve time: " << fmt(sol.solve_seconds) << " s, iterations: "
     << sol.iterations << "\n";
  for (const auto& w : basis.warnings) os << "  WARNING: " << w << "\n";
  return os.str();
}

int cmd_solve(const std::string& model_path, const std::string& policy,
              std::optional<double> delta, const std::string& out_dir,
              double time_limit, double feas_tol, std::uint64_t seed,
              const std::vector<std::string>& argv) {
  Timer wall;
  const FeederModel model = load_model(model_path, delta);
  const ConstraintSystem sys = assemble(model);
  const NullspaceBasis basis = decompose(sys);
  const ReducedSystem red = reduce(sys, basis);

  conic::SolverSettings settings;
  settings.time_limit_s = time_limit;
  settings.feas_tol = feas_tol;
  settings.gap_tol = feas_tol;
  settings.verbose = std::getenv("FLEXHULL_SOLVER_LOG") != nullptr;

  PolicySolution sol;
  if (policy == "affine") {
    sol = solve_affine(red, settings);
  } else if (policy == "quadratic") {
    sol = solve_quadratic(red, settings);  // SizeBudgetError handled by caller
  } else {
    sol = solve_box(red, settings);
  }

  fs::create_directories(out_dir);
  const std::string model_sha = sha256_file(model_path);
  const std::string sol_path = (fs::path(out_dir) / "solution.json").string();
  const std::string report_path = (fs::path(out_dir) / "report.txt").string();
  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();

  save_solution(sol_path, sol, model_sha);
  if (delta) {  // record the override so verify can rebuild the same system
    json sj = json::parse(read_text_file(sol_path));
    sj["delta_override"] = *delta;
    write_text_file(sol_path, sj.dump(2) + "\n");
  }
  const std::string report = human_report(model_path, model_sha, sol, red, basis);
  write_text_file(report_path, report);
  std::cout << report;

  RunManifest mf;
  mf.command = "solve";
  mf.argv = argv;
  mf.input_path = model_path;
  mf.input_sha256 = model_sha;
  mf.seed = seed;
  mf.settings = {{"policy", policy},
                 {"delta_override", delta ? json(*delta) : json(nullptr)},
                 {"time_limit", time_limit},
                 {"feas_tol", feas_tol}};
  mf.solver = solver_diag(sol);
  mf.outputs = {{sol_path, sha256_file(sol_path)}, {report_path, sha256_file(report_path)}};
  mf.wall_seconds = wall.seconds();
  save_manifest(manifest_path, mf);

  switch (sol.status) {
    case conic::SolveStatus::kOptimal: return kExitOk;
    case conic::SolveStatus::kInfeasible: return kExitInfeasible;
    default: return kExitSolverFailure;
  }
}

int cmd_verify(const std::string& solution_path, const std::string& model_path,
               int samples, std::uint64_t seed, const std::string& oracle,
               bool no_hash_check, const std::string& out_dir,
               const std::vector<std::string>& argv) {
  if (samples < 1) {
    std::cerr << "error: --samples must be >= 1\n";
    return kExitUsage;
  }
  Timer wall;
  std::string bound_sha;
  const PolicySolution sol = load_solution(solution_path, &bound_sha);
  if (!sol.optimal()) {
    std::cerr << "error: solution file records status '" << conic::to_string(sol.status)
              << "'; nothing to verify\n";
    return kExitData;
  }
  const std::string model_sha = sha256_file(model_path);
  if (!no_hash_check && !bound_sha.empty() && bound_sha != model_sha) {
    std::cerr << "error: model file hash mismatch: solution was produced from sha256 "
              << bound_sha.substr(0, 16) << "..., got " << model_sha.substr(0, 16)
              << "... (pass --no-hash-check to override)\n";
    return kExitData;
  }
  // Re-apply any delta override recorded at solve time.
  std::optional<double> delta;
  {
    const json sj = json::parse(read_text_file(solution_path));
    if (sj.contains("delta_override")) delta = sj["delta_override"].get<double>();
  }
  const FeederModel model = load_model(model_path, delta);
  const ConstraintSystem sys = assemble(model);
  const NullspaceBasis basis = decompose(sys);
  const ReducedSystem red = reduce(sys, basis);

  const bool lp = oracle != "policy";
  const ContainmentReport report = check_containment(sol, sys, red, samples, seed, lp);

  fs::create_directories(out_dir);
  const std::string report_path = (fs::path(out_dir) / "containment.json").string();
  write_text_file(report_path, to_json(report).dump(2) + "\n");

  RunManifest mf;
  mf.command = "verify";
  mf.argv = argv;
  mf.input_path = model_path;
  mf.input_sha256 = model_sha;
  mf.seed = seed;
  mf.settings = {{"samples", samples}, {"oracle", lp ? "lp" : "policy"}};
  mf.solver = {{"backend", "clarabel"}};
  mf.outputs = {{report_path, sha256_file(report_path)}};
  mf.wall_seconds = wall.seconds();
  save_manifest((fs::path(out_dir) / "manifest.json").string(), mf);

  std::cout << "containment: samples=" << report.samples
            << " max_violation=" << fmt(report.max_violation)
            << " failures=" << report.failures.size()
            << " oracle=" << (lp ? "lp" : "policy") << "\n";
  return report.passed() ? kExitOk : kExitVerifyFailed;
}

int cmd_project(const std::string& solution_path, const std::string& dims,
                const std::string& out_csv, const std::string& out_dir,
                const std::vector<std::string>& argv) {
  Timer wall;
  int di = 0, dj = 1;
  {
    const auto comma = dims.find(',');
    if (comma == std::string::npos) {
      std::cerr << "error: --dims expects i,j\n";
      return kExitUsage;
    }
    try {
      di = std::stoi(dims.substr(0, comma));
      dj = std::stoi(dims.substr(comma + 1));
    } catch (const std::exception&) {
      std::cerr << "error: --dims expects integer pair i,j\n";
      return kExitUsage;
    }
  }
  const PolicySolution sol = load_solution(solution_path, nullptr);
  if (!sol.optimal()) {
    std::cerr << "error: solution is not optimal; nothing to project\n";
    return kExitData;
  }
  if (!(0 <= di && di < dj && dj < sol.T)) {
    std::cerr << "error: --dims out of range: need 0 <= i < j < T=" << sol.T << "\n";
    return kExitUsage;
  }

  fs::create_directories(out_dir);
  const std::string csv_path =
      out_csv.empty() ? (fs::path(out_dir) / "projection.csv").string() : out_csv;
  const std::string json_path = (fs::path(out_dir) / "projection.json").string();

  std::ostringstream csv;
  csv.precision(12);
  csv << "x,y\n";
  json jout;
  if (sol.kind == PolicyKind::kBox) {
    const double lx = sol.box.l[di], ux = sol.box.u[di];
    const double ly = sol.box.l[dj], uy = sol.box.u[dj];
    const double corners[5][2] = {
        {lx, ly}, {ux, ly}, {ux, uy}, {lx, uy}, {lx, ly}};
    for (const auto& c : corners) csv << c[0] << "," << c[1] << "\n";
    jout = {{"kind", "box"},
            {"dims", {di, dj}},
            {"corners", {{lx, ly}, {ux, ly}, {ux, uy}, {lx, uy}}},
            {"area", (ux - lx) * (uy - ly)}};
  } else {
    const Ellipse2D ell = project_ellipse(sol.ellipsoid, di, dj);
    for (const auto& p : ell.boundary(256)) csv << p.x() << "," << p.y() << "\n";
    jout = to_json(ell);
    jout["kind"] = "ellipse";
    jout["dims"] = {di, dj};
  }
  write_text_file(csv_path, csv.str());
  write_text_file(json_path, jout.dump(2) + "\n");

  RunManifest mf;
  mf.command = "project";
  mf.argv = argv;
  mf.input_path = solution_path;
  mf.input_sha256 = sha256_file(solution_path);
  mf.settings = {{"dims", {di, dj}}};
  mf.outputs = {{csv_path, sha256_file(csv_path)}, {json_path, sha256_file(json_path)}};
  mf.wall_seconds = wall.seconds();
  save_manifest((fs::path(out_dir) / "manifest.json").string(), mf);

  std::cout << "projection written: " << csv_path << " area=" << fmt(jout["area"].get<double>())
            << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& model_path, std::vector<double> deltas,
              const std::string& policy, const std::string& out_dir, double time_limit,
              std::uint64_t seed, const std::vector<std::string>& argv) {
  if (deltas.empty()) {
    std::cerr << "error: --deltas must list at least one value\n";
    return kExitUsage;
  }
  for (size_t i = 0; i < deltas.size(); ++i) {
    if (deltas[i] < 0.0 || (i > 0 && deltas[i] <= deltas[i - 1])) {
      std::cerr << "error: --deltas must be nonnegative and strictly ascending\n";
      return kExitUsage;
    }
  }
  Timer wall;
  conic::SolverSettings settings;
  settings.time_limit_s = time_limit;
  settings.verbose = std::getenv("FLEXHULL_SOLVER_LOG") != nullptr;

  std::ostringstream csv;
  csv.precision(12);
  csv << "delta,status,logdet,det_measure,lebesgue_volume,solve_seconds\n";
  double prev_log = std::numeric_limits<double>::infinity();
  int n_ok = 0;
  std::vector<std::string> warnings;
  for (const double dl : deltas) {
    FeederModel model = load_model(model_path, dl);
    const ConstraintSystem sys = assemble(model);
    const NullspaceBasis basis = decompose(sys);
    const ReducedSystem red = reduce(sys, basis);
    PolicySolution sol;
    if (policy == "quadratic") {
      sol = solve_quadratic(red, settings);
    } else if (policy == "box") {
      sol = solve_box(red, settings);
    } else {
      sol = solve_affine(red, settings);
    }
    if (sol.optimal()) {
      ++n_ok;
      const VolumeReport vr = volume(sol);
      csv << dl << "," << conic::to_string(sol.status) << "," << vr.log_measure << ","
          << vr.det_measure << "," << vr.lebesgue << "," << sol.solve_seconds << "\n";
      if (vr.log_measure > prev_log + 1e-6) {
        warnings.push_back("volume increased at delta=" + fmt(dl) +
                           " (solver noise beyond 1e-6): " + fmt(prev_log) + " -> " +
                           fmt(vr.log_measure));
      }
      prev_log = vr.log_measure;
    } else {
      csv << dl << "," << conic::to_string(sol.status) << ",,,," << sol.solve_seconds
          << "\n";
    }
  }

  fs::create_directories(out_dir);
  const std::string csv_path = (fs::path(out_dir) / "sweep.csv").string();
  write_text_file(csv_path, csv.str());
  std::cout << csv.str();
  for (const auto& w : warnings) std::cout << "WARNING: " << w << "\n";

  RunManifest mf;
  mf.command = "sweep";
  mf.argv = argv;
  mf.input_path = model_path;
  mf.input_sha256 = sha256_file(model_path);
  mf.seed = seed;
  mf.settings = {{"policy", policy}, {"deltas", deltas}, {"time_limit", time_limit}};
  mf.solver = {{"backend", "clarabel"}, {"warnings", warnings}};
  mf.outputs = {{csv_path, sha256_file(csv_path)}};
  mf.wall_seconds = wall.seconds();
  save_manifest((fs::path(out_dir) / "manifest.json").string(), mf);

  return n_ok > 0 ? kExitOk : kExitSolverFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flexhull: ellipsoidal inner approximations of aggregate DER flexibility"};
  app.require_subcommand(1);
  std::vector<std::string> raw_args(argv, argv + argc);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Compute an inner approximation");
  std::string model_path, policy = "affine", out_dir = ".";
  double time_limit = 300.0, feas_tol = 1e-7;
  std::uint64_t seed = 0;
  double delta_val = 0.0;
  bool has_delta = false;
  solve_cmd->add_option("model", model_path, "model JSON file")->required();
  solve_cmd->add_option("--policy", policy, "affine|quadratic|box")
      ->check(CLI::IsMember({"affine", "quadratic", "box"}));
  solve_cmd->add_option("--delta", delta_val, "override uncertainty level")
      ->each([&](const std::string&) { has_delta = true; });
  solve_cmd->add_option("--out", out_dir, "output directory");
  solve_cmd->add_option("--time-limit", time_limit, "solver time limit (s)");
  solve_cmd->add_option("--feas-tol", feas_tol, "solver feasibility/gap tolerance");
  solve_cmd->add_option("--seed", seed, "seed recorded in the manifest");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Monte-Carlo containment check");
  std::string sol_path, vmodel_path, oracle = "lp", vout_dir = ".";
  int samples = 1000;
  std::uint64_t vseed = 0;
  bool no_hash_check = false;
  verify_cmd->add_option("solution", sol_path, "solution JSON file")->required();
  verify_cmd->add_option("model", vmodel_path, "model JSON file")->required();
  verify_cmd->add_option("--samples", samples, "number of samples");
  verify_cmd->add_option("--seed", vseed, "sampling seed");
  verify_cmd->add_option("--oracle", oracle, "lp|policy")
      ->check(CLI::IsMember({"lp", "policy"}));
  verify_cmd->add_flag("--no-hash-check", no_hash_check, "skip model hash binding check");
  verify_cmd->add_option("--out", vout_dir, "output directory");

  // project
  auto* project_cmd = app.add_subcommand("project", "2-D projection of a solution");
  std::string psol_path, dims = "0,1", out_csv, pout_dir = ".";
  project_cmd->add_option("solution", psol_path, "solution JSON file")->required();
  project_cmd->add_option("--dims", dims, "coordinate pair i,j");
  project_cmd->add_option("--out", pout_dir, "output directory");
  project_cmd->add_option("--out-csv", out_csv, "override path for the CSV alone");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Solve across uncertainty levels");
  std::string smodel_path, spolicy = "affine", sout_dir = ".";
  std::vector<double> deltas;
  double stime_limit = 300.0;
  std::uint64_t sseed = 0;
  sweep_cmd->add_option("model", smodel_path, "model JSON file")->required();
  sweep_cmd->add_option("--deltas", deltas, "ascending uncertainty levels")
      ->delimiter(',');
  sweep_cmd->add_option("--policy", spolicy, "affine|quadratic|box")
      ->check(CLI::IsMember({"affine", "quadratic", "box"}));
  sweep_cmd->add_option("--out", sout_dir, "output directory");
  sweep_cmd->add_option("--time-limit", stime_limit, "per-solve time limit (s)");
  sweep_cmd->add_option("--seed", sseed, "seed recorded in the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve_cmd->parsed()) {
      return cmd_solve(model_path, policy,
                       has_delta ? std::optional<double>(delta_val) : std::nullopt,
                       out_dir, time_limit, feas_tol, seed, raw_args);
    }
    if (verify_cmd->parsed()) {
      return cmd_verify(sol_path, vmodel_path, samples, vseed, oracle, no_hash_check,
                        vout_dir, raw_args);
    }
    if (project_cmd->parsed()) {
      return cmd_project(psol_path, dims, out_csv, pout_dir, raw_args);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(smodel_path, deltas, spolicy, sout_dir, stime_limit, sseed,
                       raw_args);
    }
  } catch (const SizeBudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  }
  return kExitUsage;
}
