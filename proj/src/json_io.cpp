#include "flexhull/json_io.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

namespace flexhull {

using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("sha256: digest failure");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << content;
}

std::string sha256_file(const std::string& path) {
  return sha256_hex(read_text_file(path));
}

json to_json(const MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = data;
  return j;
}

json to_json(const VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

MatrixXd mat_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto& data = j.at("data");
  if (static_cast<int>(data.size()) != rows * cols) {
    throw SchemaError("matrix: data length mismatch");
  }
  MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = data[r * cols + c].get<double>();
  }
  return m;
}

VectorXd vec_from_json(const json& j) {
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

namespace {

PolicyKind kind_from_string(const std::string& s) {
  if (s == "affine") return PolicyKind::kAffine;
  if (s == "quadratic") return PolicyKind::kQuadratic;
  if (s == "box") return PolicyKind::kBox;
  throw SchemaError("solution file: unknown policy '" + s + "'");
}

conic::SolveStatus status_from_string(const std::string& s) {
  using conic::SolveStatus;
  if (s == "optimal") return SolveStatus::kOptimal;
  if (s == "infeasible") return SolveStatus::kInfeasible;
  if (s == "unbounded") return SolveStatus::kUnbounded;
  if (s == "time_limit") return SolveStatus::kTimeLimit;
  return SolveStatus::kNumericalFailure;
}

}  // namespace

void save_solution(const std::string& path, const PolicySolution& sol,
                   const std::string& model_sha256) {
  json j;
  j["schema"] = "flexhull/solution/1";
  j["policy"] = to_string(sol.kind);
  j["status"] = conic::to_string(sol.status);
  j["T"] = sol.T;
  j["Nu"] = sol.Nu;
  j["ny"] = sol.ny;
  j["solve_seconds"] = sol.solve_seconds;
  j["iterations"] = sol.iterations;
  if (!sol.message.empty()) j["message"] = sol.message;
  j["model_sha256"] = model_sha256;

  if (sol.optimal()) {
    if (sol.kind == PolicyKind::kBox) {
      j["box"] = {{"l", to_json(sol.box.l)},
                  {"u", to_json(sol.box.u)},
                  {"logvol", sol.box.logvol}};
    } else {
      j["ellipsoid"] = {{"E", to_json(sol.ellipsoid.E)},
                        {"e", to_json(sol.ellipsoid.e)},
                        {"logdet", sol.ellipsoid.logdet}};
    }
    if (sol.kind == PolicyKind::kQuadratic) {
      json qs = json::array();
      for (const auto& q : sol.quadratic.Q) qs.push_back(to_json(q));
      j["coefficients"] = {{"Q", qs},
                           {"L", to_json(sol.quadratic.L)},
                           {"c", to_json(sol.quadratic.c)},
                           {"lambda", to_json(sol.quadratic.lambda)},
                           {"zeta_dropped", sol.quadratic.zeta_dropped}};
      j["tightness_factor"] = tightness_factor(sol.T);
    } else {
      json ls = json::array();
      for (const auto& l : sol.affine.L) ls.push_back(to_json(l));
      j["coefficients"] = {{"K", to_json(sol.affine.K)},
                           {"L", ls},
                           {"gamma", to_json(sol.affine.gamma)},
                           {"alpha", to_json(sol.affine.alpha)}};
    }
    const VolumeReport vr = volume(sol);
    j["volume"] = {{"log_measure", vr.log_measure},
                   {"det_measure", vr.det_measure},
                   {"lebesgue", vr.lebesgue},
                   {"convention", vr.convention}};
  }
  write_text_file(path, j.dump(2) + "\n");
}

PolicySolution load_solution(const std::string& path, std::string* model_sha256_out) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError("solution file: invalid JSON: " + std::string(e.what()));
  }
  if (!j.contains("schema") || j["schema"] != "flexhull/solution/1") {
    throw SchemaError("solution file: expected schema \"flexhull/solution/1\"");
  }
  PolicySolution sol;
  sol.kind = kind_from_string(j.at("policy").get<std::string>());
  sol.status = status_from_string(j.at("status").get<std::string>());
  sol.T = j.at("T").get<int>();
  sol.Nu = j.at("Nu").get<int>();
  sol.ny = j.at("ny").get<int>();
  sol.solve_seconds = j.value("solve_seconds", 0.0);
  sol.iterations = j.value("iterations", 0);
  sol.message = j.value("message", std::string());
  if (model_sha256_out) *model_sha256_out = j.value("model_sha256", std::string());
  if (!sol.optimal()) return sol;

  if (sol.kind == PolicyKind::kBox) {
    sol.box.l = vec_from_json(j.at("box").at("l"));
    sol.box.u = vec_from_json(j.at("box").at("u"));
    sol.box.logvol = j.at("box").at("logvol").get<double>();
  } else {
    sol.ellipsoid.E = mat_from_json(j.at("ellipsoid").at("E"));
    sol.ellipsoid.e = vec_from_json(j.at("ellipsoid").at("e"));
    sol.ellipsoid.logdet = j.at("ellipsoid").at("logdet").get<double>();
  }
  const auto& co = j.at("coefficients");
  if (sol.kind == PolicyKind::kQuadratic) {
    for (const auto& q : co.at("Q")) sol.quadratic.Q.push_back(mat_from_json(q));
    sol.quadratic.L = mat_from_json(co.at("L"));
    sol.quadratic.c = vec_from_json(co.at("c"));
    sol.quadratic.lambda = mat_from_json(co.at("lambda"));
    sol.quadratic.zeta_dropped = co.value("zeta_dropped", false);
  } else {
    sol.affine.K = mat_from_json(co.at("K"));
    for (const auto& l : co.at("L")) sol.affine.L.push_back(mat_from_json(l));
    sol.affine.gamma = vec_from_json(co.at("gamma"));
    sol.affine.alpha = vec_from_json(co.at("alpha"));
  }
  return sol;
}

json to_json(const ContainmentReport& report) {
  json j;
  j["samples"] = report.samples;
  j["max_violation"] = report.max_violation;
  j["lp_oracle_used"] = report.lp_oracle_used;
  j["passed"] = report.passed();
  json fails = json::array();
  for (const auto& f : report.failures) {
    fails.push_back({{"xi", to_json(f.xi)},
                     {"zeta", to_json(f.zeta)},
                     {"violation", f.violation}});
  }
  j["failures"] = fails;
  return j;
}

json to_json(const Polygon& poly) {
  json verts = json::array();
  for (const auto& v : poly.vertices) verts.push_back({v.x(), v.y()});
  return json{{"vertices", verts}, {"area", poly.area()}};
}

json to_json(const Ellipse2D& ellipse) {
  json j;
  j["center"] = {ellipse.center.x(), ellipse.center.y()};
  j["shape"] = {{ellipse.shape(0, 0), ellipse.shape(0, 1)},
                {ellipse.shape(1, 0), ellipse.shape(1, 1)}};
  j["semi_major"] = ellipse.semi_major;
  j["semi_minor"] = ellipse.semi_minor;
  j["angle_rad"] = ellipse.angle_rad;
  j["area"] = ellipse.area();
  return j;
}

void save_manifest(const std::string& path, const RunManifest& manifest) {
  json j;
  j["schema"] = "flexhull/manifest/1";
  j["command"] = manifest.command;
  j["argv"] = manifest.argv;
  j["input"] = {{"path", manifest.input_path}, {"sha256", manifest.input_sha256}};
  j["seed"] = manifest.seed;
  j["settings"] = manifest.settings;
  j["solver"] = manifest.solver;
  json outs = json::array();
  for (const auto& [p, h] : manifest.outputs) outs.push_back({{"path", p}, {"sha256", h}});
  j["outputs"] = outs;
  j["wall_seconds"] = manifest.wall_seconds;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace flexhull
