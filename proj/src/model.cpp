#include "flexhull/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace flexhull {

using nlohmann::json;

const char* to_string(LoadCategory c) {
  switch (c) {
    case LoadCategory::kResidential: return "residential";
    case LoadCategory::kCommercial: return "commercial";
    case LoadCategory::kIndustrial: return "industrial";
  }
  return "?";
}

LoadCategory classify_load(const VectorXd& p_nominal) {
  const double avg = p_nominal.size() ? p_nominal.mean() : 0.0;
  if (avg >= 100.0) return LoadCategory::kIndustrial;
  if (avg >= 10.0) return LoadCategory::kCommercial;
  return LoadCategory::kResidential;
}

int InjectionGroup::index_of(const std::string& key) const {
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    if (points[i] == key) return i;
  }
  return -1;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw SchemaError(path + ": " + what);
}

void require_length(const VectorXd& v, int T, const std::string& path) {
  if (static_cast<int>(v.size()) != T) {
    fail(path, "expected length " + std::to_string(T) + " (horizon T), got " +
                   std::to_string(v.size()));
  }
}

std::string point_key(const std::string& node, const std::string& phase) {
  return node + "." + phase;
}

bool is_delta_phase(const std::string& phase) {
  return phase == "ab" || phase == "bc" || phase == "ca";
}

}  // namespace

void validate(const FeederModel& model) {
  const int T = model.horizon.periods;
  if (T < 1) fail("horizon.T", "must be >= 1");
  if (!(model.horizon.tau_hours > 0.0)) fail("horizon.tau", "must be > 0");

  for (size_t i = 0; i < model.storage.size(); ++i) {
    const auto& s = model.storage[i];
    const std::string path = "devices.storage[" + std::to_string(i) + "]";
    if (!(s.p_min <= s.p_max)) fail(path + ".p_min", "p_min > p_max");
    if (!(s.kappa > 0.0 && s.kappa <= 1.0)) fail(path + ".kappa", "must lie in (0, 1]");
    if (!(0.0 <= s.e_min && s.e_min <= s.e0 && s.e0 <= s.e_cap)) {
      fail(path + ".e0", "requires 0 <= e_min <= e0 <= e_cap");
    }
  }
  for (size_t i = 0; i < model.pv.size(); ++i) {
    const auto& u = model.pv[i];
    const std::string path = "devices.pv[" + std::to_string(i) + "]";
    require_length(u.p_avail, T, path + ".p_avail");
    if (u.p_avail.minCoeff() < 0.0) fail(path + ".p_avail", "must be >= 0");
  }
  for (size_t i = 0; i < model.hvac.size(); ++i) {
    const auto& u = model.hvac[i];
    const std::string path = "devices.hvac[" + std::to_string(i) + "]";
    require_length(u.p_cap, T, path + ".p_cap");
    require_length(u.h_out, T, path + ".h_out");
    if (u.p_cap.minCoeff() < 0.0) fail(path + ".p_cap", "must be >= 0");
    if (!(u.h_min <= u.h_in0 && u.h_in0 <= u.h_max)) {
      fail(path + ".h_in0", "requires h_min <= h_in0 <= h_max");
    }
    if (!(0.0 <= u.alpha && u.alpha <= 1.0)) fail(path + ".alpha", "must lie in [0, 1]");
  }
  for (size_t i = 0; i < model.loads.size(); ++i) {
    const std::string path = "loads[" + std::to_string(i) + "]";
    require_length(model.loads[i].p_nominal, T, path + ".p_nominal");
  }
  if (model.uncertainty.delta < 0.0) fail("uncertainty.delta", "must be >= 0");
  if (model.uncertainty.n_groups < 1) fail("uncertainty.groups", "must be >= 1");

  if (model.network) {
    const auto& net = *model.network;
    const int nv = static_cast<int>(net.vnodes.size());
    auto check_group = [&](const InjectionGroup& g, const std::string& name) {
      if (g.empty()) return;
      const int np = static_cast<int>(g.points.size());
      if (g.Mp.rows() != nv || g.Mp.cols() != np)
        fail("network.sensitivities." + name + ".Mp", "dimension mismatch");
      if (g.Mq.rows() != nv || g.Mq.cols() != np)
        fail("network.sensitivities." + name + ".Mq", "dimension mismatch");
      if (g.Gp.cols() != np || g.Gq.cols() != np)
        fail("network.sensitivities." + name + ".Gp", "dimension mismatch");
    };
    check_group(net.wye, "wye");
    check_group(net.delta, "delta");
    if (static_cast<int>(net.v_tilde.size()) != nv ||
        static_cast<int>(net.v_min.size()) != nv ||
        static_cast<int>(net.v_max.size()) != nv) {
      fail("network.sensitivities", "voltage vectors must match vnodes");
    }
    if (nv > 0 && !((net.v_max - net.v_min).minCoeff() > 0.0)) {
      fail("network.sensitivities.v_min", "requires v_min < v_max elementwise");
    }
    if (static_cast<int>(net.c_sub.size()) != T) {
      fail("network.sensitivities.c_sub", "must broadcast to length T");
    }
    // Every device/load must sit on a known injection point.
    auto check_point = [&](const std::string& node, const std::string& phase,
                           const std::string& path) {
      const auto& group = is_delta_phase(phase) ? net.delta : net.wye;
      if (group.index_of(point_key(node, phase)) < 0) {
        fail(path, "injection point '" + point_key(node, phase) +
                       "' not present in network sensitivities");
      }
    };
    for (size_t i = 0; i < model.storage.size(); ++i)
      check_point(model.storage[i].node, model.storage[i].phase,
                  "devices.storage[" + std::to_string(i) + "]");
    for (size_t i = 0; i < model.pv.size(); ++i)
      check_point(model.pv[i].node, model.pv[i].phase,
                  "devices.pv[" + std::to_string(i) + "]");
    for (size_t i = 0; i < model.hvac.size(); ++i)
      check_point(model.hvac[i].node, model.hvac[i].phase,
                  "devices.hvac[" + std::to_string(i) + "]");
    for (size_t i = 0; i < model.loads.size(); ++i)
      check_point(model.loads[i].node, model.loads[i].phase,
                  "loads[" + std::to_string(i) + "]");
  }
}

// ---------------------------------------------------------------------------
// JSON ingestion

namespace {

double get_num(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || !j[key].is_number()) fail(path + "." + key, "missing or non-numeric");
  return j[key].get<double>();
}

double get_num_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j[key].get<double>() : fallback;
}

std::string get_str(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || !j[key].is_string()) fail(path + "." + key, "missing or non-string");
  return j[key].get<std::string>();
}

VectorXd get_vec(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(path, "non-numeric entry at index " + std::to_string(i));
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

// Scalar broadcasts to a constant length-T vector.
VectorXd get_vec_or_scalar(const json& j, int T, const std::string& path) {
  if (j.is_number()) return VectorXd::Constant(T, j.get<double>());
  return get_vec(j, path);
}

// Dense matrix object {rows, cols, data(row-major)}.
MatrixXd get_mat(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    fail(path, "expected {rows, cols, data}");
  }
  const int rows = j["rows"].get<int>();
  const int cols = j["cols"].get<int>();
  const auto& data = j["data"];
  if (!data.is_array() || static_cast<int>(data.size()) != rows * cols) {
    fail(path + ".data", "expected " + std::to_string(rows * cols) + " entries");
  }
  MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = data[r * cols + c].get<double>();
  return m;
}

LoadCategory parse_category(const std::string& s, const std::string& path) {
  if (s == "residential") return LoadCategory::kResidential;
  if (s == "commercial") return LoadCategory::kCommercial;
  if (s == "industrial") return LoadCategory::kIndustrial;
  fail(path, "unknown category '" + s + "'");
}

InjectionGroup parse_group(const json& j, const std::string& path) {
  InjectionGroup g;
  if (!j.contains("points")) fail(path, "missing points");
  for (const auto& p : j["points"]) g.points.push_back(p.get<std::string>());
  g.Mp = get_mat(j["Mp"], path + ".Mp");
  g.Mq = j.contains("Mq") ? get_mat(j["Mq"], path + ".Mq")
                          : MatrixXd::Zero(g.Mp.rows(), g.Mp.cols()).eval();
  g.Gp = get_vec(j["Gp"], path + ".Gp").transpose();
  g.Gq = j.contains("Gq") ? get_vec(j["Gq"], path + ".Gq").transpose().eval()
                          : RowVectorXd::Zero(g.Gp.cols()).eval();
  return g;
}

NetworkSensitivities parse_sensitivities(const json& j, int T) {
  NetworkSensitivities net;
  const std::string path = "network.sensitivities";
  if (!j.contains("vnodes")) fail(path, "missing vnodes");
  for (const auto& v : j["vnodes"]) net.vnodes.push_back(v.get<std::string>());
  if (j.contains("wye")) net.wye = parse_group(j["wye"], path + ".wye");
  if (j.contains("delta")) net.delta = parse_group(j["delta"], path + ".delta");
  if (net.wye.empty() && net.delta.empty()) fail(path, "needs a wye or delta group");
  net.v_tilde = get_vec(j["v_tilde"], path + ".v_tilde");
  net.v_min = get_vec(j["v_min"], path + ".v_min");
  net.v_max = get_vec(j["v_max"], path + ".v_max");
  net.c_sub = j.contains("c_sub") ? get_vec_or_scalar(j["c_sub"], T, path + ".c_sub")
                                  : VectorXd::Zero(T).eval();
  return net;
}

// Balanced single-phase radial feeder: common-path resistance/reactance
// voltage sensitivities, lossless substation aggregation. Test-fixture
// plumbing, not a general multiphase linearization.
NetworkSensitivities build_lindistflow(const json& j, int T) {
  const std::string path = "network.lindistflow";
  if (!j.contains("lines") || !j["lines"].is_array() || j["lines"].empty()) {
    fail(path + ".lines", "expected a nonempty array");
  }
  const double v0 = get_num_or(j, "v0", 1.0);
  const double s_base = get_num_or(j, "s_base_kva", 1000.0);
  const double vlo = get_num_or(j, "v_min", 0.95);
  const double vhi = get_num_or(j, "v_max", 1.05);
  if (!(vlo < vhi)) fail(path + ".v_min", "requires v_min < v_max");

  struct Line {
    std::string from, to;
    double r, x;
  };
  std::vector<Line> lines;
  std::vector<std::string> nodes;  // excluding substation "0"
  auto node_index = [&](const std::string& name) {
    for (size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i] == name) return static_cast<int>(i);
    return -1;
  };
  for (const auto& lj : j["lines"]) {
    Line l{get_str(lj, "from", path), get_str(lj, "to", path),
           get_num(lj, "r", path), get_num(lj, "x", path)};
    lines.push_back(l);
    if (l.to != "0" && node_index(l.to) < 0) nodes.push_back(l.to);
    if (l.from != "0" && node_index(l.from) < 0) nodes.push_back(l.from);
  }
  const int N = static_cast<int>(nodes.size());

  // Cumulative (r, x) along the path to the substation, settled
  // iteratively since lines may be listed in any order or orientation.
  std::vector<double> depth_r(N, -1.0), depth_x(N, 0.0);
  bool changed = true;
  int guard = N + 2;
  while (changed && guard-- > 0) {
    changed = false;
    for (const auto& l : lines) {
      auto relax = [&](const std::string& up, const std::string& dn) {
        const double base_r = (up == "0") ? 0.0 : depth_r[node_index(up)];
        const double base_x = (up == "0") ? 0.0 : depth_x[node_index(up)];
        if (up != "0" && base_r < 0.0) return;
        const int di = node_index(dn);
        if (di >= 0 && depth_r[di] < 0.0) {
          depth_r[di] = base_r + l.r;
          depth_x[di] = base_x + l.x;
          changed = true;
        }
      };
      relax(l.from, l.to);
      relax(l.to, l.from);
    }
  }
  for (int i = 0; i < N; ++i) {
    if (depth_r[i] < 0.0) fail(path + ".lines", "node '" + nodes[i] + "' not connected to 0");
  }

  // Common-path sensitivity: R_jk = sum of r over path(0,j) ∩ path(0,k).
  // Rebuild explicit paths for the intersection.
  std::vector<std::vector<int>> path_edges(N);
  {
    std::vector<int> par(N, -2);           // parent node index, -1 for "0"
    std::vector<int> par_edge(N, -1);      // edge index to parent
    std::vector<bool> settled(N, false);
    bool more = true;
    while (more) {
      more = false;
      for (size_t e = 0; e < lines.size(); ++e) {
        const auto& l = lines[e];
        auto relax = [&](const std::string& up, const std::string& dn) {
          const bool up_ok = (up == "0") || (node_index(up) >= 0 && settled[node_index(up)]);
          const int di = node_index(dn);
          if (up_ok && di >= 0 && !settled[di]) {
            par[di] = (up == "0") ? -1 : node_index(up);
            par_edge[di] = static_cast<int>(e);
            settled[di] = true;
            more = true;
          }
        };
        relax(l.from, l.to);
        relax(l.to, l.from);
      }
    }
    for (int i = 0; i < N; ++i) {
      int cur = i;
      while (cur >= 0) {
        path_edges[i].push_back(par_edge[cur]);
        cur = par[cur];
      }
    }
  }
  auto common_rx = [&](int a, int b) {
    double r = 0.0, x = 0.0;
    for (int ea : path_edges[a]) {
      for (int eb : path_edges[b]) {
        if (ea == eb) {
          r += lines[ea].r;
          x += lines[ea].x;
        }
      }
    }
    return std::pair<double, double>(r, x);
  };

  NetworkSensitivities net;
  net.wye.points.reserve(N);
  for (int i = 0; i < N; ++i) net.wye.points.push_back(nodes[i] + ".a");
  net.vnodes = net.wye.points;
  net.wye.Mp.resize(N, N);
  net.wye.Mq.resize(N, N);
  for (int a = 0; a < N; ++a) {
    for (int b = 0; b < N; ++b) {
      auto [r, x] = common_rx(a, b);
      // Per-unit voltage change per kW/kvar of injection.
      net.wye.Mp(a, b) = r / (v0 * s_base);
      net.wye.Mq(a, b) = x / (v0 * s_base);
    }
  }
  net.wye.Gp = RowVectorXd::Constant(N, -1.0);
  net.wye.Gq = RowVectorXd::Zero(N);
  net.v_tilde = VectorXd::Constant(N, v0);
  net.v_min = VectorXd::Constant(N, vlo);
  net.v_max = VectorXd::Constant(N, vhi);
  net.c_sub = VectorXd::Zero(T);
  return net;
}

}  // namespace

FeederModel build_feeder_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("model file: invalid JSON: ") + e.what());
  }
  if (!doc.contains("schema") || doc["schema"] != "flexhull/1") {
    fail("schema", "expected \"flexhull/1\"");
  }
  FeederModel model;
  if (!doc.contains("horizon")) fail("horizon", "missing");
  model.horizon.periods = static_cast<int>(get_num(doc["horizon"], "T", "horizon"));
  model.horizon.tau_hours = get_num(doc["horizon"], "tau", "horizon");
  const int T = model.horizon.periods;
  if (T < 1) fail("horizon.T", "must be >= 1");

  const json devices = doc.contains("devices") ? doc["devices"] : json::object();
  if (devices.contains("storage")) {
    for (size_t i = 0; i < devices["storage"].size(); ++i) {
      const auto& js = devices["storage"][i];
      const std::string path = "devices.storage[" + std::to_string(i) + "]";
      StorageUnit s;
      s.node = get_str(js, "node", path);
      s.phase = js.contains("phase") ? js["phase"].get<std::string>() : "a";
      s.p_min = get_num(js, "p_min", path);
      s.p_max = get_num(js, "p_max", path);
      s.power_factor = get_num_or(js, "power_factor", 0.0);
      s.kappa = get_num_or(js, "kappa", 1.0);
      s.e0 = get_num(js, "e0", path);
      s.e_min = get_num_or(js, "e_min", 0.0);
      s.e_cap = get_num(js, "e_cap", path);
      model.storage.push_back(std::move(s));
    }
  }
  if (devices.contains("pv")) {
    for (size_t i = 0; i < devices["pv"].size(); ++i) {
      const auto& js = devices["pv"][i];
      const std::string path = "devices.pv[" + std::to_string(i) + "]";
      PvUnit u;
      u.node = get_str(js, "node", path);
      u.phase = js.contains("phase") ? js["phase"].get<std::string>() : "a";
      u.p_avail = get_vec_or_scalar(js.contains("p_avail") ? js["p_avail"] : json(), T,
                                    path + ".p_avail");
      u.power_factor = get_num_or(js, "power_factor", 0.0);
      require_length(u.p_avail, T, path + ".p_avail");
      model.pv.push_back(std::move(u));
    }
  }
  if (devices.contains("hvac")) {
    for (size_t i = 0; i < devices["hvac"].size(); ++i) {
      const auto& js = devices["hvac"][i];
      const std::string path = "devices.hvac[" + std::to_string(i) + "]";
      HvacUnit u;
      u.node = get_str(js, "node", path);
      u.phase = js.contains("phase") ? js["phase"].get<std::string>() : "a";
      u.p_cap = get_vec_or_scalar(js["p_cap"], T, path + ".p_cap");
      u.power_factor = get_num_or(js, "power_factor", 0.0);
      u.h_min = get_num(js, "h_min", path);
      u.h_max = get_num(js, "h_max", path);
      u.h_in0 = get_num(js, "h_in0", path);
      u.h_out = get_vec_or_scalar(js["h_out"], T, path + ".h_out");
      u.alpha = get_num(js, "alpha", path);
      u.beta = get_num(js, "beta", path);
      require_length(u.p_cap, T, path + ".p_cap");
      require_length(u.h_out, T, path + ".h_out");
      model.hvac.push_back(std::move(u));
    }
  }
  if (doc.contains("loads")) {
    for (size_t i = 0; i < doc["loads"].size(); ++i) {
      const auto& js = doc["loads"][i];
      const std::string path = "loads[" + std::to_string(i) + "]";
      UncontrollableLoad l;
      l.node = get_str(js, "node", path);
      l.phase = js.contains("phase") ? js["phase"].get<std::string>() : "a";
      l.p_nominal = get_vec_or_scalar(js["p_nominal"], T, path + ".p_nominal");
      require_length(l.p_nominal, T, path + ".p_nominal");
      l.power_factor = get_num_or(js, "power_factor", 0.0);
      l.category = js.contains("category")
                       ? parse_category(js["category"].get<std::string>(), path + ".category")
                       : classify_load(l.p_nominal);
      model.loads.push_back(std::move(l));
    }
  }
  if (doc.contains("uncertainty")) {
    model.uncertainty.delta = get_num_or(doc["uncertainty"], "delta", 0.0);
    model.uncertainty.n_groups =
        static_cast<int>(get_num_or(doc["uncertainty"], "groups", 3.0));
  }
  if (doc.contains("network") && !doc["network"].is_null()) {
    const auto& net = doc["network"];
    if (net.contains("sensitivities")) {
      model.network = parse_sensitivities(net["sensitivities"], T);
    } else if (net.contains("lindistflow")) {
      model.network = build_lindistflow(net["lindistflow"], T);
    } else {
      fail("network", "expected 'sensitivities' or 'lindistflow'");
    }
  }
  validate(model);
  return model;
}

FeederModel build_feeder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("model file: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return build_feeder_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Assembly

int ConstraintSystem::col_of(DeviceKind kind, int device, int period) const {
  for (int c = 0; c < static_cast<int>(columns.size()); ++c) {
    const auto& k = columns[c];
    if (k.kind == kind && k.device == device && k.period == period) return c;
  }
  return -1;
}

namespace {

struct RowBuffer {
  std::vector<Eigen::RowVectorXd> w_rows;
  std::vector<Eigen::RowVectorXd> zt_rows;
  std::vector<double> z0;
  std::vector<std::string> names;
  int nT, NuT;

  RowBuffer(int nT_, int NuT_) : nT(nT_), NuT(NuT_) {}

  // Returns a row to fill in place; z_theta part starts at zero.
  void push(const Eigen::RowVectorXd& w, const Eigen::RowVectorXd& zt, double z,
            std::string name) {
    w_rows.push_back(w);
    zt_rows.push_back(zt);
    z0.push_back(z);
    names.push_back(std::move(name));
  }
  void push(const Eigen::RowVectorXd& w, double z, std::string name) {
    push(w, Eigen::RowVectorXd::Zero(NuT), z, std::move(name));
  }
};

}  // namespace

ConstraintSystem assemble(const FeederModel& model) {
  validate(model);
  const int T = model.horizon.periods;
  const double tau = model.horizon.tau_hours;
  const int n = model.n_devices();
  if (n == 0) {
    throw SchemaError("devices: no controllable devices; aggregation map would be rank-deficient");
  }
  const int Nu = model.uncertainty.n_groups;
  const double delta = model.uncertainty.delta;
  const int nT = n * T;
  const int NuT = Nu * T;

  ConstraintSystem sys;
  sys.T = T;
  sys.n = n;
  sys.Nu = Nu;
  sys.tau = tau;

  // Device-major columns: storage, then pv, then hvac.
  sys.columns.reserve(nT);
  int dev = 0;
  for (size_t i = 0; i < model.storage.size(); ++i, ++dev)
    for (int t = 0; t < T; ++t)
      sys.columns.push_back({DeviceKind::kStorage, static_cast<int>(i), t});
  for (size_t i = 0; i < model.pv.size(); ++i, ++dev)
    for (int t = 0; t < T; ++t)
      sys.columns.push_back({DeviceKind::kPv, static_cast<int>(i), t});
  for (size_t i = 0; i < model.hvac.size(); ++i, ++dev)
    for (int t = 0; t < T; ++t)
      sys.columns.push_back({DeviceKind::kHvac, static_cast<int>(i), t});

  auto col = [&](DeviceKind kind, int device, int period) {
    int base = 0;
    if (kind == DeviceKind::kPv) base = static_cast<int>(model.storage.size());
    if (kind == DeviceKind::kHvac)
      base = static_cast<int>(model.storage.size() + model.pv.size());
    return (base + device) * T + period;
  };
  auto zslot = [&](int period, int group) { return period * Nu + group; };

  RowBuffer rows(nT, NuT);
  using Row = Eigen::RowVectorXd;

  // Storage: rate bounds plus unrolled state-of-charge band
  //   e(t) = kappa^t e0 - tau * sum_{s<=t} kappa^(t-s) p(s).
  for (size_t i = 0; i < model.storage.size(); ++i) {
    const auto& s = model.storage[i];
    const std::string tag = "storage[" + std::to_string(i) + "]";
    for (int t = 0; t < T; ++t) {
      Row w = Row::Zero(nT);
      w[col(DeviceKind::kStorage, static_cast<int>(i), t)] = 1.0;
      rows.push(w, s.p_max, tag + ".rate_ub[t=" + std::to_string(t) + "]");
      rows.push(-w, -s.p_min, tag + ".rate_lb[t=" + std::to_string(t) + "]");
    }
    for (int t = 0; t < T; ++t) {
      Row soc = Row::Zero(nT);
      for (int u = 0; u <= t; ++u) {
        soc[col(DeviceKind::kStorage, static_cast<int>(i), u)] =
            -tau * std::pow(s.kappa, t - u);
      }
      const double drift = std::pow(s.kappa, t + 1) * s.e0;
      rows.push(soc, s.e_cap - drift, tag + ".soc_ub[t=" + std::to_string(t) + "]");
      rows.push(-soc, drift - s.e_min, tag + ".soc_lb[t=" + std::to_string(t) + "]");
    }
  }

  // PV: availability band.
  for (size_t i = 0; i < model.pv.size(); ++i) {
    const auto& u = model.pv[i];
    const std::string tag = "pv[" + std::to_string(i) + "]";
    for (int t = 0; t < T; ++t) {
      Row w = Row::Zero(nT);
      w[col(DeviceKind::kPv, static_cast<int>(i), t)] = 1.0;
      rows.push(w, u.p_avail[t], tag + ".avail_ub[t=" + std::to_string(t) + "]");
      rows.push(-w, 0.0, tag + ".avail_lb[t=" + std::to_string(t) + "]");
    }
  }

  // HVAC: capacity band plus unrolled indoor-temperature band
  //   h(t) = (1-a)^t h0 + sum_{s<=t} (1-a)^(t-s) (a*h_out(s) + tau*beta*p(s)).
  for (size_t i = 0; i < model.hvac.size(); ++i) {
    const auto& u = model.hvac[i];
    const std::string tag = "hvac[" + std::to_string(i) + "]";
    for (int t = 0; t < T; ++t) {
      Row w = Row::Zero(nT);
      w[col(DeviceKind::kHvac, static_cast<int>(i), t)] = 1.0;
      rows.push(w, u.p_cap[t], tag + ".cap_ub[t=" + std::to_string(t) + "]");
      rows.push(-w, 0.0, tag + ".cap_lb[t=" + std::to_string(t) + "]");
    }
    const double om = 1.0 - u.alpha;
    for (int t = 0; t < T; ++t) {
      Row temp = Row::Zero(nT);
      double ambient = std::pow(om, t + 1) * u.h_in0;
      for (int s = 0; s <= t; ++s) {
        temp[col(DeviceKind::kHvac, static_cast<int>(i), s)] =
            tau * u.beta * std::pow(om, t - s);
        ambient += u.alpha * std::pow(om, t - s) * u.h_out[s];
      }
      rows.push(temp, u.h_max - ambient, tag + ".temp_ub[t=" + std::to_string(t) + "]");
      rows.push(-temp, ambient - u.h_min, tag + ".temp_lb[t=" + std::to_string(t) + "]");
    }
  }

  // Per-device injection-point data for network coupling (Eqs. of the
  // nodal injection balance: storage injects +p, PV and HVAC as modeled
  // enter with negative sign, loads consume).
  struct Coupling {
    DeviceKind kind;
    int index;
    double sign;
    double psi;
    int point;     // column within the concatenated [wye, delta] space
  };
  std::vector<Coupling> couplings;
  const NetworkSensitivities* net = model.network ? &*model.network : nullptr;
  int n_wye = net ? static_cast<int>(net->wye.points.size()) : 0;

  auto point_of = [&](const std::string& node, const std::string& phase) {
    if (!net) return -1;
    const std::string key = point_key(node, phase);
    if (is_delta_phase(phase)) {
      const int k = net->delta.index_of(key);
      return k < 0 ? -1 : n_wye + k;
    }
    return net->wye.index_of(key);
  };
  for (size_t i = 0; i < model.storage.size(); ++i)
    couplings.push_back({DeviceKind::kStorage, static_cast<int>(i), +1.0,
                         model.storage[i].power_factor,
                         point_of(model.storage[i].node, model.storage[i].phase)});
  for (size_t i = 0; i < model.pv.size(); ++i)
    couplings.push_back({DeviceKind::kPv, static_cast<int>(i), -1.0,
                         model.pv[i].power_factor,
                         point_of(model.pv[i].node, model.pv[i].phase)});
  for (size_t i = 0; i < model.hvac.size(); ++i)
    couplings.push_back({DeviceKind::kHvac, static_cast<int>(i), -1.0,
                         model.hvac[i].power_factor,
                         point_of(model.hvac[i].node, model.hvac[i].phase)});

  // Stacked sensitivity columns over [wye, delta] injection points.
  MatrixXd Mp, Mq;
  RowVectorXd Gp, Gq;
  if (net) {
    const int np = n_wye + static_cast<int>(net->delta.points.size());
    const int nv = static_cast<int>(net->vnodes.size());
    Mp.resize(nv, np);
    Mq.resize(nv, np);
    Gp.resize(np);
    Gq.resize(np);
    if (!net->wye.empty()) {
      Mp.leftCols(n_wye) = net->wye.Mp;
      Mq.leftCols(n_wye) = net->wye.Mq;
      Gp.head(n_wye) = net->wye.Gp;
      Gq.head(n_wye) = net->wye.Gq;
    }
    if (!net->delta.empty()) {
      const int nd = static_cast<int>(net->delta.points.size());
      Mp.rightCols(nd) = net->delta.Mp;
      Mq.rightCols(nd) = net->delta.Mq;
      Gp.tail(nd) = net->delta.Gp;
      Gq.tail(nd) = net->delta.Gq;
    }
  }

  // Load injection weight at its point: effect per kW of consumed power is
  // -(column_p + psi * column_q).
  struct LoadEffect {
    int point;
    int group;
    VectorXd p_nominal;
  };
  std::vector<LoadEffect> load_effects;
  for (const auto& l : model.loads) {
    const int g = std::min(static_cast<int>(l.category), Nu - 1);
    load_effects.push_back({point_of(l.node, l.phase), g, l.p_nominal});
  }

  // Voltage band rows, per period, when a network model is present.
  if (net) {
    const int nv = static_cast<int>(net->vnodes.size());
    for (int t = 0; t < T; ++t) {
      // Device part of v(t) and affine load part.
      MatrixXd Vdev = MatrixXd::Zero(nv, nT);
      for (const auto& c : couplings) {
        const VectorXd mcol = Mp.col(c.point) + c.psi * Mq.col(c.point);
        Vdev.col(col(c.kind, c.index, t)) += c.sign * mcol;
      }
      VectorXd v_load_nom = VectorXd::Zero(nv);
      MatrixXd v_load_theta = MatrixXd::Zero(nv, NuT);
      size_t li = 0;
      for (const auto& l : model.loads) {
        const auto& ef = load_effects[li++];
        const VectorXd mcol = Mp.col(ef.point) + l.power_factor * Mq.col(ef.point);
        v_load_nom -= mcol * ef.p_nominal[t];
        v_load_theta.col(zslot(t, ef.group)) -= mcol * (delta * ef.p_nominal[t]);
      }
      for (int k = 0; k < nv; ++k) {
        const std::string where = net->vnodes[k] + ",t=" + std::to_string(t);
        // v <= v_max:  Vdev p <= v_max - v_tilde - v_load(zeta)
        rows.push(Vdev.row(k), -v_load_theta.row(k),
                  net->v_max[k] - net->v_tilde[k] - v_load_nom[k],
                  "voltage_ub[" + where + "]");
        // v >= v_min
        rows.push(-Vdev.row(k), v_load_theta.row(k),
                  net->v_tilde[k] - net->v_min[k] + v_load_nom[k],
                  "voltage_lb[" + where + "]");
      }
    }
  }

  // Aggregation map p0 = D p + b(zeta). Without an explicit network the
  // substation balances losslessly: p0 = -sum of injections.
  sys.D = MatrixXd::Zero(T, nT);
  sys.b_theta = MatrixXd::Zero(T, NuT);
  sys.b_nu = VectorXd::Zero(T);
  for (int t = 0; t < T; ++t) {
    for (const auto& c : couplings) {
      const double g = net ? (Gp[c.point] + c.psi * Gq[c.point]) : -1.0;
      sys.D(t, col(c.kind, c.index, t)) += c.sign * g;
    }
    size_t li = 0;
    for (const auto& l : model.loads) {
      const auto& ef = load_effects[li++];
      const double g = net ? (Gp[ef.point] + l.power_factor * Gq[ef.point]) : -1.0;
      sys.b_nu[t] += -g * ef.p_nominal[t];
      sys.b_theta(t, zslot(t, ef.group)) += -g * (delta * ef.p_nominal[t]);
    }
    if (net) sys.b_nu[t] += net->c_sub[t];
  }

  const int m = static_cast<int>(rows.w_rows.size());
  sys.W.resize(m, nT);
  sys.z_theta.resize(m, NuT);
  sys.z_nu.resize(m);
  for (int r = 0; r < m; ++r) {
    sys.W.row(r) = rows.w_rows[r];
    sys.z_theta.row(r) = rows.zt_rows[r];
    sys.z_nu[r] = rows.z0[r];
  }
  sys.row_names = std::move(rows.names);

  // Constant rows with empty support must be satisfiable outright.
  for (int r = 0; r < m; ++r) {
    if (sys.W.row(r).cwiseAbs().maxCoeff() == 0.0 &&
        sys.z_theta.row(r).cwiseAbs().maxCoeff() == 0.0 && sys.z_nu[r] < 0.0) {
      throw SchemaError("infeasible static bounds at row '" + sys.row_names[r] + "'");
    }
  }
  return sys;
}

std::pair<VectorXd, VectorXd> evaluate_rhs(const ConstraintSystem& sys,
                                           const VectorXd& zeta) {
  const int NuT = sys.Nu * sys.T;
  if (static_cast<int>(zeta.size()) != NuT) {
    throw NumericalError("zeta: expected length " + std::to_string(NuT) + ", got " +
                         std::to_string(zeta.size()));
  }
  for (int t = 0; t < sys.T; ++t) {
    const double norm = zeta.segment(t * sys.Nu, sys.Nu).norm();
    if (norm > 1.0 + 1e-9) {
      throw NumericalError("zeta block t=" + std::to_string(t) + " has norm " +
                           std::to_string(norm) + " > 1");
    }
  }
  return {sys.z_theta * zeta + sys.z_nu, sys.b_theta * zeta + sys.b_nu};
}

}  // namespace flexhull
