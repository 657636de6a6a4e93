#include "flexhull/conic.hpp"

#include <cmath>
#include <sstream>

namespace flexhull::conic {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNumericalFailure: return "numerical_failure";
    case SolveStatus::kTimeLimit: return "time_limit";
  }
  return "?";
}

const ConicProgram::VarInfo& ConicProgram::info(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(vars_.size())) {
    throw SchemaError("conic: invalid variable handle");
  }
  return vars_[v.id];
}

Var ConicProgram::add_scalar(const std::string& name) {
  vars_.push_back({name, VarKind::kScalar, n_scalars_, 1, 0});
  n_scalars_ += 1;
  return {static_cast<int>(vars_.size()) - 1};
}

Var ConicProgram::add_vector(const std::string& name, int dim) {
  if (dim < 0) throw SchemaError("conic: negative dimension for '" + name + "'");
  vars_.push_back({name, VarKind::kVector, n_scalars_, dim, 0});
  n_scalars_ += dim;
  return {static_cast<int>(vars_.size()) - 1};
}

Var ConicProgram::add_symmetric(const std::string& name, int side) {
  if (side < 1) throw SchemaError("conic: bad order for symmetric '" + name + "'");
  const int sz = side * (side + 1) / 2;
  vars_.push_back({name, VarKind::kSymmetric, n_scalars_, sz, side});
  n_scalars_ += sz;
  return {static_cast<int>(vars_.size()) - 1};
}

int ConicProgram::offset(Var v) const { return info(v).offset; }
int ConicProgram::size(Var v) const { return info(v).size; }
int ConicProgram::side(Var v) const { return info(v).side; }
VarKind ConicProgram::kind(Var v) const { return info(v).kind; }

int ConicProgram::slot(Var v, int i) const {
  const auto& vi = info(v);
  if (i < 0 || i >= vi.size) {
    throw SchemaError("conic: slot " + std::to_string(i) + " out of range for '" +
                      vi.name + "'");
  }
  return vi.offset + i;
}

int ConicProgram::sym_slot(Var v, int i, int j) const {
  const auto& vi = info(v);
  if (vi.kind != VarKind::kSymmetric) {
    throw SchemaError("conic: '" + vi.name + "' is not symmetric");
  }
  if (i < j) std::swap(i, j);
  if (j < 0 || i >= vi.side) {
    throw SchemaError("conic: symmetric index out of range for '" + vi.name + "'");
  }
  return vi.offset + i * (i + 1) / 2 + j;
}

LinExpr ConicProgram::entry(Var v, int i) const {
  LinExpr e;
  e.add(slot(v, i), 1.0);
  return e;
}

LinExpr ConicProgram::sym_entry(Var v, int i, int j) const {
  LinExpr e;
  e.add(sym_slot(v, i, j), 1.0);
  return e;
}

void ConicProgram::objective_coeff(Var v, int i, double c) {
  objective_coeff_slot(slot(v, i), c);
}

void ConicProgram::objective_coeff_slot(int col, double c) {
  if (static_cast<int>(obj_.size()) < n_scalars_) obj_.resize(n_scalars_, 0.0);
  obj_[col] += c;
}

void ConicProgram::add_constraint(Constraint c) {
  if (c.cone == Cone::kPsd) {
    const int expected = c.psd_side * (c.psd_side + 1) / 2;
    if (c.psd_side < 1 || static_cast<int>(c.rows.size()) != expected) {
      throw SchemaError("conic: PSD constraint '" + c.name + "' needs " +
                        std::to_string(expected) + " triangle rows");
    }
  }
  if (c.cone == Cone::kExp && c.rows.size() != 3) {
    throw SchemaError("conic: exponential cone '" + c.name + "' needs 3 rows");
  }
  if (c.cone == Cone::kSoc && c.rows.size() < 2) {
    throw SchemaError("conic: second-order cone '" + c.name + "' needs >= 2 rows");
  }
  if (c.rows.empty()) return;
  constraints_.push_back(std::move(c));
}

void ConicProgram::add_nonneg(LinExpr e, std::string name) {
  Constraint c;
  c.cone = Cone::kNonneg;
  c.rows.push_back(std::move(e));
  c.name = std::move(name);
  add_constraint(std::move(c));
}

void ConicProgram::add_zero(LinExpr e, std::string name) {
  Constraint c;
  c.cone = Cone::kZero;
  c.rows.push_back(std::move(e));
  c.name = std::move(name);
  add_constraint(std::move(c));
}

void ConicProgram::add_soc(std::vector<LinExpr> rows, std::string name) {
  Constraint c;
  c.cone = Cone::kSoc;
  c.rows = std::move(rows);
  c.name = std::move(name);
  add_constraint(std::move(c));
}

void ConicProgram::add_log(LinExpr t, LinExpr v, std::string name) {
  Constraint c;
  c.cone = Cone::kExp;
  c.rows.push_back(std::move(t));
  c.rows.push_back(LinExpr(1.0));
  c.rows.push_back(std::move(v));
  c.name = std::move(name);
  add_constraint(std::move(c));
}

const VectorXd ConicProgram::objective() const {
  VectorXd q = VectorXd::Zero(n_scalars_);
  for (size_t i = 0; i < obj_.size(); ++i) q[static_cast<Eigen::Index>(i)] = obj_[i];
  return q;
}

double ConicProgram::value(const Solution& s, Var v, int i) const {
  return s.x[slot(v, i)];
}

VectorXd ConicProgram::vector_value(const Solution& s, Var v) const {
  const auto& vi = info(v);
  return s.x.segment(vi.offset, vi.size);
}

MatrixXd ConicProgram::symmetric_value(const Solution& s, Var v) const {
  const auto& vi = info(v);
  if (vi.kind != VarKind::kSymmetric) {
    throw SchemaError("conic: '" + vi.name + "' is not symmetric");
  }
  MatrixXd M(vi.side, vi.side);
  for (int i = 0; i < vi.side; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double val = s.x[vi.offset + i * (i + 1) / 2 + j];
      M(i, j) = val;
      M(j, i) = val;
    }
  }
  return M;
}

void ConicProgram::validate() const {
  for (const auto& c : constraints_) {
    for (const auto& row : c.rows) {
      for (const auto& [col, coeff] : row.terms) {
        if (col < 0 || col >= n_scalars_) {
          throw SchemaError("conic: constraint '" + c.name +
                            "' references undeclared slot " + std::to_string(col));
        }
        if (!std::isfinite(coeff)) {
          throw SchemaError("conic: constraint '" + c.name + "' has non-finite coefficient");
        }
      }
      if (!std::isfinite(row.constant)) {
        throw SchemaError("conic: constraint '" + c.name + "' has non-finite constant");
      }
    }
  }
}

std::string ConicProgram::export_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "# conic program interchange v1\n";
  os << "vars " << n_scalars_ << "\n";
  for (const auto& v : vars_) {
    os << "var " << v.name << " kind=" << static_cast<int>(v.kind) << " offset=" << v.offset
       << " size=" << v.size << (v.side ? " side=" + std::to_string(v.side) : "") << "\n";
  }
  os << "maximize";
  for (size_t i = 0; i < obj_.size(); ++i) {
    if (obj_[i] != 0.0) os << " " << i << ":" << obj_[i];
  }
  os << "\n";
  static const char* kCone[] = {"zero", "nonneg", "soc", "psd", "exp"};
  for (const auto& c : constraints_) {
    os << "con " << kCone[static_cast<int>(c.cone)];
    if (c.cone == Cone::kPsd) os << " side=" << c.psd_side;
    os << " name=" << c.name << "\n";
    for (const auto& row : c.rows) {
      os << " ";
      for (const auto& [col, coeff] : row.terms) os << " " << col << ":" << coeff;
      os << " const:" << row.constant << "\n";
    }
  }
  return os.str();
}

void add_logdet_epigraph(ConicProgram& prog, Var E, Var t) {
  if (prog.kind(E) != VarKind::kSymmetric) {
    throw SchemaError("add_logdet_epigraph: E must be a symmetric matrix variable");
  }
  if (prog.kind(t) != VarKind::kScalar) {
    throw SchemaError("add_logdet_epigraph: t must be a scalar variable");
  }
  const int n = prog.side(E);
  // Z is lower triangular; store its triangle as a flat vector with the
  // same slot layout as a symmetric variable's lower triangle.
  Var Z = prog.add_vector("logdet.Z", n * (n + 1) / 2);
  Var s = prog.add_vector("logdet.s", n);
  auto z_slot = [&](int i, int j) { return prog.slot(Z, i * (i + 1) / 2 + j); };

  // [[E, Z], [Z', diag(Z)]] PSD; order 2n, lower triangle row-major.
  Constraint psd;
  psd.cone = Cone::kPsd;
  psd.psd_side = 2 * n;
  psd.name = "logdet.factor_psd";
  psd.rows.reserve((2 * n) * (2 * n + 1) / 2);
  for (int I = 0; I < 2 * n; ++I) {
    for (int J = 0; J <= I; ++J) {
      LinExpr e;
      if (I < n) {
        e.add(prog.sym_slot(E, I, J), 1.0);        // E block
      } else if (J < n) {
        const int i = I - n;                        // (Z')_{i,J} = Z_{J,i}
        if (i <= J) e.add(z_slot(J, i), 1.0);
      } else {
        const int i = I - n, j = J - n;             // diag(Z) block
        if (i == j) e.add(z_slot(i, i), 1.0);
      }
      psd.rows.push_back(std::move(e));
    }
  }
  prog.add_constraint(std::move(psd));

  // s_i <= log Z_ii and t <= sum s_i.
  LinExpr sum_s;
  for (int i = 0; i < n; ++i) {
    LinExpr si = prog.entry(s, i);
    LinExpr zi;
    zi.add(z_slot(i, i), 1.0);
    prog.add_log(std::move(si), std::move(zi), "logdet.log[" + std::to_string(i) + "]");
    sum_s.add(prog.slot(s, i), 1.0);
  }
  sum_s.add(prog.slot(t, 0), -1.0);
  prog.add_nonneg(std::move(sum_s), "logdet.sum");
}

}  // namespace flexhull::conic
