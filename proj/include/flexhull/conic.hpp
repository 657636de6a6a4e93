#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "flexhull/common.hpp"

namespace flexhull::conic {

enum class VarKind { kScalar, kVector, kSymmetric };

// Handle to a declared variable block. Symmetric T x T variables occupy
// T(T+1)/2 scalar slots storing the lower triangle row-major:
// slot(i, j) = i(i+1)/2 + j for j <= i.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Cone { kZero, kNonneg, kSoc, kPsd, kExp };

// Sparse affine expression sum_k coeff_k * x[col_k] + constant over the
// program's flat scalar space.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}
  void add(int col, double coeff) {
    if (coeff != 0.0) terms.emplace_back(col, coeff);
  }
};

// One conic constraint: the stacked affine rows g(x) must lie in the cone.
//   kZero    g = 0            kNonneg  g >= 0 elementwise
//   kSoc     g0 >= ||g1:||    kExp     (g0, g1, g2): g1*exp(g0/g1) <= g2
//   kPsd     rows are the lower triangle (row-major, unscaled) of a
//            symmetric matrix required PSD; `psd_side` gives its order.
struct Constraint {
  Cone cone;
  std::vector<LinExpr> rows;
  int psd_side = 0;
  std::string name;
};

struct SolverSettings {
  double feas_tol = 1e-7;
  double gap_tol = 1e-7;
  double time_limit_s = 300.0;
  int max_iter = 200;
  bool verbose = false;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure, kTimeLimit };

const char* to_string(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  VectorXd x;              // flat primal values (present iff optimal)
  double objective = 0.0;  // in the program's maximize convention
  int iterations = 0;
  double solve_seconds = 0.0;
  double r_primal = 0.0;
  double r_dual = 0.0;
  std::string message;
};

class ConicProgram {
 public:
  Var add_scalar(const std::string& name);
  Var add_vector(const std::string& name, int dim);
  Var add_symmetric(const std::string& name, int side);

  int offset(Var v) const;
  int size(Var v) const;
  int side(Var v) const;  // symmetric order; 0 otherwise
  VarKind kind(Var v) const;
  int num_scalars() const { return n_scalars_; }

  // Slot index helpers into the flat space.
  int slot(Var v, int i) const;                   // scalar/vector entry
  int sym_slot(Var v, int i, int j) const;        // symmetric entry, any order

  LinExpr entry(Var v, int i = 0) const;          // expression for one slot
  LinExpr sym_entry(Var v, int i, int j) const;

  // Objective is MAXIMIZED. Coefficients accumulate.
  void objective_coeff(Var v, int i, double c);
  void objective_coeff_slot(int col, double c);

  void add_constraint(Constraint c);
  // Convenience: scalar inequality expr >= 0 / equality expr == 0.
  void add_nonneg(LinExpr e, std::string name);
  void add_zero(LinExpr e, std::string name);
  // g0 >= || (g1..gk) ||.
  void add_soc(std::vector<LinExpr> rows, std::string name);
  // t <= log v as the exponential-cone row (t, 1, v).
  void add_log(LinExpr t, LinExpr v, std::string name);

  const std::vector<Constraint>& constraints() const { return constraints_; }
  const VectorXd objective() const;

  // Extract values of a variable from a flat primal vector.
  double value(const Solution& s, Var v, int i = 0) const;
  VectorXd vector_value(const Solution& s, Var v) const;
  MatrixXd symmetric_value(const Solution& s, Var v) const;

  // Dimensional sanity; throws SchemaError on malformed programs.
  void validate() const;

  // Plain-text interchange dump of the program (variables, objective,
  // constraint rows) for cross-checking against external tooling.
  std::string export_text() const;

 private:
  struct VarInfo {
    std::string name;
    VarKind kind;
    int offset;
    int size;
    int side;
  };
  std::vector<VarInfo> vars_;
  std::vector<double> obj_;
  std::vector<Constraint> constraints_;
  int n_scalars_ = 0;

  const VarInfo& info(Var v) const;
};

// Epigraph t <= log det(E) for a symmetric matrix variable E:
// introduces a lower-triangular factor Z and scalars s with
// [[E, Z], [Z', diag(Z)]] PSD, s_i <= log Z_ii, t <= sum s_i.
// Exact at optimum (Z = L*diag(L) for the Cholesky factor L of E).
void add_logdet_epigraph(ConicProgram& prog, Var E, Var t);

// Solve with the built-in interior-point backend.
Solution solve(const ConicProgram& prog, const SolverSettings& settings = {});

}  // namespace flexhull::conic
