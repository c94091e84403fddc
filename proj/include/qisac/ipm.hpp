// ipm.hpp
// Dense primal-dual interior-point solver for linear cone programs over the
// nonnegative orthant, second-order cones, and (real symmetric, svec-packed)
// PSD cones, using Nesterov-Todd scaling inside a homogeneous self-dual
// embedding with Mehrotra predictor-corrector steps.
//
// Standard form:
//   minimize    c'x
//   subject to  A x = b
//               G x + s = h,   s in K
// with K = R+^l  x  SOC(q_1) x ... x SOC(q_ns)  x  PSD(m_1) x ... x PSD(m_np)
// where a PSD(m) block occupies m(m+1)/2 slots in svec order (column-major
// lower triangle, off-diagonal entries scaled by sqrt(2) so that
// svec(U)'svec(V) = tr(UV)).
#pragma once

#include <vector>

#include "qisac/common.hpp"

namespace qisac {

/// Cone block structure of the slack vector s.
struct ConeSpec {
  int nonneg = 0;        ///< leading slots in R+
  std::vector<int> soc;  ///< second-order cone dims (>= 1 each, t first)
  std::vector<int> psd;  ///< PSD matrix side lengths

  int total_dim() const;    ///< slots in s
  int barrier_degree() const;  ///< nu = l + #soc + sum(psd sides)
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

/// Lower-case display name ("optimal", "infeasible", ...).
const char* status_name(SolveStatus s);

struct IpmOptions {
  double feas_tol = 1e-7;  ///< primal/dual residual tolerance
  double gap_tol = 1e-7;   ///< absolute and relative complementarity gap
  int max_iters = 50000;   ///< hard iteration cap
  bool verbose = false;
};

struct IpmResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  VecR x, y, z, s;  ///< de-homogenized (divided by tau) when Optimal
  double objective = 0;  ///< c'x at the returned x
  double primal_residual = 0;
  double dual_residual = 0;
  double gap = 0;
  int iterations = 0;
};

/// Solve the standard-form cone program.  A may have zero rows (no
/// equalities); G must have at least one row.  Dimensions are validated.
IpmResult ipm_solve(const VecR& c, const MatR& a, const VecR& b,
                    const MatR& g, const VecR& h, const ConeSpec& cones,
                    const IpmOptions& opts = {});

/// svec packing helpers shared with the problem builder and tests.
VecR sym_to_svec(const MatR& s);
MatR svec_to_sym(const VecR& v, int side);

}  // namespace qisac
