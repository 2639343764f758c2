#include "mottrw/linalg.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>

namespace mottrw {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

SpMat assemble(const SparseBuilder& a) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(a.entries());
  for (std::size_t k = 0; k < a.entries(); ++k)
    t.emplace_back(static_cast<int>(a.rows()[k]), static_cast<int>(a.cols()[k]), a.values()[k]);
  const int n = static_cast<int>(a.size());
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

double residual(const SpMat& m, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double nb = b.norm();
  const double r = (m * x - b).norm();
  return nb > 0 ? r / nb : r;
}

// b - m x accumulated in extended precision; the basis of refinement steps
// that recover accuracy lost to the wide spread of conductance scales.
Eigen::VectorXd extended_residual(const SpMat& m, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  std::vector<long double> acc(b.data(), b.data() + b.size());
  for (int c = 0; c < m.outerSize(); ++c)
    for (SpMat::InnerIterator it(m, c); it; ++it)
      acc[static_cast<std::size_t>(it.row())] -= static_cast<long double>(it.value()) * x[it.col()];
  Eigen::VectorXd r(b.size());
  for (int i = 0; i < b.size(); ++i) r[i] = static_cast<double>(acc[static_cast<std::size_t>(i)]);
  return r;
}

template <class Solver>
void refine(const Solver& solver, const SpMat& m, const Eigen::VectorXd& b, Eigen::VectorXd& x, int steps = 2) {
  for (int k = 0; k < steps; ++k) x += solver.solve(extended_residual(m, x, b));
}

}  // namespace

SolveResult solve_spd(const SparseBuilder& a, const std::vector<double>& b, std::size_t direct_limit,
                      double cg_tol) {
  const SpMat m = assemble(a);
  const int n = static_cast<int>(a.size());
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
  Eigen::VectorXd scale(n);
  for (int i = 0; i < n; ++i) {
    const double dii = m.coeff(i, i);
    if (!(dii > 0)) throw SolverError("solve_spd: non-positive diagonal");
    scale[i] = 1.0 / std::sqrt(dii);
  }
  const SpMat ms = scale.asDiagonal() * m * scale.asDiagonal();
  const Eigen::VectorXd bs = scale.cwiseProduct(rhs);
  Eigen::VectorXd y;
  SolveResult out;
  if (a.size() <= direct_limit) {
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt(ms);
    if (ldlt.info() != Eigen::Success) throw SolverError("solve_spd: factorization failed");
    y = ldlt.solve(bs);
    refine(ldlt, ms, bs, y);
  } else {
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(cg_tol);
    cg.setMaxIterations(20 * n);
    cg.compute(ms);
    y = cg.solve(bs);
    if (cg.info() != Eigen::Success) throw SolverError("solve_spd: conjugate gradients did not converge");
    out.iterative = true;
  }
  const Eigen::VectorXd x = scale.cwiseProduct(y);
  out.relative_residual = residual(m, x, rhs);
  out.x.assign(x.data(), x.data() + n);
  return out;
}

SolveResult solve_general(const SparseBuilder& a, const std::vector<double>& b, bool transpose) {
  SpMat m = assemble(a);
  if (transpose) {
    SpMat mt = m.transpose();
    m = mt;
    m.makeCompressed();
  }
  const int n = static_cast<int>(a.size());
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
  Eigen::SparseLU<SpMat, Eigen::NaturalOrdering<int>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw SolverError("solve_general: LU factorization failed");
  Eigen::VectorXd x = lu.solve(rhs);
  refine(lu, m, rhs, x);
  SolveResult out;
  out.relative_residual = residual(m, x, rhs);
  out.x.assign(x.data(), x.data() + n);
  return out;
}

}  // namespace mottrw
