#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mottrw {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Square sparse matrix assembled from (row, col, value) entries; duplicates add.
class SparseBuilder {
 public:
  explicit SparseBuilder(std::size_t n) : n_(n) {}
  void add(std::size_t r, std::size_t c, double v) {
    rows_.push_back(r);
    cols_.push_back(c);
    vals_.push_back(v);
  }
  std::size_t size() const { return n_; }
  std::size_t entries() const { return vals_.size(); }
  const std::vector<std::size_t>& rows() const { return rows_; }
  const std::vector<std::size_t>& cols() const { return cols_; }
  const std::vector<double>& values() const { return vals_; }

 private:
  std::size_t n_;
  std::vector<std::size_t> rows_, cols_;
  std::vector<double> vals_;
};

struct SolveResult {
  std::vector<double> x;
  double relative_residual = 0.0;
  bool iterative = false;
};

// Symmetric positive definite: Jacobi-scaled LDL^T below direct_limit
// unknowns, diagonally preconditioned conjugate gradients above.
SolveResult solve_spd(const SparseBuilder& a, const std::vector<double>& b,
                      std::size_t direct_limit = 10000, double cg_tol = 1e-13);

// General nonsingular system by sparse LU (natural ordering suits banded input).
SolveResult solve_general(const SparseBuilder& a, const std::vector<double>& b, bool transpose = false);

}  // namespace mottrw
