#include "pfikit/nnls.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "pfikit/error.hpp"

namespace pfikit {

namespace {

// Least squares restricted to the passive columns; other entries are zero.
Eigen::VectorXd solve_passive(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              const std::vector<bool>& passive) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    if (passive[static_cast<size_t>(j)]) idx.push_back(j);
  Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
  const Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(A.cols());
  for (size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
  return z;
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter, double tol) {
  if (A.rows() != b.size()) fail(ErrorKind::Domain, "nnls: dimension mismatch");
  const Eigen::Index n = A.cols();
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 10);
  if (tol <= 0.0)
    tol = 10.0 * std::numeric_limits<double>::epsilon() * A.norm() * std::max(b.norm(), 1.0) *
          static_cast<double>(std::max(A.rows(), n));

  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<size_t>(n), false);
  Eigen::VectorXd w = A.transpose() * (b - A * res.x);

  while (res.iterations < max_iter) {
    // Most positive gradient among the active (zero) variables.
    Eigen::Index j_max = -1;
    double w_max = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<size_t>(j)] && w(j) > w_max) {
        w_max = w(j);
        j_max = j;
      }
    if (j_max < 0) {
      res.converged = true;
      break;
    }
    passive[static_cast<size_t>(j_max)] = true;
    ++res.iterations;

    for (;;) {
      Eigen::VectorXd z = solve_passive(A, b, passive);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<size_t>(j)] && z(j) <= 0.0) feasible = false;
      if (feasible) {
        res.x = z;
        break;
      }
      // Step back toward x until the first passive variable hits zero.
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<size_t>(j)] && z(j) <= 0.0)
          alpha = std::min(alpha, res.x(j) / (res.x(j) - z(j)));
      res.x += alpha * (z - res.x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<size_t>(j)] && std::abs(res.x(j)) <= tol) {
          passive[static_cast<size_t>(j)] = false;
          res.x(j) = 0.0;
        }
    }
    w = A.transpose() * (b - A * res.x);
  }
  for (Eigen::Index j = 0; j < n; ++j) res.x(j) = std::max(0.0, res.x(j));
  res.residual_norm = (A * res.x - b).norm();
  return res;
}

}  // namespace pfikit
