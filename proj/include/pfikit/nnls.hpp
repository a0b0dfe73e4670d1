#pragma once

#include <Eigen/Dense>

namespace pfikit {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// min ||A x - b||_2 subject to x >= 0 (Lawson-Hanson active set). Columns
// enter the passive set in a fixed order for a given input, so the result is
// deterministic.
NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter = 0,
                double tol = 0.0);

}  // namespace pfikit
