#pragma once

#include <Eigen/Dense>

namespace pulse {

struct NnlsResult {
    Eigen::VectorXd x;
    double residual_norm = 0.0;  // ||A x - b||
    int iterations = 0;
    bool converged = false;
};

// Lawson-Hanson active-set solver for min ||A x - b|| subject to x >= 0.
// Ties in the entering/leaving variable choice break toward the lowest
// index, so the result is deterministic. kkt_tol is relative to the largest
// gradient entry at x = 0.
NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                double kkt_tol = 1e-9, int max_iterations = 0);

}  // namespace pulse
