#include "pulse/nnls.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace pulse {

namespace {

// Least-squares solve restricted to the passive column set.
Eigen::VectorXd solve_passive(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              const std::vector<int>& passive) {
    Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(passive.size()));
    for (std::size_t j = 0; j < passive.size(); ++j) Ap.col(j) = A.col(passive[j]);
    return Ap.colPivHouseholderQr().solve(b);
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double kkt_tol,
                int max_iterations) {
    const int n = static_cast<int>(A.cols());
    if (max_iterations <= 0) max_iterations = 10 * n + 50;

    NnlsResult result;
    result.x = Eigen::VectorXd::Zero(n);

    std::vector<bool> in_passive(n, false);
    std::vector<int> passive;

    Eigen::VectorXd grad = A.transpose() * b;  // gradient of -0.5||Ax-b||^2 at x = 0
    double scale = grad.cwiseAbs().maxCoeff();
    if (scale <= 0.0) scale = 1.0;
    const double tol = kkt_tol * scale;

    int iter = 0;
    while (iter < max_iterations) {
        // KKT check: every free column has non-positive gradient.
        Eigen::VectorXd w = A.transpose() * (b - A * result.x);
        int enter = -1;
        double best = tol;
        for (int j = 0; j < n; ++j) {
            if (!in_passive[j] && w[j] > best) {
                best = w[j];
                enter = j;  // strict > keeps the lowest index on ties
            }
        }
        if (enter < 0) {
            result.converged = true;
            break;
        }
        in_passive[enter] = true;
        passive.push_back(enter);

        while (true) {
            ++iter;
            Eigen::VectorXd z = solve_passive(A, b, passive);
            bool feasible = true;
            for (Eigen::Index j = 0; j < z.size(); ++j)
                if (z[j] <= 0.0) feasible = false;
            if (feasible) {
                result.x.setZero();
                for (std::size_t j = 0; j < passive.size(); ++j)
                    result.x[passive[j]] = z[j];
                break;
            }
            // Step toward z until the first passive variable hits zero.
            double alpha = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < passive.size(); ++j) {
                if (z[j] <= 0.0) {
                    double xj = result.x[passive[j]];
                    double a = xj / (xj - z[j]);
                    if (a < alpha) alpha = a;
                }
            }
            for (std::size_t j = 0; j < passive.size(); ++j) {
                int col = passive[j];
                result.x[col] += alpha * (z[j] - result.x[col]);
            }
            // Drop variables that reached zero (lowest index first).
            double xmax = 0.0;
            for (int col : passive) xmax = std::max(xmax, result.x[col]);
            const double drop_eps = 1e-12 * std::max(1.0, xmax);
            std::vector<int> kept;
            for (std::size_t j = 0; j < passive.size(); ++j) {
                int col = passive[j];
                if (z[j] <= 0.0 && result.x[col] <= drop_eps) {
                    in_passive[col] = false;
                    result.x[col] = 0.0;
                } else {
                    kept.push_back(col);
                }
            }
            passive = kept;
            if (passive.empty()) break;
            if (iter >= max_iterations) break;
        }
        ++iter;
    }

    result.iterations = iter;
    result.residual_norm = (A * result.x - b).norm();
    return result;
}

}  // namespace pulse
