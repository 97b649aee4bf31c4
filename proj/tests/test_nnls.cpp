#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "pulse/nnls.hpp"

using namespace pulse;

namespace {

// Oracle: enumerate every support set, solve the unconstrained least squares
// on it, keep feasible solutions, and return the best. Exponential in the
// column count, so only usable for small systems.
Eigen::VectorXd brute_force_nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const int n = static_cast<int>(A.cols());
    Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
    double best_norm = (A * best - b).squaredNorm();
    for (int mask = 1; mask < (1 << n); ++mask) {
        std::vector<int> cols;
        for (int j = 0; j < n; ++j)
            if (mask & (1 << j)) cols.push_back(j);
        Eigen::MatrixXd As(A.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) As.col(j) = A.col(cols[j]);
        Eigen::VectorXd z = As.colPivHouseholderQr().solve(b);
        bool feasible = true;
        for (Eigen::Index j = 0; j < z.size(); ++j)
            if (z[j] < -1e-12) feasible = false;
        if (!feasible) continue;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (std::size_t j = 0; j < cols.size(); ++j) x[cols[j]] = std::max(0.0, z[j]);
        double norm = (A * x - b).squaredNorm();
        if (norm < best_norm - 1e-12) {
            best_norm = norm;
            best = x;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("nnls reproduces unconstrained solutions when they are feasible") {
    Eigen::MatrixXd A(3, 2);
    A << 1, 0, 0, 1, 1, 1;
    Eigen::VectorXd x_true(2);
    x_true << 2.0, 3.0;
    Eigen::VectorXd b = A * x_true;
    NnlsResult r = nnls(A, b);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(2.0));
    CHECK(r.x[1] == doctest::Approx(3.0));
    CHECK(r.residual_norm == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("nnls clamps negative directions") {
    Eigen::MatrixXd A(2, 2);
    A << 1, 0, 0, 1;
    Eigen::VectorXd b(2);
    b << -1.0, 2.0;
    NnlsResult r = nnls(A, b);
    CHECK(r.x[0] == 0.0);
    CHECK(r.x[1] == doctest::Approx(2.0));
}

TEST_CASE("nnls matches brute-force enumeration on random small systems") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        int rows = 3 + static_cast<int>(rng() % 4);
        int cols = 2 + static_cast<int>(rng() % 4);
        Eigen::MatrixXd A(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) A(i, j) = normal(rng);
        Eigen::VectorXd b(rows);
        for (int i = 0; i < rows; ++i) b[i] = normal(rng);

        NnlsResult r = nnls(A, b);
        Eigen::VectorXd oracle = brute_force_nnls(A, b);
        double ours = (A * r.x - b).squaredNorm();
        double best = (A * oracle - b).squaredNorm();
        CHECK(r.converged);
        CHECK(ours <= best + 1e-8 * (1.0 + best));
        for (Eigen::Index j = 0; j < r.x.size(); ++j) CHECK(r.x[j] >= 0.0);
    }
}

TEST_CASE("nnls satisfies the KKT conditions") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd A(12, 8);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 8; ++j) A(i, j) = normal(rng);
    Eigen::VectorXd b(12);
    for (int i = 0; i < 12; ++i) b[i] = normal(rng);
    NnlsResult r = nnls(A, b);
    Eigen::VectorXd grad = A.transpose() * (b - A * r.x);
    double scale = (A.transpose() * b).cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
        if (r.x[j] > 0.0)
            CHECK(std::abs(grad[j]) <= 1e-7 * scale);  // active: stationary
        else
            CHECK(grad[j] <= 1e-7 * scale);  // inactive: no descent direction
    }
}
