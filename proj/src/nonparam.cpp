#include "pulse/nonparam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "pulse/csv.hpp"
#include "pulse/nnls.hpp"

namespace pulse {

void BasisSpec::validate() const {
    if (knots.empty()) throw std::invalid_argument("basis needs at least one knot");
    double prev = 0.0;
    for (double k : knots) {
        if (!(k > prev)) throw std::invalid_argument("knots must be strictly increasing and > 0");
        prev = k;
    }
}

BasisSpec BasisSpec::for_grid(const std::vector<double>& grid) {
    if (grid.size() < 2) throw std::invalid_argument("need at least two grid points");
    std::vector<double> g = grid;
    std::sort(g.begin(), g.end());
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < g.size(); ++i) h = std::min(h, g[i] - g[i - 1]);
    if (!(h > 0.0)) throw std::invalid_argument("grid points must be distinct");

    BasisSpec basis;
    if (g.front() - 0.5 * h > 0.0) basis.knots.push_back(g.front() - 0.5 * h);
    for (double x : g) basis.knots.push_back(x);
    // Tail knots catch probability mass beyond the measured span.
    for (double x = g.back() + h; x <= 2.5 * g.back() + 0.5 * h; x += h)
        basis.knots.push_back(x);
    basis.validate();
    return basis;
}

double CcdfEstimate::ccdf_at(double x) const {
    if (basis.knots.empty() || basis.weights.empty()) return 1.0;
    double tail = 0.0;
    for (std::size_t i = 0; i < basis.knots.size(); ++i)
        if (basis.knots[i] > x) tail += basis.weights[i];
    return tail;
}

namespace {

struct FitInput {
    std::vector<double> t;       // window durations
    std::vector<double> target;  // 1 - p_hat
    std::vector<double> se;      // binomial standard error of p_hat
};

FitInput usable_points(const LossCurve& curve, std::vector<std::string>& warnings) {
    FitInput in;
    for (const auto& p : curve.points) {
        // Fully censored points keep p1 information but cannot enter the
        // combined fit.
        if (curve.pair_data && !p.pkt2_defined) {
            warnings.push_back("t_d " + csv::format(p.t_d) +
                               ": pkt2 fully censored, excluded from fit");
            continue;
        }
        in.t.push_back(p.t_d);
        in.target.push_back(1.0 - p.p_hat);
        double n = static_cast<double>(std::max<std::int64_t>(p.n1, 1));
        in.se.push_back(std::sqrt(std::max(p.p_hat * (1.0 - p.p_hat), 1e-12) / n));
    }
    if (in.t.size() < 3)
        throw std::invalid_argument("ccdf recovery needs at least 3 usable grid points");
    for (std::size_t j = 1; j < in.t.size(); ++j) {
        double drop = in.target[j] - in.target[j - 1];  // p decreasing => target rising
        if (drop > 3.0 * (in.se[j] + in.se[j - 1]))
            warnings.push_back("loss curve decreases beyond noise between t_d " +
                               csv::format(in.t[j - 1]) + " and " + csv::format(in.t[j]));
    }
    return in;
}

// Design matrix for the linearized renewal identity with pulse-duration s:
//   row 0 (anchor, T = 0):   sum_i w~_i (s + x_i)                   = 1
//   row j (grid point T_j):  sum_i w~_i (s 1{x_i > T_j} + (x_i-T_j)^+) = 1 - p_hat_j
// where w~_i = w_i / E[S + Delta]. The anchor is the p(0) = 0 identity, which
// holds for the biased statistic as well.
Eigen::MatrixXd design_matrix(const FitInput& in, const BasisSpec& basis, double s) {
    const auto J = static_cast<Eigen::Index>(in.t.size());
    const auto K = static_cast<Eigen::Index>(basis.knots.size());
    Eigen::MatrixXd A(J + 1, K);
    for (Eigen::Index i = 0; i < K; ++i) A(0, i) = s + basis.knots[i];
    for (Eigen::Index j = 0; j < J; ++j) {
        double t = in.t[j];
        for (Eigen::Index i = 0; i < K; ++i) {
            double x = basis.knots[i];
            A(j + 1, i) = (x > t ? s : 0.0) + std::max(0.0, x - t);
        }
    }
    return A;
}

Eigen::VectorXd target_vector(const FitInput& in) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(in.t.size()) + 1);
    b[0] = 1.0;
    for (std::size_t j = 0; j < in.t.size(); ++j) b[j + 1] = in.target[j];
    return b;
}

CcdfEstimate finalize(const LossCurve& curve, const BasisSpec& basis,
                      const NnlsResult& fit, double s,
                      std::vector<std::string> warnings) {
    CcdfEstimate est;
    est.warnings = std::move(warnings);
    est.basis = basis;
    est.residual_norm = fit.residual_norm;
    double total = fit.x.sum();
    if (!(total > 0.0)) {
        // No losses anywhere: no pulse was ever observed.
        est.degenerate = true;
        est.basis.weights.assign(basis.knots.size(), 0.0);
        est.mean_pulse_duration = 0.0;
        est.mean_gap = std::numeric_limits<double>::infinity();
        est.mean_cycle = std::numeric_limits<double>::infinity();
        est.warnings.push_back("loss curve is identically zero; gap distribution unresolved");
    } else {
        est.basis.weights.resize(basis.knots.size());
        double mean = 0.0;
        for (std::size_t i = 0; i < basis.knots.size(); ++i) {
            est.basis.weights[i] = fit.x[static_cast<Eigen::Index>(i)] / total;
            mean += est.basis.weights[i] * basis.knots[i];
        }
        est.mean_pulse_duration = s;
        est.mean_gap = mean;
        est.mean_cycle = s + mean;
    }
    est.grid = curve.grid();
    est.ccdf.reserve(est.grid.size());
    for (double x : est.grid) est.ccdf.push_back(est.degenerate ? 1.0 : est.ccdf_at(x));
    double rms = est.residual_norm /
                 std::sqrt(static_cast<double>(curve.points.size() + 1));
    if (!est.degenerate && rms > 0.05)
        est.warnings.push_back("fit residual rms " + csv::format(rms) +
                               " above 0.05; model may not explain the data");
    return est;
}

void check_conditioning(const Eigen::MatrixXd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    double smin = sv[sv.size() - 1];
    double smax = sv[0];
    if (!(smin > smax * 1e-13))
        throw std::runtime_error("recovery system is rank deficient (condition estimate " +
                                 csv::format(smax / std::max(smin, 1e-300)) + ")");
}

CcdfEstimate recover_with_duration(const LossCurve& curve, const BasisSpec& basis,
                                   bool fit_duration) {
    basis.validate();
    std::vector<std::string> warnings;
    FitInput in = usable_points(curve, warnings);
    Eigen::VectorXd b = target_vector(in);

    bool any_loss = false;
    for (double target : in.target) any_loss = any_loss || target < 1.0;
    if (!any_loss) {
        NnlsResult none;
        none.converged = true;
        none.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.knots.size()));
        return finalize(curve, basis, none, 0.0, std::move(warnings));
    }

    // The measurement rows of the design matrix must carry independent
    // information; duplicated or degenerate grids are rejected here.
    check_conditioning(design_matrix(in, basis, 0.0).transpose());

    auto objective = [&](double s) { return nnls(design_matrix(in, basis, s), b); };

    double best_s = 0.0;
    NnlsResult best = objective(0.0);
    if (fit_duration) {
        // Any pulse duration above the true one fits the data equally well
        // (extra atoms absorb the surplus step), so the residual profile is
        // a descent to a flat floor. The estimate is the smallest duration
        // reaching that floor, located by bisection on the threshold
        // crossing.
        const double s_max = basis.knots.back();
        const int coarse = 80;
        std::vector<double> residuals(coarse + 1);
        residuals[0] = best.residual_norm;
        double min_residual = best.residual_norm;
        for (int i = 1; i <= coarse; ++i) {
            double s = s_max * static_cast<double>(i) / coarse;
            residuals[i] = objective(s).residual_norm;
            min_residual = std::min(min_residual, residuals[i]);
        }
        const double threshold =
            min_residual + std::max(1e-8 * b.norm(), 0.05 * min_residual);
        int pick = 0;
        while (residuals[pick] > threshold) ++pick;
        best_s = s_max * static_cast<double>(pick) / coarse;
        if (pick > 0) {
            double lo = s_max * static_cast<double>(pick - 1) / coarse;  // above threshold
            double hi = best_s;                                          // at or below
            for (int i = 0; i < 50 && hi - lo > 1e-12; ++i) {
                double mid = 0.5 * (lo + hi);
                if (objective(mid).residual_norm <= threshold)
                    hi = mid;
                else
                    lo = mid;
            }
            best_s = hi;
        }
        best = objective(best_s);
    }
    if (!best.converged)
        throw std::runtime_error("ccdf recovery did not converge (residual " +
                                 csv::format(best.residual_norm) + ")");
    return finalize(curve, basis, best, best_s, std::move(warnings));
}

}  // namespace

CcdfEstimate recover_ccdf_direct(const LossCurve& curve, const BasisSpec& basis) {
    return recover_with_duration(curve, basis, false);
}

CcdfEstimate recover_ccdf_direct(const LossCurve& curve) {
    return recover_ccdf_direct(curve, BasisSpec::for_grid(curve.grid()));
}

CcdfEstimate recover_ccdf_bias_corrected(const LossCurve& curve, const BasisSpec& basis) {
    return recover_with_duration(curve, basis, true);
}

CcdfEstimate recover_ccdf_bias_corrected(const LossCurve& curve) {
    return recover_ccdf_bias_corrected(curve, BasisSpec::for_grid(curve.grid()));
}

double fit_periodic_slope(const LossCurve& curve) {
    double num = 0.0;
    double den = 0.0;
    int used = 0;
    for (const auto& p : curve.points) {
        if (p.p_hat >= 0.9) continue;
        double w = static_cast<double>(std::max<std::int64_t>(p.n1, 1));
        num += w * p.t_d * p.p_hat;
        den += w * p.t_d * p.t_d;
        ++used;
    }
    if (used < 2)
        throw std::invalid_argument(
            "period below smallest T_D: fewer than 2 unsaturated points");
    double slope = num / den;
    if (!(slope > 0.0)) return std::numeric_limits<double>::infinity();
    return 1.0 / slope;
}

double fit_poisson_rate(const LossCurve& curve, std::vector<std::string>* warnings) {
    std::vector<double> t;
    std::vector<double> y;
    for (const auto& p : curve.points) {
        if (p.p_hat >= 1.0) {
            if (warnings)
                warnings->push_back("t_d " + csv::format(p.t_d) +
                                    ": saturated point excluded");
            continue;
        }
        t.push_back(p.t_d);
        y.push_back(-std::log1p(-p.p_hat));
    }
    if (t.size() < 2)
        throw std::invalid_argument("poisson rate fit needs at least 2 points with p < 1");
    double n = static_cast<double>(t.size());
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        st += t[i];
        sy += y[i];
        stt += t[i] * t[i];
        sty += t[i] * y[i];
    }
    double denom = n * stt - st * st;
    if (!(std::fabs(denom) > 0.0))
        throw std::invalid_argument("degenerate grid for poisson rate fit");
    return (n * sty - st * sy) / denom;
}

void export_ccdf(const CcdfEstimate& est, std::ostream& out) {
    out << "x_s,ccdf\n";
    for (std::size_t i = 0; i < est.grid.size(); ++i)
        out << csv::format(est.grid[i]) << ',' << csv::format(est.ccdf[i]) << '\n';
}

void export_ccdf(const CcdfEstimate& est, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    export_ccdf(est, out);
}

}  // namespace pulse
