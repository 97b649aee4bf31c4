#include "pulse/gilbert_elliott.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "pulse/csv.hpp"
#include "pulse/nelder_mead.hpp"
#include "pulse/random.hpp"

namespace pulse {

void GEParams::validate() const {
    if (!(lambda_b > 0.0) || !(lambda_g > 0.0))
        throw std::invalid_argument("rates must be > 0");
    if (!(p_g >= 0.0) || !(p_b >= p_g) || !(p_b <= 1.0))
        throw std::invalid_argument("need 0 <= p_g <= p_b <= 1");
    if (!(alpha >= 0.0) || !(alpha <= 1.0))
        throw std::invalid_argument("alpha must be in [0, 1]");
}

double prob_enter_bad(double t_d, double lambda_b) {
    if (!(t_d >= 0.0)) throw std::invalid_argument("t_d must be >= 0");
    return -std::expm1(-lambda_b * t_d);
}

double stationary_bad_probability(double lambda_b, double lambda_g) {
    return lambda_b / (lambda_b + lambda_g);
}

std::array<double, 3> stationary_distribution(double p_cs, double p_i) {
    double norm = 2.0 + p_i * (1.0 - p_cs);
    return {1.0 / norm, (1.0 - p_cs) / norm, ((1.0 - p_cs) * p_i + p_cs) / norm};
}

double loss_first(double p_i, double p_cs, double p_g, double p_b) {
    return (1.0 - p_i) * (1.0 - p_cs) * p_g + (p_i * (1.0 - p_cs) + p_cs) * p_b;
}

double loss_second(double p_i, double bad_at_start, double p_g, double p_b) {
    return (1.0 - p_i) * bad_at_start * p_g + (1.0 - (1.0 - p_i) * bad_at_start) * p_b;
}

double loss_first(double t_d, const GEParams& params) {
    return loss_first(prob_enter_bad(t_d, params.lambda_b), params.p_cs(), params.p_g,
                      params.p_b);
}

double loss_second(double t_d, const GEParams& params) {
    double ratio = params.lambda_b / (params.lambda_b + params.lambda_g);
    return loss_second(prob_enter_bad(t_d, params.lambda_b), ratio, params.p_g, params.p_b);
}

std::vector<double> model_curve(const std::vector<double>& grid, const GEParams& params) {
    if (grid.empty()) throw std::invalid_argument("model_curve needs a non-empty grid");
    std::vector<double> out;
    out.reserve(2 * grid.size());
    for (double t : grid) {
        out.push_back(loss_first(t, params));
        out.push_back(loss_second(t, params));
    }
    return out;
}

namespace {

double packet_duration(const LossCurve& curve, const LossPoint& p) {
    return curve.pair_data ? 0.5 * p.t_d : p.t_d;
}

struct Objective {
    const LossCurve* curve;
    double time_scale;  // median per-packet duration, for O(1) parameters
    bool weight_by_variance;
    bool pin_alpha = false;
    bool pin_p_g = false;
    double pinned_alpha = 0.0;
    double pinned_p_g = 0.0;

    GEParams unpack(const std::vector<double>& x) const {
        GEParams p;
        p.lambda_b = x[0] / time_scale;
        p.lambda_g = x[1] / time_scale;
        p.p_g = pin_p_g ? pinned_p_g : x[2];
        p.p_b = x[3];
        p.alpha = pin_alpha ? pinned_alpha : x[4];
        return p;
    }

    std::vector<double> pack(const GEParams& p) const {
        return {p.lambda_b * time_scale, p.lambda_g * time_scale, p.p_g, p.p_b, p.alpha};
    }

    double operator()(const std::vector<double>& x) const {
        GEParams p = unpack(x);
        // The p_g <= p_b ordering is kept soft so the simplex can move
        // through it; violations are penalized instead of clamped.
        double penalty = 0.0;
        if (p.p_g > p.p_b) {
            penalty = 1e3 * (p.p_g - p.p_b) * (p.p_g - p.p_b);
            std::swap(p.p_g, p.p_b);
        }
        double sse = 0.0;
        for (const auto& pt : curve->points) {
            double d = packet_duration(*curve, pt);
            double w1 = 1.0;
            double w2 = 1.0;
            if (weight_by_variance) {
                double h1 = std::max(0.5 * (pt.ci1.second - pt.ci1.first), 1e-6);
                double h2 = std::max(0.5 * (pt.ci2.second - pt.ci2.first), 1e-6);
                w1 = 1.0 / (h1 * h1);
                w2 = 1.0 / (h2 * h2);
            }
            double r1 = pt.p1_hat - loss_first(d, p);
            sse += w1 * r1 * r1;
            if (pt.pkt2_defined) {
                double r2 = pt.p2_hat - loss_second(d, p);
                sse += w2 * r2 * r2;
            }
        }
        return sse + penalty;
    }
};

// Condition number of the finite-difference curvature of the objective;
// near-singular curvature means some parameter direction (typically
// alpha vs p_g) is not identified by the data.
bool curvature_near_singular(const Objective& obj, const std::vector<double>& x) {
    const std::size_t n = x.size();
    Eigen::MatrixXd h(n, n);
    const double f0 = obj(x);
    std::vector<double> steps(n);
    for (std::size_t i = 0; i < n; ++i) steps[i] = 1e-4 * std::max(1.0, std::fabs(x[i]));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            std::vector<double> xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += steps[i];
            xpp[j] += steps[j];
            xpm[i] += steps[i];
            xpm[j] -= steps[j];
            xmp[i] -= steps[i];
            xmp[j] += steps[j];
            xmm[i] -= steps[i];
            xmm[j] -= steps[j];
            double v = (obj(xpp) - obj(xpm) - obj(xmp) + obj(xmm)) /
                       (4.0 * steps[i] * steps[j]);
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    (void)f0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h);
    const auto& sv = svd.singularValues();
    double smax = sv[0];
    double smin = sv[sv.size() - 1];
    return !(smin > 1e-8 * std::max(smax, 1e-300));
}

}  // namespace

ParamFitResult fit_ml(const LossCurve& curve, const FitOptions& options) {
    if (curve.points.size() < 4)
        throw std::invalid_argument("fit needs at least 4 grid points");
    options.init.validate();

    std::vector<double> durations;
    for (const auto& p : curve.points) durations.push_back(packet_duration(curve, p));
    std::sort(durations.begin(), durations.end());
    double t_med = durations[durations.size() / 2];
    if (!(t_med > 0.0)) throw std::invalid_argument("grid durations must be > 0");

    Objective obj{&curve,          t_med,
                  options.weight_by_variance, options.pin_alpha,
                  options.pin_p_g, options.init.alpha,
                  options.init.p_g};

    std::vector<double> x0 = obj.pack(options.init);
    std::vector<double> lo = obj.pack(options.lower);
    std::vector<double> hi = obj.pack(options.upper);
    if (options.pin_alpha) lo[4] = hi[4] = x0[4];
    if (options.pin_p_g) lo[2] = hi[2] = x0[2];

    SimplexOptions so;
    so.max_iterations = options.max_iterations;
    so.tolerance = options.tolerance;
    SimplexResult sr = nelder_mead(obj, x0, lo, hi, so);

    ParamFitResult result;
    result.params = obj.unpack(sr.x);
    if (result.params.p_g > result.params.p_b)
        std::swap(result.params.p_g, result.params.p_b);
    result.residual = sr.value;
    result.iterations = sr.iterations;
    result.converged = sr.converged;
    result.identifiability_warning = curvature_near_singular(obj, sr.x);
    return result;
}

void write_fit_report(const ParamFitResult& fit, std::ostream& out) {
    const GEParams& p = fit.params;
    out << "lambda_b_hz=" << csv::format(p.lambda_b) << '\n'
        << "lambda_g_hz=" << csv::format(p.lambda_g) << '\n'
        << "p_g=" << csv::format(p.p_g) << '\n'
        << "p_b=" << csv::format(p.p_b) << '\n'
        << "alpha=" << csv::format(p.alpha) << '\n'
        << "p_cs=" << csv::format(p.p_cs()) << '\n'
        << "residual=" << csv::format(fit.residual) << '\n'
        << "iterations=" << fit.iterations << '\n'
        << "converged=" << (fit.converged ? 1 : 0) << '\n'
        << "identifiability_warning=" << (fit.identifiability_warning ? 1 : 0) << '\n';
}

void write_fit_curve(const LossCurve& curve, const GEParams& params, std::ostream& out) {
    out << "t_d_s,p1_hat,p1_model,p2_hat,p2_model\n";
    for (const auto& pt : curve.points) {
        double d = curve.pair_data ? 0.5 * pt.t_d : pt.t_d;
        out << csv::format(pt.t_d) << ',' << csv::format(pt.p1_hat) << ','
            << csv::format(loss_first(d, params)) << ',' << csv::format(pt.p2_hat) << ','
            << csv::format(loss_second(d, params)) << '\n';
    }
}

namespace {

// Model-implied combined loss curve on the measurement grid, packaged as a
// LossCurve so it can feed the same ccdf recovery as the empirical data.
LossCurve model_loss_curve(const LossCurve& shape, const GEParams& params) {
    LossCurve out;
    out.confidence = shape.confidence;
    out.pair_data = shape.pair_data;
    for (const auto& pt : shape.points) {
        double d = shape.pair_data ? 0.5 * pt.t_d : pt.t_d;
        LossPoint mp;
        mp.t_d = pt.t_d;
        mp.n1 = pt.n1;
        mp.n2 = pt.n2;
        mp.p1_hat = loss_first(d, params);
        mp.pkt2_defined = shape.pair_data;
        mp.p2_hat = mp.pkt2_defined ? loss_second(d, params) : 0.0;
        mp.p_hat = combine_pair_losses(mp.p1_hat, mp.p2_hat);
        mp.k1 = static_cast<std::int64_t>(std::lround(mp.p1_hat * static_cast<double>(mp.n1)));
        mp.k2 = static_cast<std::int64_t>(std::lround(mp.p2_hat * static_cast<double>(mp.n2)));
        out.points.push_back(mp);
    }
    return out;
}

double sup_norm_cdf_distance(const CcdfEstimate& a, const CcdfEstimate& b,
                             const std::vector<double>& xs) {
    double best = 0.0;
    for (double x : xs) best = std::max(best, std::fabs(a.cdf_at(x) - b.cdf_at(x)));
    return best;
}

}  // namespace

std::vector<ConvergencePoint> convergence_study(
    const std::vector<TransmissionRecord>& records,
    const std::vector<std::size_t>& sample_sizes, std::size_t replicates,
    std::uint64_t seed, const FitOptions& fit_options) {
    if (records.empty()) throw std::invalid_argument("convergence study needs records");
    if (replicates < 1) throw std::invalid_argument("need at least one replicate");

    LossCurve full_curve = estimate_loss_curve(records, 0.95);
    const std::vector<double> grid = full_curve.grid();
    BasisSpec basis = BasisSpec::for_grid(grid);

    ParamFitResult full_fit = fit_ml(full_curve, fit_options);
    CcdfEstimate param_full =
        recover_ccdf_direct(model_loss_curve(full_curve, full_fit.params), basis);
    CcdfEstimate nonparam_full = recover_ccdf_direct(full_curve, basis);

    Rng rng(seed, "convergence-subsample");
    std::vector<ConvergencePoint> out;
    for (std::size_t n : sample_sizes) {
        if (n > records.size())
            throw std::invalid_argument("sample size exceeds the trace length");
        ConvergencePoint point;
        point.sample_size = n;
        point.replicates = replicates;
        double param_sum = 0.0;
        double nonparam_sum = 0.0;
        for (std::size_t rep = 0; rep < replicates; ++rep) {
            LossCurve sub;
            bool ok = false;
            for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
                // Partial Fisher-Yates draw of n distinct indices.
                std::vector<std::size_t> idx(records.size());
                std::iota(idx.begin(), idx.end(), 0);
                std::vector<TransmissionRecord> sample;
                sample.reserve(n);
                for (std::size_t i = 0; i < n; ++i) {
                    std::size_t j = i + rng.index(records.size() - i);
                    std::swap(idx[i], idx[j]);
                    sample.push_back(records[idx[i]]);
                }
                sub = estimate_loss_curve(sample, 0.95);
                ok = sub.grid() == grid;
                if (ok && sub.pair_data)
                    for (const auto& pt : sub.points) ok = ok && pt.pkt2_defined;
            }
            if (!ok)
                throw std::runtime_error("subsample kept missing grid cells after retries");
            ParamFitResult sub_fit = fit_ml(sub, fit_options);
            CcdfEstimate param_sub =
                recover_ccdf_direct(model_loss_curve(sub, sub_fit.params), basis);
            CcdfEstimate nonparam_sub = recover_ccdf_direct(sub, basis);
            param_sum += sup_norm_cdf_distance(param_full, param_sub, grid);
            nonparam_sum += sup_norm_cdf_distance(nonparam_full, nonparam_sub, grid);
        }
        point.parametric_distance = param_sum / static_cast<double>(replicates);
        point.nonparametric_distance = nonparam_sum / static_cast<double>(replicates);
        out.push_back(point);
    }
    return out;
}

}  // namespace pulse
