#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pulse/linksim.hpp"

namespace pulse {

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Inverse of I_x(a, b) in x for p in [0, 1].
double incomplete_beta_inv(double a, double b, double p);

// Exact binomial confidence interval (beta-quantile form). lo = 0 when
// k = 0 and hi = 1 when k = n.
std::pair<double, double> clopper_pearson(std::int64_t k, std::int64_t n,
                                          double confidence);

// 1 - (1 - p1)(1 - p2): loss over the whole burst window from the two
// per-packet rates.
inline double combine_pair_losses(double p1, double p2) {
    return 1.0 - (1.0 - p1) * (1.0 - p2);
}

struct LossPoint {
    double t_d = 0.0;      // sampling-window duration, seconds
    std::int64_t n1 = 0;   // first-packet attempts
    std::int64_t k1 = 0;   // first-packet losses
    std::int64_t n2 = 0;   // second-packet attempts (censored excluded)
    std::int64_t k2 = 0;   // second-packet losses
    double p1_hat = 0.0;
    double p2_hat = 0.0;
    double p_hat = 0.0;    // combined, 1 - (1-p1)(1-p2)
    std::pair<double, double> ci1{0.0, 1.0};
    std::pair<double, double> ci2{0.0, 1.0};
    bool pkt2_defined = false;  // false for single-packet data or full censoring
};

struct LossCurve {
    std::vector<LossPoint> points;       // ordered by t_d
    double confidence = 0.95;
    bool pair_data = false;              // true when built from packet pairs
    std::vector<std::string> warnings;

    std::vector<double> grid() const;
    std::vector<double> p_hats() const;
};

// Aggregates records by window duration into per-point counts, rates and
// Clopper-Pearson intervals. Groups with no first-packet attempts are
// excluded with a warning naming the t_d.
LossCurve estimate_loss_curve(const std::vector<TransmissionRecord>& records,
                              double confidence);

// Same aggregation, but counting only interference erasures on pkt1 (the
// simulator-side ground truth used to validate collision separation).
LossCurve estimate_interference_loss_curve(const std::vector<TransmissionRecord>& records,
                                           double confidence);

// Loss-curve CSV, schema:
// t_d_s,n1,k1,n2,k2,p1,p2,p,ci1_lo,ci1_hi,ci2_lo,ci2_hi
void export_loss_curve(const LossCurve& curve, std::ostream& out);
void export_loss_curve(const LossCurve& curve, const std::string& path);
LossCurve import_loss_curve(std::istream& in, double confidence = 0.95);
LossCurve import_loss_curve(const std::string& path, double confidence = 0.95);

}  // namespace pulse
