#include "pulse/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "pulse/csv.hpp"

namespace pulse {

namespace {

// Continued-fraction kernel for the incomplete beta function (modified
// Lentz iteration).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 400;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta parameters must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                   a * std::log(x) + b * std::log1p(-x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double incomplete_beta_inv(double a, double b, double p) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (incomplete_beta(a, b, mid) >= p)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

std::pair<double, double> clopper_pearson(std::int64_t k, std::int64_t n,
                                          double confidence) {
    if (n < 1 || k < 0 || k > n) throw std::invalid_argument("need 0 <= k <= n, n >= 1");
    if (!(confidence > 0.0) || !(confidence < 1.0))
        throw std::invalid_argument("confidence must be in (0, 1)");
    double alpha = 1.0 - confidence;
    double kd = static_cast<double>(k);
    double nd = static_cast<double>(n);
    double lo = (k == 0) ? 0.0 : incomplete_beta_inv(kd, nd - kd + 1.0, 0.5 * alpha);
    double hi = (k == n) ? 1.0 : incomplete_beta_inv(kd + 1.0, nd - kd, 1.0 - 0.5 * alpha);
    return {lo, hi};
}

std::vector<double> LossCurve::grid() const {
    std::vector<double> g;
    g.reserve(points.size());
    for (const auto& p : points) g.push_back(p.t_d);
    return g;
}

std::vector<double> LossCurve::p_hats() const {
    std::vector<double> v;
    v.reserve(points.size());
    for (const auto& p : points) v.push_back(p.p_hat);
    return v;
}

namespace {

LossCurve build_curve(const std::vector<TransmissionRecord>& records, double confidence,
                      bool interference_only) {
    struct Tally {
        std::int64_t n1 = 0, k1 = 0, n2 = 0, k2 = 0;
        bool pair = false;
    };
    std::map<double, Tally> groups;
    for (const auto& r : records) {
        Tally& t = groups[r.t_d];
        bool lost1 = interference_only ? r.pkt1_erased : (r.pkt1 == Outcome::Lost);
        ++t.n1;
        if (lost1) ++t.k1;
        if (r.pkt2 != Outcome::None) t.pair = true;
        if (r.pkt2 == Outcome::Ok || r.pkt2 == Outcome::Lost) {
            ++t.n2;
            if (r.pkt2 == Outcome::Lost) ++t.k2;
        }
    }
    LossCurve curve;
    curve.confidence = confidence;
    for (const auto& [t_d, t] : groups) {
        curve.pair_data = curve.pair_data || t.pair;
        LossPoint pt;
        pt.t_d = t_d;
        pt.n1 = t.n1;
        pt.k1 = t.k1;
        pt.n2 = t.n2;
        pt.k2 = t.k2;
        pt.p1_hat = static_cast<double>(t.k1) / static_cast<double>(t.n1);
        pt.pkt2_defined = t.n2 > 0;
        pt.p2_hat = pt.pkt2_defined
                        ? static_cast<double>(t.k2) / static_cast<double>(t.n2)
                        : 0.0;
        pt.p_hat = combine_pair_losses(pt.p1_hat, pt.p2_hat);
        pt.ci1 = clopper_pearson(t.k1, t.n1, confidence);
        pt.ci2 = pt.pkt2_defined ? clopper_pearson(t.k2, t.n2, confidence)
                                 : std::pair<double, double>{0.0, 1.0};
        if (t.pair && !pt.pkt2_defined)
            curve.warnings.push_back("t_d " + csv::format(t_d) +
                                     ": all first packets lost, p2 undefined");
        curve.points.push_back(pt);
    }
    return curve;
}

}  // namespace

LossCurve estimate_loss_curve(const std::vector<TransmissionRecord>& records,
                              double confidence) {
    return build_curve(records, confidence, false);
}

LossCurve estimate_interference_loss_curve(const std::vector<TransmissionRecord>& records,
                                           double confidence) {
    return build_curve(records, confidence, true);
}

void export_loss_curve(const LossCurve& curve, std::ostream& out) {
    out << "t_d_s,n1,k1,n2,k2,p1,p2,p,ci1_lo,ci1_hi,ci2_lo,ci2_hi\n";
    for (const auto& p : curve.points) {
        out << csv::format(p.t_d) << ',' << p.n1 << ',' << p.k1 << ',' << p.n2 << ','
            << p.k2 << ',' << csv::format(p.p1_hat) << ',' << csv::format(p.p2_hat)
            << ',' << csv::format(p.p_hat) << ',' << csv::format(p.ci1.first) << ','
            << csv::format(p.ci1.second) << ',' << csv::format(p.ci2.first) << ','
            << csv::format(p.ci2.second) << '\n';
    }
}

void export_loss_curve(const LossCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    export_loss_curve(curve, out);
}

LossCurve import_loss_curve(std::istream& in, double confidence) {
    LossCurve curve;
    curve.confidence = confidence;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (!csv::numeric_row(line)) continue;  // header
        }
        auto fields = csv::split(line);
        if (fields.size() != 12)
            throw ParseError(lineno,
                             "expected 12 columns, got " + std::to_string(fields.size()));
        LossPoint p;
        p.t_d = csv::parse_double(fields[0], lineno);
        p.n1 = csv::parse_count(fields[1], lineno);
        p.k1 = csv::parse_count(fields[2], lineno);
        p.n2 = csv::parse_count(fields[3], lineno);
        p.k2 = csv::parse_count(fields[4], lineno);
        p.p1_hat = csv::parse_double(fields[5], lineno);
        p.p2_hat = csv::parse_double(fields[6], lineno);
        p.p_hat = csv::parse_double(fields[7], lineno);
        p.ci1 = {csv::parse_double(fields[8], lineno), csv::parse_double(fields[9], lineno)};
        p.ci2 = {csv::parse_double(fields[10], lineno),
                 csv::parse_double(fields[11], lineno)};
        if (p.k1 > p.n1 || p.k2 > p.n2) throw ParseError(lineno, "loss count exceeds attempts");
        if (p.n1 == 0) {
            curve.warnings.push_back("t_d " + fields[0] + ": no attempts, point excluded");
            continue;
        }
        p.pkt2_defined = p.n2 > 0;
        curve.pair_data = curve.pair_data || p.n2 > 0;
        curve.points.push_back(p);
    }
    std::sort(curve.points.begin(), curve.points.end(),
              [](const LossPoint& a, const LossPoint& b) { return a.t_d < b.t_d; });
    return curve;
}

LossCurve import_loss_curve(const std::string& path, double confidence) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open loss curve: " + path);
    return import_loss_curve(in, confidence);
}

}  // namespace pulse
