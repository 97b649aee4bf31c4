#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pulse/csv.hpp"
#include "pulse/stats.hpp"

using namespace pulse;

namespace {

// Independent oracle: Clopper-Pearson bounds straight from the binomial
// tail definition, by bisection on p.
double binom_tail_ge(std::int64_t k, std::int64_t n, double p) {
    // P[X >= k]
    double sum = 0.0;
    for (std::int64_t j = k; j <= n; ++j) {
        double lc = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
        sum += std::exp(lc + j * std::log(p) + (n - j) * std::log1p(-p));
    }
    return std::min(sum, 1.0);
}

double binom_tail_le(std::int64_t k, std::int64_t n, double p) {
    double sum = 0.0;
    for (std::int64_t j = 0; j <= k; ++j) {
        double lc = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
        sum += std::exp(lc + j * std::log(p) + (n - j) * std::log1p(-p));
    }
    return std::min(sum, 1.0);
}

std::pair<double, double> oracle_clopper_pearson(std::int64_t k, std::int64_t n,
                                                 double confidence) {
    double alpha = 1.0 - confidence;
    double lo = 0.0;
    if (k > 0) {
        double a = 1e-12, b = 1.0 - 1e-12;
        for (int i = 0; i < 100; ++i) {
            double mid = 0.5 * (a + b);
            if (binom_tail_ge(k, n, mid) < 0.5 * alpha)
                a = mid;
            else
                b = mid;
        }
        lo = 0.5 * (a + b);
    }
    double hi = 1.0;
    if (k < n) {
        double a = 1e-12, b = 1.0 - 1e-12;
        for (int i = 0; i < 100; ++i) {
            double mid = 0.5 * (a + b);
            if (binom_tail_le(k, n, mid) > 0.5 * alpha)
                a = mid;
            else
                b = mid;
        }
        hi = 0.5 * (a + b);
    }
    return {lo, hi};
}

std::vector<TransmissionRecord> synthetic_pairs(double t_d, int n, int k1, int k2) {
    std::vector<TransmissionRecord> records;
    for (int i = 0; i < n; ++i) {
        TransmissionRecord r;
        r.pair_index = i;
        r.t_d = t_d;
        if (i < k1) {
            r.pkt1 = Outcome::Lost;
            r.pkt2 = Outcome::Censored;
        } else {
            r.pkt1 = Outcome::Ok;
            r.pkt2 = (i - k1 < k2) ? Outcome::Lost : Outcome::Ok;
        }
        records.push_back(r);
    }
    return records;
}

}  // namespace

TEST_CASE("clopper-pearson endpoint cases match the closed forms") {
    auto [lo0, hi0] = clopper_pearson(0, 10, 0.95);
    CHECK(lo0 == 0.0);
    CHECK(hi0 == doctest::Approx(0.30850).epsilon(1e-3));  // 1 - 0.025^(1/10)

    auto [lo1, hi1] = clopper_pearson(10, 10, 0.95);
    CHECK(hi1 == 1.0);
    CHECK(lo1 == doctest::Approx(1.0 - 0.30850).epsilon(1e-3));

    auto [lo5, hi5] = clopper_pearson(5, 10, 0.95);
    CHECK(lo5 < 0.5);
    CHECK(hi5 > 0.5);
    CHECK(lo5 == doctest::Approx(1.0 - hi5).epsilon(1e-9));  // symmetric about 0.5
}

TEST_CASE("clopper-pearson agrees with the binomial-tail oracle") {
    struct Case {
        std::int64_t k, n;
    };
    for (const auto& c : {Case{0, 10}, Case{3, 10}, Case{5, 10}, Case{17, 83},
                          Case{99, 100}, Case{1, 1000}, Case{950, 1000}}) {
        auto ours = clopper_pearson(c.k, c.n, 0.95);
        auto oracle = oracle_clopper_pearson(c.k, c.n, 0.95);
        CHECK(ours.first == doctest::Approx(oracle.first).epsilon(1e-6));
        CHECK(ours.second == doctest::Approx(oracle.second).epsilon(1e-6));
    }
    CHECK_THROWS_AS(clopper_pearson(5, 4, 0.95), std::invalid_argument);
    CHECK_THROWS_AS(clopper_pearson(0, 0, 0.95), std::invalid_argument);
}

TEST_CASE("clopper-pearson coverage is at least nominal") {
    std::mt19937_64 rng(17);
    const double p = 0.3;
    const int n = 40;
    const int reps = 2000;
    int covered = 0;
    std::binomial_distribution<int> binom(n, p);
    for (int r = 0; r < reps; ++r) {
        int k = binom(rng);
        auto [lo, hi] = clopper_pearson(k, n, 0.9);
        if (lo <= p && p <= hi) ++covered;
    }
    double coverage = static_cast<double>(covered) / reps;
    CHECK(coverage >= 0.9);
}

TEST_CASE("combine_pair_losses") {
    CHECK(combine_pair_losses(0.1, 0.2) == doctest::Approx(0.28));
    CHECK(combine_pair_losses(0.0, 0.0) == 0.0);
    CHECK(combine_pair_losses(1.0, 0.7) == doctest::Approx(1.0));
}

TEST_CASE("loss curve aggregation matches the counting rules") {
    auto records = synthetic_pairs(0.004, 100, 10, 9);
    LossCurve curve = estimate_loss_curve(records, 0.95);
    REQUIRE(curve.points.size() == 1);
    const LossPoint& p = curve.points[0];
    CHECK(p.n1 == 100);
    CHECK(p.k1 == 10);
    CHECK(p.n2 == 90);
    CHECK(p.k2 == 9);
    CHECK(p.p1_hat == doctest::Approx(0.1));
    CHECK(p.p2_hat == doctest::Approx(0.1));
    CHECK(p.p_hat == doctest::Approx(0.19));
    CHECK(p.ci1.first <= p.p1_hat);
    CHECK(p.ci1.second >= p.p1_hat);
    CHECK(curve.pair_data);
}

TEST_CASE("fully censored groups are flagged") {
    auto records = synthetic_pairs(0.004, 50, 50, 0);
    LossCurve curve = estimate_loss_curve(records, 0.95);
    REQUIRE(curve.points.size() == 1);
    CHECK(curve.points[0].p1_hat == 1.0);
    CHECK_FALSE(curve.points[0].pkt2_defined);
    CHECK(curve.points[0].p_hat == 1.0);
    CHECK(curve.warnings.size() == 1);
}

TEST_CASE("zero-loss groups get a positive upper confidence bound") {
    auto records = synthetic_pairs(0.004, 200, 0, 0);
    LossCurve curve = estimate_loss_curve(records, 0.95);
    const LossPoint& p = curve.points[0];
    CHECK(p.p_hat == 0.0);
    CHECK(p.ci1.first == 0.0);
    CHECK(p.ci1.second > 0.0);
    CHECK(p.ci1.second < 0.05);
}

TEST_CASE("loss curve CSV round-trips byte-stably and flags bad rows") {
    std::vector<TransmissionRecord> records;
    auto a = synthetic_pairs(0.002, 100, 7, 3);
    auto b = synthetic_pairs(0.004, 120, 30, 11);
    records.insert(records.end(), a.begin(), a.end());
    records.insert(records.end(), b.begin(), b.end());
    LossCurve curve = estimate_loss_curve(records, 0.95);

    std::ostringstream out;
    export_loss_curve(curve, out);
    std::istringstream in(out.str());
    LossCurve back = import_loss_curve(in);
    REQUIRE(back.points.size() == curve.points.size());
    std::ostringstream out2;
    export_loss_curve(back, out2);
    CHECK(out.str() == out2.str());

    std::istringstream bad("t_d_s,n1,k1,n2,k2,p1,p2,p,ci1_lo,ci1_hi,ci2_lo,ci2_hi\n"
                           "0.004,10,12,0,0,1,0,1,0,1,0,1\n");
    CHECK_THROWS_AS(import_loss_curve(bad), ParseError);

    std::istringstream zero("t_d_s,n1,k1,n2,k2,p1,p2,p,ci1_lo,ci1_hi,ci2_lo,ci2_hi\n"
                            "0.004,0,0,0,0,0,0,0,0,1,0,1\n");
    LossCurve excluded = import_loss_curve(zero);
    CHECK(excluded.points.empty());
    CHECK(excluded.warnings.size() == 1);
}
