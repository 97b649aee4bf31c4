#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pulse/csv.hpp"
#include "pulse/interference.hpp"
#include "pulse/linksim.hpp"
#include "pulse/stats.hpp"

using namespace pulse;

namespace {

SimConfig base_config() {
    SimConfig cfg;
    cfg.pair_rate = 30.0;
    cfg.fragment_duration = 0.002;
    cfg.sifs = 10e-6;
    cfg.seed = 5;
    cfg.horizon = 100.0;
    return cfg;
}

double pkt1_loss_rate(const std::vector<TransmissionRecord>& records) {
    std::size_t lost = 0;
    for (const auto& r : records)
        if (r.pkt1 == Outcome::Lost) ++lost;
    return static_cast<double>(lost) / static_cast<double>(records.size());
}

}  // namespace

TEST_CASE("schedule statistics match a Poisson process") {
    const double rate = 30.0;
    const double horizon = 1000.0;
    auto starts = schedule_pairs(rate, horizon, 1);
    double expected = rate * horizon;
    CHECK(std::fabs(static_cast<double>(starts.size()) - expected) <
          3.0 * std::sqrt(expected));
    double mean_gap = starts.back() / static_cast<double>(starts.size());
    CHECK(mean_gap == doctest::Approx(1.0 / rate).epsilon(0.02));

    CHECK(schedule_pairs(rate, 0.0, 1).empty());
    CHECK(schedule_pairs(rate, horizon, 7) == schedule_pairs(rate, horizon, 7));
}

TEST_CASE("carrier sense defers to the end of the enclosing pulse") {
    PulseTrain train({{0.010, 0.009}, {0.030, 0.0}}, 0.050);
    CHECK(carrier_sense_defer(train, 0.015) == doctest::Approx(0.019));
    CHECK(carrier_sense_defer(train, 0.005) == 0.005);
    CHECK(carrier_sense_defer(train, 0.030) == 0.030);  // impulse defers nothing
    CHECK(carrier_sense_defer(train, 0.010) == doctest::Approx(0.019));
    CHECK(carrier_sense_defer(train, 0.019) == doctest::Approx(0.019));
}

TEST_CASE("single-packet loss over periodic impulses matches the closed form") {
    SimConfig cfg = base_config();
    cfg.single_packet = true;
    cfg.fragment_duration = 0.050;
    cfg.pair_rate = 10.0;
    cfg.horizon = 1500.0;
    PulseTrain train =
        generate_pulse_train(InterferenceModel(Periodic{0.100, 0.0}), cfg.horizon, 9);
    auto records = run_link_sim(cfg, train);
    REQUIRE(records.size() > 10000);
    CHECK(pkt1_loss_rate(records) == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("certain collisions censor every second packet") {
    SimConfig cfg = base_config();
    cfg.collision_prob = 1.0;
    PulseTrain train =
        generate_pulse_train(InterferenceModel(PoissonImpulse{50.0}), cfg.horizon, 2);
    auto records = run_link_sim(cfg, train);
    REQUIRE(!records.empty());
    for (const auto& r : records) {
        CHECK(r.pkt1 == Outcome::Lost);
        CHECK(r.pkt2 == Outcome::Censored);
    }
}

TEST_CASE("an empty train with benign two-state erasures loses nothing") {
    SimConfig cfg = base_config();
    cfg.erasure = ErasureModel(TwoStateErasure{0.0, 1.0});
    PulseTrain train({}, cfg.horizon);
    auto records = run_link_sim(cfg, train);
    REQUIRE(!records.empty());
    for (const auto& r : records) {
        CHECK(r.pkt1 == Outcome::Ok);
        CHECK(r.pkt2 == Outcome::Ok);
    }
}

TEST_CASE("horizon mismatch is a domain error") {
    SimConfig cfg = base_config();
    PulseTrain train({}, cfg.horizon / 2.0);
    CHECK_THROWS_AS(run_link_sim(cfg, train), std::invalid_argument);
}

TEST_CASE("ASTA: empirical loss matches the train time average") {
    SimConfig cfg = base_config();
    cfg.single_packet = true;
    cfg.fragment_duration = 0.004;
    cfg.pair_rate = 30.0;
    cfg.horizon = 2000.0;
    cfg.seed = 31;
    PulseTrain train = generate_pulse_train(
        InterferenceModel(Periodic{0.020, 0.009}), cfg.horizon, 13);
    auto records = run_link_sim(cfg, train);
    double empirical = pkt1_loss_rate(records);
    double expected = 1.0 - clear_window_fraction(train, cfg.fragment_duration);
    double n = static_cast<double>(records.size());
    double se = std::sqrt(expected * (1.0 - expected) / n);
    CHECK(std::fabs(empirical - expected) < 3.0 * se);
}

TEST_CASE("censoring bookkeeping is exact") {
    SimConfig cfg = base_config();
    cfg.collision_prob = 0.1;
    PulseTrain train = generate_pulse_train(
        InterferenceModel(PoissonImpulse{100.0}), cfg.horizon, 17);
    auto records = run_link_sim(cfg, train);
    std::size_t pkt1_ok = 0;
    std::size_t pkt2_sent = 0;
    for (const auto& r : records) {
        if (r.pkt1 == Outcome::Ok) ++pkt1_ok;
        if (r.pkt2 == Outcome::Ok || r.pkt2 == Outcome::Lost) ++pkt2_sent;
        CHECK((r.pkt2 == Outcome::Censored) == (r.pkt1 == Outcome::Lost));
        CHECK(r.pkt1_end - r.pkt1_start == doctest::Approx(cfg.fragment_duration));
    }
    CHECK(pkt1_ok == pkt2_sent);
}

TEST_CASE("carrier sense keeps starts out of positive-duration pulses") {
    SimConfig cfg = base_config();
    cfg.carrier_sense = true;
    cfg.fragment_duration = 0.003;
    cfg.horizon = 200.0;
    PulseTrain train = generate_pulse_train(
        InterferenceModel(RenewalGeneral{Sampler::exponential(60.0),
                                         Sampler::constant(0.0045)}),
        cfg.horizon, 23);
    auto records = run_link_sim(cfg, train);
    REQUIRE(!records.empty());
    std::size_t deferred = 0;
    for (const auto& r : records) {
        if (r.deferred) ++deferred;
        // Strictly inside a pulse would mean next_idle_time moves the start.
        CHECK(train.next_idle_time(r.pkt1_start) == r.pkt1_start);
    }
    CHECK(deferred > 0);
}

TEST_CASE("collision losses are independent of overlap losses") {
    SimConfig cfg = base_config();
    cfg.collision_prob = 0.3;
    cfg.horizon = 400.0;
    cfg.fragment_duration = 0.003;
    PulseTrain train = generate_pulse_train(
        InterferenceModel(PoissonImpulse{60.0}), cfg.horizon, 29);
    auto records = run_link_sim(cfg, train);
    // 2x2 contingency: collided x erased.
    double n[2][2] = {{0, 0}, {0, 0}};
    for (const auto& r : records)
        n[r.pkt1_collided ? 1 : 0][r.pkt1_erased ? 1 : 0] += 1.0;
    double total = n[0][0] + n[0][1] + n[1][0] + n[1][1];
    double chi2 = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double row = n[i][0] + n[i][1];
            double col = n[0][j] + n[1][j];
            double expect = row * col / total;
            chi2 += (n[i][j] - expect) * (n[i][j] - expect) / expect;
        }
    CHECK(chi2 < 6.63);  // 1% critical value, 1 dof
}

TEST_CASE("records round-trip through CSV byte-stably") {
    SimConfig cfg = base_config();
    cfg.collision_prob = 0.05;
    cfg.horizon = 20.0;
    PulseTrain train = generate_pulse_train(
        InterferenceModel(PoissonImpulse{80.0}), cfg.horizon, 37);
    auto records = run_link_sim(cfg, train);
    std::ostringstream out;
    export_records(records, out);
    std::istringstream in(out.str());
    auto back = import_records(in);
    REQUIRE(back.size() == records.size());
    std::ostringstream out2;
    export_records(back, out2);
    CHECK(out.str() == out2.str());

    std::istringstream bad("pair_index,t_d_s,pkt1_outcome,pkt2_outcome,deferred\n"
                           "0,0.004,ok,censored,0\n");
    CHECK_THROWS_AS(import_records(bad), ParseError);
}

TEST_CASE("single-packet records round-trip with pkt2 = none") {
    SimConfig cfg = base_config();
    cfg.single_packet = true;
    cfg.horizon = 10.0;
    PulseTrain train = generate_pulse_train(
        InterferenceModel(PoissonImpulse{80.0}), cfg.horizon, 41);
    auto records = run_link_sim(cfg, train);
    std::ostringstream out;
    export_records(records, out);
    CHECK(out.str().find(",none,") != std::string::npos);
    std::istringstream in(out.str());
    auto back = import_records(in);
    CHECK(back.size() == records.size());
}
