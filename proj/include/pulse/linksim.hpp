#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pulse/pulse_train.hpp"

namespace pulse {

enum class Outcome : std::uint8_t {
    Ok,
    Lost,
    Censored,  // second packet withheld because the first was lost
    None,      // no second packet in single-packet mode
};

std::string to_string(Outcome o);
Outcome outcome_from_string(const std::string& s, std::size_t line);

// A packet is erased iff its interval overlaps a pulse.
struct DeterministicOverlap {};

// A packet overlapping a pulse is erased with probability p_bad, otherwise
// with probability p_good.
struct TwoStateErasure {
    double p_good = 0.0;
    double p_bad = 1.0;
};

struct ErasureModel {
    // Defaults to deterministic overlap.
    ErasureModel() = default;
    ErasureModel(DeterministicOverlap) {}  // NOLINT(google-explicit-constructor)
    ErasureModel(TwoStateErasure m);       // NOLINT

    bool deterministic = true;
    TwoStateErasure two_state;
};

struct SimConfig {
    double pair_rate = 30.0;           // lambda_D, nominal bursts per second
    double fragment_duration = 0.0;    // per-packet transmit time (T_D/2), seconds
    double sifs = 10e-6;               // gap between the packets of a pair, seconds
    bool carrier_sense = false;
    bool single_packet = false;        // send one fragment per burst instead of two
    double collision_prob = 0.0;       // p_c, applies to pkt1 only
    ErasureModel erasure;
    std::uint64_t seed = 1;
    double horizon = 0.0;              // seconds of simulated time

    void validate() const;  // throws std::invalid_argument naming the field

    // Sampling-window duration recorded with each burst: the fragment time
    // in single-packet mode, twice that for pairs.
    double window_duration() const {
        return single_packet ? fragment_duration : 2.0 * fragment_duration;
    }
};

struct TransmissionRecord {
    std::int64_t pair_index = 0;
    double t_d = 0.0;        // sampling-window duration, seconds
    double pkt1_start = 0.0;
    double pkt1_end = 0.0;
    Outcome pkt1 = Outcome::Ok;
    Outcome pkt2 = Outcome::None;
    bool deferred = false;   // carrier sense delayed the start
    // Loss decomposition, kept in memory for validation studies; not part of
    // the CSV schema since a real transmitter cannot observe it.
    bool pkt1_collided = false;
    bool pkt1_erased = false;
};

// Nominal burst start times: a Poisson process of rate pair_rate on
// [0, horizon). Deterministic in (pair_rate, horizon, seed).
std::vector<double> schedule_pairs(double pair_rate, double horizon, std::uint64_t seed);

// Earliest time >= t at which the medium is sensed idle (the enclosing
// pulse's end when t falls inside one).
double carrier_sense_defer(const PulseTrain& train, double t);

// Runs the packet-pair measurement process over the given interference
// train. Bursts that would not complete by the train horizon are dropped.
// Throws std::invalid_argument when train.horizon() < config.horizon.
std::vector<TransmissionRecord> run_link_sim(const SimConfig& config,
                                             const PulseTrain& train);

// Records CSV, schema: pair_index,t_d_s,pkt1_outcome,pkt2_outcome,deferred.
// Packet times and loss decomposition are not serialized.
void export_records(const std::vector<TransmissionRecord>& records, std::ostream& out);
void export_records(const std::vector<TransmissionRecord>& records, const std::string& path);
std::vector<TransmissionRecord> import_records(std::istream& in);
std::vector<TransmissionRecord> import_records(const std::string& path);

// Exact time-average of the window-clear indicator over the train: the
// fraction of end times t in [t_d, horizon] whose window [t - t_d, t] meets
// no pulse. This is the ASTA reference value for the observed success rate.
double clear_window_fraction(const PulseTrain& train, double t_d);

}  // namespace pulse
