#include "pulse/linksim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "pulse/csv.hpp"
#include "pulse/random.hpp"

namespace pulse {

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Ok: return "ok";
        case Outcome::Lost: return "lost";
        case Outcome::Censored: return "censored";
        case Outcome::None: return "none";
    }
    throw std::logic_error("unreachable");
}

Outcome outcome_from_string(const std::string& s, std::size_t line) {
    if (s == "ok") return Outcome::Ok;
    if (s == "lost") return Outcome::Lost;
    if (s == "censored") return Outcome::Censored;
    if (s == "none") return Outcome::None;
    throw ParseError(line, "unknown outcome '" + s + "'");
}

ErasureModel::ErasureModel(TwoStateErasure m) : deterministic(false), two_state(m) {
    if (!(m.p_good >= 0.0) || !(m.p_bad >= m.p_good) || !(m.p_bad <= 1.0))
        throw std::invalid_argument("erasure model needs 0 <= p_good <= p_bad <= 1");
}

void SimConfig::validate() const {
    if (!(pair_rate > 0.0)) throw std::invalid_argument("pair_rate must be > 0");
    if (!(fragment_duration > 0.0))
        throw std::invalid_argument("fragment_duration must be > 0");
    if (!(sifs >= 0.0)) throw std::invalid_argument("sifs must be >= 0");
    if (!(collision_prob >= 0.0) || !(collision_prob <= 1.0))
        throw std::invalid_argument("collision_prob must be in [0, 1]");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
}

std::vector<double> schedule_pairs(double pair_rate, double horizon, std::uint64_t seed) {
    if (!(pair_rate > 0.0)) throw std::invalid_argument("pair_rate must be > 0");
    std::vector<double> starts;
    if (!(horizon > 0.0)) return starts;
    Rng rng(seed, "schedule");
    for (double t = rng.exponential(pair_rate); t < horizon; t += rng.exponential(pair_rate))
        starts.push_back(t);
    return starts;
}

double carrier_sense_defer(const PulseTrain& train, double t) {
    return train.next_idle_time(t);
}

std::vector<TransmissionRecord> run_link_sim(const SimConfig& config,
                                             const PulseTrain& train) {
    config.validate();
    if (train.horizon() < config.horizon)
        throw std::invalid_argument("train horizon shorter than simulation horizon");

    const double frag = config.fragment_duration;
    const double cycle =
        config.single_packet ? frag : 2.0 * frag + config.sifs;

    Rng collision_rng(config.seed, "collision");
    Rng erasure_rng(config.seed, "erasure");

    auto erased = [&](bool overlap, double u) {
        if (config.erasure.deterministic) return overlap;
        const auto& ts = config.erasure.two_state;
        return u < (overlap ? ts.p_bad : ts.p_good);
    };

    std::vector<TransmissionRecord> records;
    double busy_until = 0.0;  // end of the previous burst cycle
    std::int64_t index = 0;
    for (double nominal : schedule_pairs(config.pair_rate, config.horizon, config.seed)) {
        // Bursts never overlap: a nominal start inside the previous cycle is
        // pushed to the cycle end.
        double queued = std::max(nominal, busy_until);
        // Draw per-burst randomness unconditionally so simulations that
        // differ only in collision_prob share erasure and schedule draws.
        double u_c = collision_rng.uniform();
        double u_e1 = erasure_rng.uniform();
        double u_e2 = erasure_rng.uniform();

        if (queued > train.horizon()) break;
        double start = config.carrier_sense ? carrier_sense_defer(train, queued) : queued;
        if (start + cycle > train.horizon()) break;

        TransmissionRecord rec;
        rec.pair_index = index++;
        rec.t_d = config.window_duration();
        rec.pkt1_start = start;
        rec.pkt1_end = start + frag;
        rec.deferred = start > queued;
        busy_until = start + cycle;

        bool overlap1 = !train.window_clear(rec.pkt1_end, frag);
        rec.pkt1_collided = u_c < config.collision_prob;
        rec.pkt1_erased = erased(overlap1, u_e1);
        rec.pkt1 = (rec.pkt1_collided || rec.pkt1_erased) ? Outcome::Lost : Outcome::Ok;

        if (config.single_packet) {
            rec.pkt2 = Outcome::None;
        } else if (rec.pkt1 == Outcome::Lost) {
            // Virtual transmission: the schedule still pauses for the full
            // cycle (busy_until above), preserving Lack of Anticipation.
            rec.pkt2 = Outcome::Censored;
        } else {
            double p2_end = rec.pkt1_end + config.sifs + frag;
            bool overlap2 = !train.window_clear(p2_end, frag);
            rec.pkt2 = erased(overlap2, u_e2) ? Outcome::Lost : Outcome::Ok;
        }
        records.push_back(rec);
    }
    return records;
}

void export_records(const std::vector<TransmissionRecord>& records, std::ostream& out) {
    out << "pair_index,t_d_s,pkt1_outcome,pkt2_outcome,deferred\n";
    for (const auto& r : records) {
        out << r.pair_index << ',' << csv::format(r.t_d) << ',' << to_string(r.pkt1)
            << ',' << to_string(r.pkt2) << ',' << (r.deferred ? '1' : '0') << '\n';
    }
}

void export_records(const std::vector<TransmissionRecord>& records,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    export_records(records, out);
}

std::vector<TransmissionRecord> import_records(std::istream& in) {
    std::vector<TransmissionRecord> records;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = csv::split(line);
        if (first) {
            first = false;
            if (!csv::numeric_row(fields[0])) continue;  // header
        }
        if (fields.size() != 5)
            throw ParseError(lineno, "expected 5 columns, got " +
                                         std::to_string(fields.size()));
        TransmissionRecord r;
        r.pair_index = csv::parse_count(fields[0], lineno);
        r.t_d = csv::parse_double(fields[1], lineno);
        r.pkt1 = outcome_from_string(fields[2], lineno);
        r.pkt2 = outcome_from_string(fields[3], lineno);
        if (fields[4] == "0")
            r.deferred = false;
        else if (fields[4] == "1")
            r.deferred = true;
        else
            throw ParseError(lineno, "deferred must be 0 or 1");
        if (r.pkt1 == Outcome::Censored || r.pkt1 == Outcome::None)
            throw ParseError(lineno, "pkt1 outcome must be ok or lost");
        if ((r.pkt2 == Outcome::Censored) != (r.pkt1 == Outcome::Lost) &&
            r.pkt2 != Outcome::None)
            throw ParseError(lineno, "pkt2 is censored iff pkt1 is lost");
        records.push_back(r);
    }
    return records;
}

std::vector<TransmissionRecord> import_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open records: " + path);
    return import_records(in);
}

double clear_window_fraction(const PulseTrain& train, double t_d) {
    double horizon = train.horizon();
    if (!(horizon > t_d)) throw std::domain_error("horizon must exceed the window");
    const auto& pulses = train.pulses();
    // Window end times t in [t_d, horizon] are clear on [prev_end + t_d,
    // next_start); accumulate those spans exactly.
    double clear = 0.0;
    double prev_end = 0.0;
    bool have_prev = false;
    for (const Pulse& p : pulses) {
        double lo = have_prev ? prev_end + t_d : t_d;
        clear += std::max(0.0, p.start - lo);
        prev_end = p.end();
        have_prev = true;
    }
    double lo = have_prev ? prev_end + t_d : t_d;
    clear += std::max(0.0, horizon - lo);
    return clear / (horizon - t_d);
}

}  // namespace pulse
