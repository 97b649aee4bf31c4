#include "pulse/pulse_train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pulse/csv.hpp"

namespace pulse {

PulseTrain::PulseTrain(std::vector<Pulse> pulses, double horizon)
    : pulses_(std::move(pulses)), horizon_(horizon) {
    if (horizon_ < 0.0 || !std::isfinite(horizon_))
        throw std::invalid_argument("pulse train horizon must be finite and >= 0");
    for (std::size_t k = 0; k < pulses_.size(); ++k) {
        const Pulse& p = pulses_[k];
        if (!std::isfinite(p.start) || !std::isfinite(p.duration))
            throw std::invalid_argument("pulse " + std::to_string(k) + " is not finite");
        if (p.duration < 0.0)
            throw std::invalid_argument("pulse " + std::to_string(k) +
                                        " has negative duration");
        if (p.start < 0.0 || p.end() > horizon_)
            throw std::invalid_argument("pulse " + std::to_string(k) +
                                        " lies outside [0, horizon]");
        if (k > 0 && !(p.start > pulses_[k - 1].end()))
            throw std::invalid_argument("pulse " + std::to_string(k) +
                                        " does not start after the previous pulse ends");
    }
}

std::size_t PulseTrain::first_pulse_ending_at_or_after(double t) const {
    auto it = std::lower_bound(pulses_.begin(), pulses_.end(), t,
                               [](const Pulse& p, double v) { return p.end() < v; });
    return static_cast<std::size_t>(it - pulses_.begin());
}

bool PulseTrain::window_clear(double t_end, double t_d) const {
    if (t_d < 0.0) throw std::domain_error("window duration must be >= 0");
    double t_begin = t_end - t_d;
    if (t_begin < 0.0 || t_end > horizon_)
        throw std::domain_error("window [" + std::to_string(t_begin) + ", " +
                                std::to_string(t_end) + "] leaves [0, horizon]");
    // First pulse that could reach the window; overlap is closed-interval on
    // both sides so zero-duration impulses on the boundary still count.
    std::size_t k = first_pulse_ending_at_or_after(t_begin);
    return k == pulses_.size() || pulses_[k].start > t_end;
}

double PulseTrain::occupancy_fraction() const {
    if (horizon_ <= 0.0) return 0.0;
    double busy = 0.0;
    for (const Pulse& p : pulses_) busy += p.duration;
    return busy / horizon_;
}

double PulseTrain::next_idle_time(double t) const {
    if (t < 0.0 || t > horizon_) throw std::domain_error("time outside [0, horizon]");
    std::size_t k = first_pulse_ending_at_or_after(t);
    if (k < pulses_.size() && pulses_[k].start <= t && t < pulses_[k].end())
        return pulses_[k].end();
    return t;
}

std::vector<double> PulseTrain::gaps() const {
    std::vector<double> out;
    for (std::size_t k = 1; k < pulses_.size(); ++k)
        out.push_back(pulses_[k].start - pulses_[k - 1].end());
    return out;
}

std::vector<double> PulseTrain::durations() const {
    std::vector<double> out;
    out.reserve(pulses_.size());
    for (const Pulse& p : pulses_) out.push_back(p.duration);
    return out;
}

PulseTrain import_pulse_trace(std::istream& in) {
    std::vector<Pulse> pulses;
    std::string line;
    std::size_t lineno = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first_content_line && !csv::numeric_row(line)) {
            first_content_line = false;  // header row
            continue;
        }
        first_content_line = false;
        auto fields = csv::split(line);
        if (fields.size() != 2)
            throw ParseError(lineno, "expected 2 columns (start_s,duration_s), got " +
                                         std::to_string(fields.size()));
        Pulse p;
        p.start = csv::parse_double(fields[0], lineno);
        p.duration = csv::parse_double(fields[1], lineno);
        if (!std::isfinite(p.start) || !std::isfinite(p.duration) || p.duration < 0.0)
            throw ParseError(lineno, "invalid pulse values");
        if (!pulses.empty() && !(p.start > pulses.back().end()))
            throw ParseError(lineno, "row out of order or overlapping previous pulse");
        pulses.push_back(p);
    }
    double horizon = pulses.empty() ? 0.0 : pulses.back().end();
    return PulseTrain(std::move(pulses), horizon);
}

PulseTrain import_pulse_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pulse trace: " + path);
    return import_pulse_trace(in);
}

void export_pulse_trace(const PulseTrain& train, std::ostream& out) {
    out << "start_s,duration_s\n";
    for (const Pulse& p : train.pulses())
        out << csv::format(p.start) << ',' << csv::format(p.duration) << '\n';
}

void export_pulse_trace(const PulseTrain& train, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    export_pulse_trace(train, out);
}

}  // namespace pulse
