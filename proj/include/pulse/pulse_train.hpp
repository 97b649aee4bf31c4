#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace pulse {

// One interference pulse. A zero duration represents an impulse.
struct Pulse {
    double start = 0.0;     // seconds
    double duration = 0.0;  // seconds

    double end() const { return start + duration; }
};

// A realized interference process on [0, horizon]: ordered pulses separated
// by strictly positive gaps. Immutable after construction and safe to share
// across threads.
class PulseTrain {
  public:
    PulseTrain() = default;

    // Validates ordering, non-negative durations, positive gaps and horizon
    // containment; throws std::invalid_argument naming the offending pulse.
    PulseTrain(std::vector<Pulse> pulses, double horizon);

    const std::vector<Pulse>& pulses() const { return pulses_; }
    double horizon() const { return horizon_; }
    bool empty() const { return pulses_.empty(); }
    std::size_t size() const { return pulses_.size(); }

    // True iff the closed window [t_end - t_d, t_end] intersects no pulse
    // interval [start, end] (impulses count when the start point lies in the
    // window). Throws std::domain_error when the window leaves [0, horizon].
    bool window_clear(double t_end, double t_d) const;

    // Fraction of the horizon covered by pulses.
    double occupancy_fraction() const;

    // If t falls inside a positive-duration pulse [start, end), returns the
    // pulse end; otherwise returns t. Throws std::domain_error outside the
    // horizon.
    double next_idle_time(double t) const;

    // Gaps between consecutive pulses (end of k to start of k+1).
    std::vector<double> gaps() const;

    std::vector<double> durations() const;

  private:
    // Index of the first pulse with end() >= t, pulses_.size() if none.
    std::size_t first_pulse_ending_at_or_after(double t) const;

    std::vector<Pulse> pulses_;
    double horizon_ = 0.0;
};

// Sampling indicator of the window [t_end - t_d, t_end]: true when the
// window is clear of interference.
inline bool overlap_indicator(const PulseTrain& train, double t_end, double t_d) {
    return train.window_clear(t_end, t_d);
}

inline double occupancy_fraction(const PulseTrain& train) {
    return train.occupancy_fraction();
}

// CSV trace I/O, schema: start_s,duration_s (header optional, rows ordered
// by start). Parse errors carry the 1-based line number.
PulseTrain import_pulse_trace(std::istream& in);
PulseTrain import_pulse_trace(const std::string& path);
void export_pulse_trace(const PulseTrain& train, std::ostream& out);
void export_pulse_trace(const PulseTrain& train, const std::string& path);

}  // namespace pulse
