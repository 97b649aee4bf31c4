#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pulse/pulse_train.hpp"

namespace pulse {

class Rng;

// Sampler palette for renewal gap/duration draws: enough to realize every
// process used in the experiments (constant, exponential, uniform and
// empirical-from-trace).
class Sampler {
  public:
    static Sampler constant(double value);
    static Sampler exponential(double rate);
    static Sampler uniform(double lo, double hi);
    static Sampler empirical(std::vector<double> values);

    double draw(Rng& rng) const;
    double mean() const;

    // Compact textual form, e.g. "exponential(60)"; parse() is its inverse.
    std::string describe() const;
    static Sampler parse(const std::string& text);

  private:
    enum class Kind { Constant, Exponential, Uniform, Empirical };
    Sampler(Kind kind, double a, double b, std::vector<double> values);

    Kind kind_;
    double a_ = 0.0;
    double b_ = 0.0;
    std::vector<double> values_;
};

// Deterministic pulses at 0, T, 2T, ... with a fixed duration per pulse.
struct Periodic {
    double period = 0.0;          // start-to-start, seconds
    double pulse_duration = 0.0;  // seconds, 0 = impulses
};

// Zero-duration pulses with i.i.d. exponential gaps.
struct PoissonImpulse {
    double rate = 0.0;  // 1/seconds
};

// General renewal process: i.i.d. gaps and i.i.d. durations.
struct RenewalGeneral {
    Sampler gap;
    Sampler duration;
};

// Two-state on/off process with exponential dwell times. rate_enter_bad is
// the rate of leaving the good (gap) state, rate_leave_bad the rate of
// leaving the bad (pulse) state.
struct TwoStateExp {
    double rate_enter_bad = 0.0;  // lambda_B, 1/seconds
    double rate_leave_bad = 0.0;  // lambda_G, 1/seconds
};

class InterferenceModel {
  public:
    using Variant = std::variant<Periodic, PoissonImpulse, RenewalGeneral, TwoStateExp>;

    InterferenceModel(Periodic m);         // NOLINT(google-explicit-constructor)
    InterferenceModel(PoissonImpulse m);   // NOLINT
    InterferenceModel(RenewalGeneral m);   // NOLINT
    InterferenceModel(TwoStateExp m);      // NOLINT

    const Variant& variant() const { return variant_; }

    template <typename T>
    const T* get_if() const {
        return std::get_if<T>(&variant_);
    }

    double mean_gap() const;
    double mean_duration() const;
    std::string describe() const;

  private:
    Variant variant_;
};

// Draws a pulse train on [0, horizon]; deterministic in (model, horizon,
// seed). The first pulse starts at time zero and the train alternates
// duration and gap draws from there.
PulseTrain generate_pulse_train(const InterferenceModel& model, double horizon,
                                std::uint64_t seed);

struct TheoreticalCurve {
    std::vector<double> grid;    // window durations T_D, seconds
    std::vector<double> values;  // loss probabilities, non-decreasing in T_D
};

// Closed-form loss-vs-duration curves. Supported: Periodic (any duration;
// p = min((S + T_D)/T, 1), the impulse case reduces to T_D/T) and
// PoissonImpulse (p = 1 - exp(-rate * T_D)). Other variants throw
// std::invalid_argument ("no closed form").
TheoreticalCurve theoretical_loss_curve(const InterferenceModel& model,
                                        const std::vector<double>& grid);

}  // namespace pulse
