#include "pulse/interference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pulse/csv.hpp"
#include "pulse/random.hpp"

namespace pulse {

Sampler::Sampler(Kind kind, double a, double b, std::vector<double> values)
    : kind_(kind), a_(a), b_(b), values_(std::move(values)) {}

Sampler Sampler::constant(double value) {
    if (!(value >= 0.0) || !std::isfinite(value))
        throw std::invalid_argument("constant sampler needs a finite value >= 0");
    return Sampler(Kind::Constant, value, 0.0, {});
}

Sampler Sampler::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw std::invalid_argument("exponential sampler needs rate > 0");
    return Sampler(Kind::Exponential, rate, 0.0, {});
}

Sampler Sampler::uniform(double lo, double hi) {
    if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi))
        throw std::invalid_argument("uniform sampler needs 0 <= lo <= hi");
    return Sampler(Kind::Uniform, lo, hi, {});
}

Sampler Sampler::empirical(std::vector<double> values) {
    if (values.empty())
        throw std::invalid_argument("empirical sampler needs at least one value");
    for (double v : values)
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("empirical sampler values must be finite and >= 0");
    return Sampler(Kind::Empirical, 0.0, 0.0, std::move(values));
}

double Sampler::draw(Rng& rng) const {
    switch (kind_) {
        case Kind::Constant: return a_;
        case Kind::Exponential: return rng.exponential(a_);
        case Kind::Uniform: return rng.uniform(a_, b_);
        case Kind::Empirical: return values_[rng.index(values_.size())];
    }
    throw std::logic_error("unreachable");
}

double Sampler::mean() const {
    switch (kind_) {
        case Kind::Constant: return a_;
        case Kind::Exponential: return 1.0 / a_;
        case Kind::Uniform: return 0.5 * (a_ + b_);
        case Kind::Empirical: {
            double s = 0.0;
            for (double v : values_) s += v;
            return s / static_cast<double>(values_.size());
        }
    }
    throw std::logic_error("unreachable");
}

std::string Sampler::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Constant: os << "constant(" << csv::format(a_) << ")"; break;
        case Kind::Exponential: os << "exponential(" << csv::format(a_) << ")"; break;
        case Kind::Uniform:
            os << "uniform(" << csv::format(a_) << "," << csv::format(b_) << ")";
            break;
        case Kind::Empirical: os << "empirical(" << values_.size() << " values)"; break;
    }
    return os.str();
}

Sampler Sampler::parse(const std::string& text) {
    auto open = text.find('(');
    auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw std::invalid_argument("bad sampler spec: " + text);
    std::string name = text.substr(0, open);
    std::string args = text.substr(open + 1, close - open - 1);
    auto fields = csv::split(args);
    auto num = [&](std::size_t i) { return csv::parse_double(fields.at(i), 0); };
    if (name == "constant" && fields.size() == 1) return constant(num(0));
    if (name == "exponential" && fields.size() == 1) return exponential(num(0));
    if (name == "uniform" && fields.size() == 2) return uniform(num(0), num(1));
    if (name == "trace" && fields.size() == 1) {
        PulseTrain t = import_pulse_trace(fields[0]);
        return empirical(t.gaps());
    }
    throw std::invalid_argument("bad sampler spec: " + text);
}

InterferenceModel::InterferenceModel(Periodic m) : variant_(m) {
    if (!(m.period > 0.0) || !(m.pulse_duration >= 0.0) || !(m.period > m.pulse_duration))
        throw std::invalid_argument("periodic model needs period > pulse_duration >= 0");
}

InterferenceModel::InterferenceModel(PoissonImpulse m) : variant_(m) {
    if (!(m.rate > 0.0)) throw std::invalid_argument("poisson impulse rate must be > 0");
}

InterferenceModel::InterferenceModel(RenewalGeneral m) : variant_(std::move(m)) {
    const auto& r = std::get<RenewalGeneral>(variant_);
    if (!std::isfinite(r.gap.mean()) || !std::isfinite(r.duration.mean()))
        throw std::invalid_argument("renewal samplers must have finite means");
    if (!(r.gap.mean() > 0.0))
        throw std::invalid_argument("renewal gap sampler must have positive mean");
}

InterferenceModel::InterferenceModel(TwoStateExp m) : variant_(m) {
    if (!(m.rate_enter_bad > 0.0) || !(m.rate_leave_bad > 0.0))
        throw std::invalid_argument("two-state rates must be > 0");
}

double InterferenceModel::mean_gap() const {
    struct {
        double operator()(const Periodic& m) const { return m.period - m.pulse_duration; }
        double operator()(const PoissonImpulse& m) const { return 1.0 / m.rate; }
        double operator()(const RenewalGeneral& m) const { return m.gap.mean(); }
        double operator()(const TwoStateExp& m) const { return 1.0 / m.rate_enter_bad; }
    } v;
    return std::visit(v, variant_);
}

double InterferenceModel::mean_duration() const {
    struct {
        double operator()(const Periodic& m) const { return m.pulse_duration; }
        double operator()(const PoissonImpulse&) const { return 0.0; }
        double operator()(const RenewalGeneral& m) const { return m.duration.mean(); }
        double operator()(const TwoStateExp& m) const { return 1.0 / m.rate_leave_bad; }
    } v;
    return std::visit(v, variant_);
}

std::string InterferenceModel::describe() const {
    std::ostringstream os;
    struct V {
        std::ostringstream& os;
        void operator()(const Periodic& m) {
            os << "periodic(period=" << csv::format(m.period)
               << ",duration=" << csv::format(m.pulse_duration) << ")";
        }
        void operator()(const PoissonImpulse& m) {
            os << "poisson_impulse(rate=" << csv::format(m.rate) << ")";
        }
        void operator()(const RenewalGeneral& m) {
            os << "renewal(gap=" << m.gap.describe()
               << ",duration=" << m.duration.describe() << ")";
        }
        void operator()(const TwoStateExp& m) {
            os << "two_state(lambda_b=" << csv::format(m.rate_enter_bad)
               << ",lambda_g=" << csv::format(m.rate_leave_bad) << ")";
        }
    } v{os};
    std::visit(v, variant_);
    return os.str();
}

namespace {

PulseTrain generate_renewal(const Sampler& gap, const Sampler& duration, double horizon,
                            std::uint64_t seed) {
    Rng rng(seed, "pulse-train");
    std::vector<Pulse> pulses;
    double t = 0.0;
    std::size_t k = 0;
    while (t < horizon) {
        double s = duration.draw(rng);
        if (!std::isfinite(s) || s < 0.0)
            throw std::runtime_error("duration draw " + std::to_string(k) +
                                     " is invalid: " + std::to_string(s));
        // Clip the final pulse so the train stays within the horizon.
        Pulse p{t, std::min(s, horizon - t)};
        pulses.push_back(p);
        double d = gap.draw(rng);
        if (!std::isfinite(d) || !(d > 0.0))
            throw std::runtime_error("gap draw " + std::to_string(k) +
                                     " is invalid: " + std::to_string(d));
        t += s + d;
        ++k;
    }
    return PulseTrain(std::move(pulses), horizon);
}

}  // namespace

PulseTrain generate_pulse_train(const InterferenceModel& model, double horizon,
                                std::uint64_t seed) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    struct V {
        double horizon;
        std::uint64_t seed;
        PulseTrain operator()(const Periodic& m) const {
            std::vector<Pulse> pulses;
            for (std::size_t k = 0;; ++k) {
                double t = static_cast<double>(k) * m.period;
                if (t >= horizon) break;
                pulses.push_back({t, std::min(m.pulse_duration, horizon - t)});
            }
            return PulseTrain(std::move(pulses), horizon);
        }
        PulseTrain operator()(const PoissonImpulse& m) const {
            return generate_renewal(Sampler::exponential(m.rate), Sampler::constant(0.0),
                                    horizon, seed);
        }
        PulseTrain operator()(const RenewalGeneral& m) const {
            return generate_renewal(m.gap, m.duration, horizon, seed);
        }
        PulseTrain operator()(const TwoStateExp& m) const {
            return generate_renewal(Sampler::exponential(m.rate_enter_bad),
                                    Sampler::exponential(m.rate_leave_bad), horizon, seed);
        }
    } v{horizon, seed};
    return std::visit(v, model.variant());
}

TheoreticalCurve theoretical_loss_curve(const InterferenceModel& model,
                                        const std::vector<double>& grid) {
    for (double t : grid)
        if (!(t >= 0.0)) throw std::invalid_argument("grid values must be >= 0");
    TheoreticalCurve curve;
    curve.grid = grid;
    curve.values.reserve(grid.size());
    if (const auto* p = model.get_if<Periodic>()) {
        for (double t : grid)
            curve.values.push_back(std::min(1.0, (p->pulse_duration + t) / p->period));
    } else if (const auto* q = model.get_if<PoissonImpulse>()) {
        for (double t : grid) curve.values.push_back(-std::expm1(-q->rate * t));
    } else {
        throw std::invalid_argument("no closed form for " + model.describe());
    }
    return curve;
}

}  // namespace pulse
