#include "affpcl/schedules.hpp"

#include <cmath>

#include "affpcl/errors.hpp"

namespace affpcl {

std::string to_string(StepSchedule::Kind k) {
    switch (k) {
        case StepSchedule::Kind::fixed: return "fixed";
        case StepSchedule::Kind::theory_constant: return "theory_constant";
        case StepSchedule::Kind::diminishing: return "diminishing";
    }
    return "unknown";
}

StepSchedule::Kind schedule_kind_from_string(const std::string& name) {
    if (name == "fixed") return StepSchedule::Kind::fixed;
    if (name == "theory_constant") return StepSchedule::Kind::theory_constant;
    if (name == "diminishing") return StepSchedule::Kind::diminishing;
    throw InvalidConfig("unknown schedule kind '" + name + "'");
}

void validate(const StepSchedule& s) {
    switch (s.kind) {
        case StepSchedule::Kind::fixed:
            if (!(s.alpha > 0.0)) throw InvalidConfig("fixed step size must be > 0");
            break;
        case StepSchedule::Kind::theory_constant:
            if (!(s.horizon >= 2.0)) throw InvalidHorizon("theory_constant needs horizon t >= 2");
            break;
        case StepSchedule::Kind::diminishing:
            if (!(s.t0 >= 1.0)) throw InvalidConfig("diminishing schedule needs t0 >= 1");
            break;
    }
    if (s.lambda && !(*s.lambda > 0.0)) throw InvalidConfig("schedule lambda must be > 0");
    if (s.tail_average && !(s.t0 >= 1.0)) throw InvalidConfig("tail averaging needs t0 >= 1");
}

StepSchedule bind_lambda(StepSchedule s, double lambda) {
    if (!s.lambda) s.lambda = lambda;
    return s;
}

double step_size(const StepSchedule& s, double tau) {
    switch (s.kind) {
        case StepSchedule::Kind::fixed:
            return s.alpha;
        case StepSchedule::Kind::theory_constant:
            if (!(s.horizon >= 2.0)) throw InvalidHorizon("theory_constant needs horizon t >= 2");
            if (!s.lambda) throw InvalidConfig("theory_constant schedule has no lambda bound");
            return std::log(s.horizon) / (*s.lambda * s.horizon);
        case StepSchedule::Kind::diminishing:
            if (!s.lambda) throw InvalidConfig("diminishing schedule has no lambda bound");
            return 4.0 / ((tau + s.t0 + 1.0) * *s.lambda);
    }
    return s.alpha;
}

std::vector<double> tail_weights(std::size_t count, double t0) {
    if (count == 0) throw EmptyTrajectory("tail average of an empty trajectory");
    double total = 0.0;
    for (std::size_t tau = 0; tau < count; ++tau) total += static_cast<double>(tau) + t0;
    std::vector<double> w(count);
    double partial = 0.0;
    for (std::size_t tau = 0; tau + 1 < count; ++tau) {
        w[tau] = (static_cast<double>(tau) + t0) / total;
        partial += w[tau];
    }
    w[count - 1] = 1.0 - partial;
    return w;
}

Vector tail_average(const std::vector<Vector>& trajectory, double t0) {
    const auto w = tail_weights(trajectory.size(), t0);
    Vector out(trajectory.front().size());
    for (std::size_t tau = 0; tau < trajectory.size(); ++tau) out.axpy(w[tau], trajectory[tau]);
    return out;
}

const Vector& TailAverager::push(const Vector& x) {
    const double w = static_cast<double>(count_) + t0_;
    const double next_total = total_ + w;
    if (count_ == 0) {
        avg_ = x;
    } else {
        avg_ *= total_ / next_total;
        avg_.axpy(w / next_total, x);
    }
    total_ = next_total;
    ++count_;
    return avg_;
}

}  // namespace affpcl
