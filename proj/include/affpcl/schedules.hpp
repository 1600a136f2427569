#pragma once

#include <optional>
#include <string>
#include <vector>

#include "affpcl/numerics.hpp"

namespace affpcl {

// Step sizes. The theory schedules are expressed per unit of strong
// monotonicity: each learner scales by its own lambda (agents by lambda^i,
// CDL by lambda^c, COE by lambda^b) so the effective rates alpha * lambda
// stay synchronized.
struct StepSchedule {
    enum class Kind { fixed, theory_constant, diminishing };

    Kind kind = Kind::fixed;
    double alpha = 0.01;      // fixed
    double horizon = 2.0;     // theory_constant: ln(t) / (lambda t)
    double t0 = 10.0;         // diminishing: 4 / ((tau + t0 + 1) lambda)
    // Unset means "bind from the instance" (see bind_lambda).
    std::optional<double> lambda;
    // Report tail-averaged iterates with weights proportional to tau + t0.
    bool tail_average = false;

    static StepSchedule fixed(double alpha) {
        StepSchedule s;
        s.alpha = alpha;
        return s;
    }
    static StepSchedule theory_constant(double horizon, std::optional<double> lambda = {}) {
        StepSchedule s;
        s.kind = Kind::theory_constant;
        s.horizon = horizon;
        s.lambda = lambda;
        return s;
    }
    static StepSchedule diminishing(double t0, std::optional<double> lambda = {}) {
        StepSchedule s;
        s.kind = Kind::diminishing;
        s.t0 = t0;
        s.lambda = lambda;
        return s;
    }

    bool operator==(const StepSchedule&) const = default;
};

std::string to_string(StepSchedule::Kind k);
StepSchedule::Kind schedule_kind_from_string(const std::string& name);

// Throws InvalidConfig / InvalidHorizon on bad parameters.
void validate(const StepSchedule& s);

// Copy with lambda set, unless the schedule already pins one.
StepSchedule bind_lambda(StepSchedule s, double lambda);

// alpha_tau. Throws InvalidHorizon for theory_constant with horizon < 2 and
// InvalidConfig when a theory schedule has no lambda bound.
double step_size(const StepSchedule& s, double tau);

// Weights (tau + t0) / sum_{tau'} (tau' + t0) for tau = 0..count-1. The last
// weight is 1 minus the others, so the weights sum to exactly 1.
std::vector<double> tail_weights(std::size_t count, double t0);

// Convex combination of the trajectory with tail_weights. Throws
// EmptyTrajectory for an empty input.
Vector tail_average(const std::vector<Vector>& trajectory, double t0);

// Incremental form of tail_average, used while a run is in progress.
class TailAverager {
public:
    explicit TailAverager(double t0) : t0_(t0) {}
    const Vector& push(const Vector& x);
    const Vector& value() const { return avg_; }

private:
    double t0_;
    double total_ = 0.0;
    std::size_t count_ = 0;
    Vector avg_;
};

}  // namespace affpcl
