#pragma once

#include "fracp/error.hpp"
#include "fracp/grid_operator.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace fracp {

/// Mean of u0 over the cell [a, b].
using CellData = std::function<double(double a, double b)>;
/// Mean of f(., t) over the cell [a, b].
using SourceData = std::function<double(double a, double b, double t)>;

/// Right-hand side lambda (u^+)^q.
struct Reaction {
    double lambda = 1.0;
    double q = 1.0;
};

struct ProblemSpec {
    FracParams params;
    GridDomain grid;
    double T_final = 1.0;
    CellData initial;
    /// Empty means f = 0.
    SourceData source;
    std::optional<Reaction> reaction;
    /// Level n of the approximation ladder: data replaced by T_n(data).
    std::optional<double> ladder_level;

    /// Throws InvalidParameter on a malformed problem.
    void validate() const;
};

enum class Scheme { ImplicitEuler, ExplicitEuler };

struct StepperOptions {
    double dt = 1e-3;
    Scheme scheme = Scheme::ImplicitEuler;
    double newton_tol = 1e-12;
    int newton_max_iter = 100;
    /// Length of the first trial Newton step.
    double damping = 1.0;
    /// Unset means 1e-12 times the sup norm of the initial data.
    std::optional<double> regularization_eps;
    int max_halvings = 20;

    void validate() const;
};

struct StepInfo {
    double dt = 0.0;
    int newton_iterations = 0;
    double residual = 0.0;
    int halvings = 0;
};

/// fields[0] is the sampled initial data at time 0; steps[n-1] and forcing[n]
/// describe the step that produced fields[n]. forcing[n] is the explicit
/// right-hand side f + reaction used in that step, forcing[0] is zero.
struct Trajectory {
    GridDomain grid;
    std::vector<Field> fields;
    std::vector<StepInfo> steps;
    std::vector<Eigen::VectorXd> forcing;

    std::vector<double> times() const;
    std::size_t size() const noexcept { return fields.size(); }
};

/// Thrown by evolve when dt halving is exhausted; carries the steps that succeeded.
class EvolutionFailure : public Error {
public:
    EvolutionFailure(const std::string& message, Trajectory partial)
        : Error(ErrorKind::EvolutionFailure, message), partial_(std::move(partial)) {}
    const Trajectory& partial() const noexcept { return partial_; }

private:
    Trajectory partial_;
};

/// Cell averages of u0, truncated at the ladder level when one is set.
Field sample_initial(const ProblemSpec& spec);

/// Cell averages of f(., t), truncated at the ladder level when one is set.
Eigen::VectorXd sample_source(const ProblemSpec& spec, double t);

/// Result of a single time step, including the right-hand side actually used.
struct StepResult {
    Field u;
    Eigen::VectorXd forcing;
    StepInfo info;
};

/// Solves u/dt + L(u) = u_prev/dt + f(t_next) + lambda (u^+)^q, dt = t_next - u_prev.time.
/// The reaction uses u_prev when q <= 1 and u otherwise. Throws StepFailure.
StepResult implicit_step_full(const Field& u_prev, double t_next, const ProblemSpec& spec,
                              const KernelTable& table, const StepperOptions& opts);
Field implicit_step(const Field& u_prev, double t_next, const ProblemSpec& spec,
                    const KernelTable& table, const StepperOptions& opts);

/// u = u_prev + dt (f(t_prev) + lambda (u_prev^+)^q - L(u_prev)).
StepResult explicit_step(const Field& u_prev, double t_next, const ProblemSpec& spec,
                         const KernelTable& table, const StepperOptions& opts);

Trajectory evolve(const ProblemSpec& spec, const StepperOptions& opts);
Trajectory evolve(const ProblemSpec& spec, const KernelTable& table, const StepperOptions& opts);

/// One trajectory per level, levels strictly increasing.
std::vector<Trajectory> approximation_ladder(const ProblemSpec& spec,
                                             const std::vector<double>& levels,
                                             const StepperOptions& opts);

struct StationaryOptions {
    /// Uniform positive seed.
    double seed = 1e-8;
    /// Stop once the sup-norm change per step is below tol.
    double tol = 1e-11;
    int max_steps = 5000;
};

struct StationaryResult {
    Field w;
    /// sup |L(w) - lambda w^q|.
    double residual = 0.0;
    int steps = 0;
};

/// Long-time limit of the reaction problem for 0 < q < p - 1; throws DegenerateStationary
/// when the iteration collapses to zero.
StationaryResult stationary_solve(const ProblemSpec& spec, const StepperOptions& opts,
                                  const StationaryOptions& sopts = {});

/// mu(t) = ((1 - q) t)^{1/(1-q)}, the solution of mu' = mu^q with mu(0) = 0.
double subsolution_mu(double t, double q);

/// V(., dt) = mu(eps dt) w.
Field subsolution_seed(const Field& w, double q, double eps, double dt);

} // namespace fracp
