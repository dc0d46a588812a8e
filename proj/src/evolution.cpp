#include "fracp/evolution.hpp"

#include "fracp/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fracp {

namespace {

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

bool reaction_implicit(const ProblemSpec& spec) {
    return spec.reaction && spec.reaction->q > 1.0;
}

Eigen::VectorXd reaction_term(const Eigen::VectorXd& u, const Reaction& r) {
    Eigen::VectorXd out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        out[i] = u[i] > 0.0 ? r.lambda * std::pow(u[i], r.q) : 0.0;
    }
    return out;
}

// Lu and optionally the Jacobian of the regularized operator.
void assemble(const Eigen::VectorXd& u, const KernelTable& table, double eps,
              Eigen::VectorXd& Lu, Eigen::MatrixXd* J) {
    const int M = table.grid.size();
    const double p = table.params.p();
    Lu.setZero(M);
    if (J) J->setZero(M, M);
    for (int i = 0; i < M; ++i) {
        for (int j = i + 1; j < M; ++j) {
            const double d = u[i] - u[j];
            const double w = table.coupling(i, j);
            const double f = flux(d, p, eps) * w;
            Lu[i] += f;
            Lu[j] -= f;
            if (J) {
                const double g = flux_derivative(d, p, eps) * w;
                (*J)(i, j) = -g;
                (*J)(j, i) = -g;
                (*J)(i, i) += g;
                (*J)(j, j) += g;
            }
        }
        Lu[i] += flux(u[i], p, eps) * table.tail[i];
        if (J) (*J)(i, i) += flux_derivative(u[i], p, eps) * table.tail[i];
    }
}

double resolve_eps(const StepperOptions& opts, double scale) {
    if (opts.regularization_eps) return *opts.regularization_eps;
    return 1e-12 * scale;
}

[[noreturn]] void step_failed(double t_next, double residual, int iters) {
    std::ostringstream os;
    os << "Newton did not converge for the step ending at t=" << t_next << " after " << iters
       << " iterations, residual " << residual;
    fail(ErrorKind::StepFailure, os.str());
}

double truncate_level(double v, const std::optional<double>& level) {
    if (!level) return v;
    return truncate(v, TruncationLevel(*level));
}

} // namespace

void ProblemSpec::validate() const {
    require(std::isfinite(T_final) && T_final > 0.0, ErrorKind::InvalidParameter,
            "T_final must be positive");
    require(static_cast<bool>(initial), ErrorKind::InvalidParameter, "initial data missing");
    if (reaction) {
        require(reaction->lambda >= 0.0 && std::isfinite(reaction->lambda),
                ErrorKind::InvalidParameter, "reaction lambda must be >= 0");
        require(reaction->q > 0.0 && std::isfinite(reaction->q), ErrorKind::InvalidParameter,
                "reaction exponent must be > 0");
        require(!source, ErrorKind::InvalidParameter,
                "a reaction problem carries no additional source");
    }
    if (ladder_level) {
        require(*ladder_level > 0.0, ErrorKind::InvalidParameter, "ladder level must be > 0");
    }
}

void StepperOptions::validate() const {
    require(std::isfinite(dt) && dt > 0.0, ErrorKind::InvalidParameter, "dt must be positive");
    require(newton_tol > 0.0, ErrorKind::InvalidParameter, "newton_tol must be positive");
    require(newton_max_iter >= 1, ErrorKind::InvalidParameter, "newton_max_iter must be >= 1");
    require(damping > 0.0 && damping <= 1.0, ErrorKind::InvalidParameter,
            "damping must lie in (0, 1]");
    require(!regularization_eps || *regularization_eps >= 0.0, ErrorKind::InvalidParameter,
            "regularization_eps must be >= 0");
    require(max_halvings >= 0, ErrorKind::InvalidParameter, "max_halvings must be >= 0");
}

std::vector<double> Trajectory::times() const {
    std::vector<double> t;
    t.reserve(fields.size());
    for (const auto& f : fields) t.push_back(f.time);
    return t;
}

Field sample_initial(const ProblemSpec& spec) {
    const GridDomain& g = spec.grid;
    Field u{Eigen::VectorXd(g.size()), 0.0};
    for (int i = 0; i < g.size(); ++i) {
        const double v = spec.initial(g.cell_left(i), g.cell_right(i));
        require(std::isfinite(v), ErrorKind::InvalidParameter, "initial data is not finite");
        u.values[i] = truncate_level(v, spec.ladder_level);
    }
    return u;
}

Eigen::VectorXd sample_source(const ProblemSpec& spec, double t) {
    const GridDomain& g = spec.grid;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(g.size());
    if (!spec.source) return f;
    for (int i = 0; i < g.size(); ++i) {
        const double v = spec.source(g.cell_left(i), g.cell_right(i), t);
        require(std::isfinite(v), ErrorKind::InvalidParameter, "source data is not finite");
        f[i] = truncate_level(v, spec.ladder_level);
    }
    return f;
}

StepResult implicit_step_full(const Field& u_prev, double t_next, const ProblemSpec& spec,
                              const KernelTable& table, const StepperOptions& opts) {
    opts.validate();
    check_shape(u_prev.values, table.grid);
    const double dt = t_next - u_prev.time;
    require(dt > 0.0, ErrorKind::InvalidParameter, "t_next must exceed the current time");

    const Eigen::VectorXd& up = u_prev.values;
    const int M = table.grid.size();
    const bool implicit_reaction = reaction_implicit(spec);

    Eigen::VectorXd forcing = sample_source(spec, t_next);
    if (spec.reaction && !implicit_reaction) forcing += reaction_term(up, *spec.reaction);
    const Eigen::VectorXd c = up / dt + forcing;
    const double eps = resolve_eps(opts, std::max(sup_norm(up), dt * sup_norm(forcing)));

    Eigen::VectorXd Lu(M);
    auto residual = [&](const Eigen::VectorXd& u) {
        assemble(u, table, eps, Lu, nullptr);
        Eigen::VectorXd R = u / dt + Lu - c;
        if (implicit_reaction) R -= reaction_term(u, *spec.reaction);
        return R;
    };

    const double tol_abs = opts.newton_tol * (1.0 + sup_norm(up) / dt);
    Eigen::VectorXd u = up;
    Eigen::VectorXd R = residual(u);
    Eigen::MatrixXd J(M, M);

    for (int it = 0; it <= opts.newton_max_iter; ++it) {
        const double rn = sup_norm(R);
        if (!std::isfinite(rn)) step_failed(t_next, rn, it);
        if (rn <= tol_abs) {
            Eigen::VectorXd used = forcing;
            if (implicit_reaction) used += reaction_term(u, *spec.reaction);
            return StepResult{Field{u, t_next}, used, StepInfo{dt, it, rn, 0}};
        }
        if (it == opts.newton_max_iter) step_failed(t_next, rn, it);

        assemble(u, table, eps, Lu, &J);
        J.diagonal().array() += 1.0 / dt;
        if (implicit_reaction) {
            const Reaction& r = *spec.reaction;
            for (int i = 0; i < M; ++i) {
                if (u[i] > 0.0) J(i, i) -= r.lambda * r.q * std::pow(u[i], r.q - 1.0);
            }
        }
        Eigen::VectorXd d;
        Eigen::LLT<Eigen::MatrixXd> llt(J);
        if (llt.info() == Eigen::Success) {
            d = -llt.solve(R);
        } else {
            d = -J.partialPivLu().solve(R);
        }

        // Line search on g(a) = R(u + a d).d, the slope of the step potential
        // along d; g(0) < 0 for a descent direction.
        const double g0 = R.dot(d);
        double a = opts.damping;
        Eigen::VectorXd Ra = residual(u + a * d);
        double ga = Ra.dot(d);
        if (!(g0 < 0.0) || !std::isfinite(ga)) {
            // Not a descent direction (roundoff level); take the plain step.
        } else if (!(ga <= 0.0 || std::abs(ga) <= 0.1 * std::abs(g0))) {
            double lo = 0.0;
            double hi = a;
            double glo = g0;
            double ghi = ga;
            for (int k = 0; k < 40; ++k) {
                double trial = hi - ghi * (hi - lo) / (ghi - glo);
                const double margin = 0.05 * (hi - lo);
                trial = std::clamp(trial, lo + margin, hi - margin);
                a = trial;
                Ra = residual(u + a * d);
                ga = Ra.dot(d);
                if (std::abs(ga) <= 0.1 * std::abs(g0)) break;
                if (ga < 0.0) {
                    lo = a;
                    glo = ga;
                } else {
                    hi = a;
                    ghi = ga;
                }
            }
        }
        u += a * d;
        R = Ra;
    }
    step_failed(t_next, sup_norm(R), opts.newton_max_iter);
}

Field implicit_step(const Field& u_prev, double t_next, const ProblemSpec& spec,
                    const KernelTable& table, const StepperOptions& opts) {
    return implicit_step_full(u_prev, t_next, spec, table, opts).u;
}

StepResult explicit_step(const Field& u_prev, double t_next, const ProblemSpec& spec,
                         const KernelTable& table, const StepperOptions& opts) {
    opts.validate();
    check_shape(u_prev.values, table.grid);
    const double dt = t_next - u_prev.time;
    require(dt > 0.0, ErrorKind::InvalidParameter, "t_next must exceed the current time");
    Eigen::VectorXd forcing = sample_source(spec, u_prev.time);
    if (spec.reaction) forcing += reaction_term(u_prev.values, *spec.reaction);
    const Eigen::VectorXd Lu = apply_operator(u_prev.values, table);
    Eigen::VectorXd u = u_prev.values + dt * (forcing - Lu);
    const double rn = sup_norm(u);
    if (!std::isfinite(rn)) step_failed(t_next, rn, 0);
    return StepResult{Field{u, t_next}, forcing, StepInfo{dt, 0, 0.0, 0}};
}

Trajectory evolve(const ProblemSpec& spec, const StepperOptions& opts) {
    spec.validate();
    return evolve(spec, build_kernel_table(spec.grid, spec.params), opts);
}

Trajectory evolve(const ProblemSpec& spec, const KernelTable& table, const StepperOptions& opts) {
    spec.validate();
    opts.validate();
    require(table.grid == spec.grid, ErrorKind::ShapeMismatch, "kernel table built for another grid");

    Trajectory traj{spec.grid, {}, {}, {}};
    traj.fields.push_back(sample_initial(spec));
    traj.forcing.push_back(Eigen::VectorXd::Zero(spec.grid.size()));

    StepperOptions run = opts;
    if (!run.regularization_eps) {
        double scale = sup_norm(traj.fields[0].values);
        if (scale == 0.0) scale = spec.T_final * sup_norm(sample_source(spec, 0.0));
        run.regularization_eps = 1e-12 * scale;
    }

    auto take = [&](const Field& u, double t_next) {
        return run.scheme == Scheme::ImplicitEuler ? implicit_step_full(u, t_next, spec, table, run)
                                                   : explicit_step(u, t_next, spec, table, run);
    };

    // Advances from the last recorded field to t_b, halving on failure.
    std::function<void(double, int)> advance = [&](double t_b, int depth) {
        const Field& u = traj.fields.back();
        try {
            StepResult r = take(u, t_b);
            r.info.halvings = depth;
            traj.fields.push_back(std::move(r.u));
            traj.forcing.push_back(std::move(r.forcing));
            traj.steps.push_back(r.info);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::StepFailure) throw;
            if (depth >= run.max_halvings) {
                throw EvolutionFailure(std::string("dt halving exhausted: ") + e.what(), traj);
            }
            const double t_a = u.time;
            advance(0.5 * (t_a + t_b), depth + 1);
            advance(t_b, depth + 1);
        }
    };

    const auto n = static_cast<long>(std::ceil(spec.T_final / run.dt - 1e-9));
    for (long k = 1; k <= n; ++k) {
        const double t_next = k == n ? spec.T_final : static_cast<double>(k) * run.dt;
        advance(t_next, 0);
    }
    return traj;
}

std::vector<Trajectory> approximation_ladder(const ProblemSpec& spec,
                                             const std::vector<double>& levels,
                                             const StepperOptions& opts) {
    require(!levels.empty(), ErrorKind::InvalidParameter, "ladder needs at least one level");
    for (std::size_t i = 1; i < levels.size(); ++i) {
        require(levels[i] > levels[i - 1], ErrorKind::InvalidParameter,
                "ladder levels must be strictly increasing");
    }
    spec.validate();
    const KernelTable table = build_kernel_table(spec.grid, spec.params);
    std::vector<Trajectory> out;
    for (double n : levels) {
        ProblemSpec level = spec;
        level.ladder_level = n;
        out.push_back(evolve(level, table, opts));
    }
    return out;
}

StationaryResult stationary_solve(const ProblemSpec& spec, const StepperOptions& opts,
                                  const StationaryOptions& sopts) {
    spec.validate();
    opts.validate();
    require(spec.reaction.has_value(), ErrorKind::InvalidParameter,
            "stationary solve needs a reaction term");
    const Reaction r = *spec.reaction;
    const double p = spec.params.p();
    require(r.q > 0.0 && r.q < p - 1.0, ErrorKind::InvalidParameter,
            "stationary solve requires 0 < q < p - 1");
    require(r.lambda > 0.0, ErrorKind::InvalidParameter, "stationary solve needs lambda > 0");
    require(sopts.seed > 0.0 && sopts.tol > 0.0 && sopts.max_steps >= 1,
            ErrorKind::InvalidParameter, "invalid stationary options");

    const KernelTable table = build_kernel_table(spec.grid, spec.params);
    const int M = spec.grid.size();
    Field u{Eigen::VectorXd::Constant(M, sopts.seed), 0.0};
    StepperOptions run = opts;
    if (!run.regularization_eps) run.regularization_eps = 1e-12 * sopts.seed;

    int steps = 0;
    bool settled = false;
    for (; steps < sopts.max_steps; ++steps) {
        Field next = implicit_step(u, u.time + run.dt, spec, table, run);
        const double change = sup_norm(next.values - u.values);
        u = std::move(next);
        if (change <= sopts.tol) {
            settled = true;
            ++steps;
            break;
        }
    }
    const double wmax = sup_norm(u.values);
    if (!(wmax > 1e-3 * sopts.seed) || u.values.minCoeff() <= 0.0) {
        fail(ErrorKind::DegenerateStationary, "iteration collapsed to the zero state");
    }
    if (!settled) {
        fail(ErrorKind::SolverFailure, "stationary iteration did not settle within max_steps");
    }
    const Eigen::VectorXd res = apply_operator(u.values, table) - reaction_term(u.values, r);
    return StationaryResult{u, sup_norm(res), steps};
}

double subsolution_mu(double t, double q) {
    require(q > 0.0 && q < 1.0, ErrorKind::InvalidParameter, "mu requires 0 < q < 1");
    require(t >= 0.0, ErrorKind::InvalidParameter, "mu requires t >= 0");
    return std::pow((1.0 - q) * t, 1.0 / (1.0 - q));
}

Field subsolution_seed(const Field& w, double q, double eps, double dt) {
    require(eps > 0.0 && dt > 0.0, ErrorKind::InvalidParameter, "seed needs eps, dt > 0");
    return Field{subsolution_mu(eps * dt, q) * w.values, dt};
}

} // namespace fracp
