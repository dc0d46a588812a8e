#include "catch_amalgamated.hpp"
#include "support.hpp"

#include "fracp/algebra.hpp"
#include "fracp/diagnostics.hpp"
#include "fracp/error.hpp"
#include "fracp/evolution.hpp"
#include "fracp/expression.hpp"

#include <cmath>
#include <numbers>
#include <string>

using namespace fracp;
using fracp::testing::Gen;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

CellData cells(const std::string& text) {
    const Expression e = Expression::parse(text);
    return [e](double a, double b) { return e.cell_average(a, b); };
}

ProblemSpec problem(double p, double s, int M, double T, const std::string& u0) {
    return ProblemSpec{FracParams(p, s), GridDomain(-1.0, 1.0, M), T, cells(u0), {}, {}, {}};
}

StepperOptions stepper(double dt) {
    StepperOptions o;
    o.dt = dt;
    return o;
}

// Hand-built trajectory with the given field at every time level.
Trajectory constant_trajectory(const GridDomain& g, const Eigen::VectorXd& v, std::vector<double> times) {
    Trajectory tr{g, {}, {}, {}};
    for (double t : times) {
        tr.fields.push_back(Field{v, t});
        tr.forcing.push_back(Eigen::VectorXd::Zero(g.size()));
        if (tr.fields.size() > 1) tr.steps.push_back(StepInfo{});
    }
    return tr;
}

template <ErrorKind K>
bool throws_kind(const auto& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind() == K;
    }
    return false;
}

} // namespace

TEST_CASE("lp norms", "[diagnostics]") {
    const GridDomain g(0.0, 2.0, 10);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(10);
    CHECK_THAT(lp_norm(one, g, 1.0), WithinRel(2.0, 1e-15));
    CHECK_THAT(lp_norm(one, g, 2.0), WithinRel(std::sqrt(2.0), 1e-15));
    CHECK(lp_norm(one, g, HUGE_VAL) == 1.0);
    CHECK(throws_kind<ErrorKind::InvalidParameter>([&] { lp_norm(one, g, 0.5); }));
    Gen gen(61);
    for (int n = 0; n < 200; ++n) {
        const Eigen::VectorXd u = gen.field(10, -3.0, 3.0);
        const double r = gen.uniform(1.0, 8.0);
        double acc = 0.0;
        for (int i = 0; i < 10; ++i) acc += std::pow(std::abs(u[i]), r) * 0.2;
        REQUIRE_THAT(lp_norm(u, g, r), WithinRel(std::pow(acc, 1.0 / r), 1e-13));
        const double a = gen.sign() * gen.log_uniform(1e-3, 1e3);
        REQUIRE_THAT(lp_norm(Eigen::VectorXd(a * u), g, r), WithinRel(std::abs(a) * lp_norm(u, g, r), 1e-13));
        REQUIRE(lp_norm(u, g, HUGE_VAL) == u.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("distribution function of constant and bounded trajectories", "[diagnostics]") {
    const GridDomain g(-1.0, 1.0, 8);
    const Trajectory tr = constant_trajectory(g, Eigen::VectorXd::Constant(8, 3.0), {0.0, 0.25, 0.5, 1.0});
    const DistributionSamples d = distribution_function(tr, {0.5, 1.0, 2.0, 2.9, 3.0, 4.0, 10.0}, std::make_pair(0.5, 2.9));
    for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(d.phis[i], WithinRel(2.0, 1e-15));
    CHECK(d.phis[4] == 0.0);
    CHECK(d.phis[5] == 0.0);
    CHECK(d.phis[6] == 0.0);
    CHECK_THAT(d.fitted_slope, WithinAbs(0.0, 1e-12));
    CHECK(d.fit_points == 4);
    CHECK(throws_kind<ErrorKind::FitFailure>([&] { distribution_function(tr, {1.0, 4.0, 5.0}, std::make_pair(3.5, 6.0)); }));
}

TEST_CASE("distribution function is nonincreasing and bounded by the space-time volume", "[diagnostics][property]") {
    Gen gen(62);
    for (int n = 0; n < 50; ++n) {
        const GridDomain g(-1.0, 1.0, 16);
        Trajectory tr{g, {Field{gen.field(16), 0.0}}, {}, {Eigen::VectorXd::Zero(16)}};
        double t = 0.0;
        for (int k = 0; k < 5; ++k) {
            t += gen.uniform(0.01, 0.2);
            tr.fields.push_back(Field{gen.field(16, -5.0, 5.0), t});
            tr.forcing.push_back(Eigen::VectorXd::Zero(16));
            tr.steps.push_back(StepInfo{});
        }
        std::vector<double> ks;
        for (int k = 0; k < 30; ++k) ks.push_back(std::pow(10.0, -3.0 + 0.15 * k));
        const DistributionSamples d = distribution_function(tr, ks, std::make_pair(1e-3, 10.0));
        REQUIRE(d.phis.front() <= 2.0 * t * (1.0 + 1e-14));
        for (std::size_t i = 1; i < d.phis.size(); ++i) REQUIRE(d.phis[i] <= d.phis[i - 1]);
        for (double v : d.phis) REQUIRE(v >= 0.0);
    }
}

TEST_CASE("weak residual vanishes in the trivial cases", "[diagnostics]") {
    const ProblemSpec spec = problem(2.0, 0.5, 16, 0.1, "zero()");
    const KernelTable t = build_kernel_table(spec.grid, spec.params);
    const Trajectory z = evolve(spec, t, stepper(0.02));
    const TestFunction phi{[](double x, double s) { return std::cos(0.5 * kPi * x) * s; },
                           [](double x, double) { return std::cos(0.5 * kPi * x); }};
    CHECK(weak_residual(z, phi, t) == 0.0);
    const Trajectory u = evolve(problem(1.5, 0.5, 16, 0.1, "bump(0, 0.5)"), stepper(0.02));
    const TestFunction none{[](double, double) { return 0.0; }, [](double, double) { return 0.0; }};
    CHECK(weak_residual(u, none, build_kernel_table(u.grid, FracParams(1.5, 0.5))) == 0.0);
}

TEST_CASE("weak residual shrinks under refinement", "[diagnostics]") {
    // p = 2, s = 1/2, smooth data; phi = cos^2(pi x / 2) sin^2(pi t / T).
    const double T = 0.2;
    const TestFunction phi{
        [T](double x, double t) { return std::pow(std::cos(0.5 * kPi * x), 2) * std::pow(std::sin(kPi * t / T), 2); },
        [T](double x, double t) {
            return std::pow(std::cos(0.5 * kPi * x), 2) * (kPi / T) * std::sin(2.0 * kPi * t / T);
        }};
    auto residual = [&](int M, int steps) {
        const ProblemSpec spec = problem(2.0, 0.5, M, T, "bump(0, 0.7)");
        const KernelTable t = build_kernel_table(spec.grid, spec.params);
        return std::abs(weak_residual(evolve(spec, t, stepper(T / steps)), phi, t));
    };
    const double r1 = residual(32, 20);
    const double r2 = residual(64, 40);
    const double r3 = residual(128, 80);
    INFO("residuals " << r1 << " " << r2 << " " << r3);
    CHECK(r2 <= 0.7 * r1);
    CHECK(r3 <= 0.7 * r2);
}

TEST_CASE("entropy residual on the documented library", "[diagnostics][entropy]") {
    const ProblemSpec spec = problem(1.5, 0.5, 64, 0.1, "bump(0, 0.6) + 0.5*indicator(-0.3, 0.2)");
    const KernelTable t = build_kernel_table(spec.grid, spec.params);
    const Trajectory tr = evolve(spec, t, stepper(0.01));
    const std::vector<ComparisonFunction> lib = entropy_test_library(tr);
    REQUIRE(lib.size() == 4);
    CHECK(lib[0].id == "zero");
    for (const ComparisonFunction& v : lib) {
        REQUIRE(v.values.size() == tr.size());
        for (double k : {0.5, 1.0, 2.0, 100.0}) {
            const EntropyCheck c = entropy_residual(tr, v, k, t);
            INFO(v.id << " k=" << k << " lhs=" << c.lhs << " rhs=" << c.rhs);
            CHECK(c.satisfied);
            CHECK(c.tol > 0.0);
            CHECK(c.k == k);
            CHECK(c.test_function_id == v.id);
        }
    }
    // v = u: every Theta_k and T_k(u - v) term is zero.
    ComparisonFunction self{"self", {}};
    for (const Field& f : tr.fields) self.values.push_back(f.values);
    const EntropyCheck c = entropy_residual(tr, self, 1.0, t);
    CHECK(c.lhs == 0.0);
    CHECK(c.rhs == 0.0);
    CHECK(c.satisfied);
    self.values[1][3] = NAN;
    CHECK(throws_kind<ErrorKind::InvalidTestFunction>([&] { entropy_residual(tr, self, 1.0, t); }));
}

TEST_CASE("entropy tail", "[diagnostics][entropy]") {
    const GridDomain g(-1.0, 1.0, 32);
    const KernelTable t = build_kernel_table(g, FracParams(1.5, 0.5));
    const Trajectory zero = constant_trajectory(g, Eigen::VectorXd::Zero(32), {0.0, 0.1, 0.2});
    for (double h : {0.0, 1.0, 4.0}) CHECK(entropy_tail(zero, h, t) == 0.0);

    // Spike data at level 32: the tail decays and vanishes once h + 1 exceeds sup u.
    ProblemSpec spec = problem(1.5, 0.5, 256, 0.1, "power_spike(0, 0.5)");
    spec.ladder_level = 32.0;
    const KernelTable ts = build_kernel_table(spec.grid, spec.params);
    const Trajectory tr = evolve(spec, ts, stepper(0.01));
    double sup = 0.0;
    for (const Field& f : tr.fields) sup = std::max(sup, f.values.maxCoeff());
    std::vector<double> tails;
    for (double h = 1.0; h <= 64.0; h *= 2.0) tails.push_back(entropy_tail(tr, h, ts));
    std::string seq;
    for (double v : tails) seq += std::to_string(v) + " ";
    INFO("sup " << sup << " tails " << seq);
    CHECK(tails.front() > 0.0);
    CHECK(tails[4] <= 0.5 * tails[0]);
    CHECK(tails.back() <= 0.1 * tails.front());
    CHECK(tails.back() == 0.0);
    CHECK(entropy_tail(tr, sup, ts) == 0.0);
    CHECK(throws_kind<ErrorKind::InvalidParameter>([&] { entropy_tail(tr, -1.0, ts); }));
}

TEST_CASE("entropy tail on two nodes by hand", "[diagnostics][entropy]") {
    // u = (1.5, 3.5), p = 2, one step of length 1. At h = 1 only the exterior pair of node 1
    // lies in R_h; at h = 2 the interior pair joins, so R_h is not nested in h.
    const GridDomain g(0.0, 1.0, 2);
    const KernelTable t = build_kernel_table(g, FracParams(2.0, 0.5));
    Eigen::VectorXd u(2);
    u << 1.5, 3.5;
    const Trajectory tr = constant_trajectory(g, u, {0.0, 1.0});
    const double ext = 2.0 * 3.5 * t.tail[1] * g.h();
    const double inner = 2.0 * 2.0 * t.coupling(0, 1) * g.h();
    CHECK_THAT(entropy_tail(tr, 1.0, t), WithinRel(ext, 1e-15));
    CHECK_THAT(entropy_tail(tr, 2.0, t), WithinRel(ext + inner, 1e-15));
    CHECK(entropy_tail(tr, 2.6, t) == 0.0);
}

TEST_CASE("extinction detection", "[diagnostics][extinction]") {
    const GridDomain g(-1.0, 1.0, 16);
    const ExtinctionRecord z = detect_extinction(constant_trajectory(g, Eigen::VectorXd::Zero(16), {0.0, 0.1}));
    CHECK(z.extinct);
    CHECK(z.T_num == 0.0);

    const ExtinctionRecord fast = detect_extinction(evolve(problem(1.5, 0.5, 32, 1.0, "bump(0, 0.6)"), stepper(0.01)));
    CHECK(fast.extinct);
    REQUIRE(fast.T_num);
    CHECK(*fast.T_num > 0.0);
    CHECK(*fast.T_num < 1.0);
    for (std::size_t n = 1; n < fast.norm_trace.size(); ++n) CHECK(fast.norm_trace[n].second <= fast.norm_trace[n - 1].second);

    const ExtinctionRecord slow = detect_extinction(evolve(problem(2.5, 0.5, 32, 1.0, "bump(0, 0.6)"), stepper(0.01)));
    CHECK_FALSE(slow.extinct);
    CHECK_FALSE(slow.T_num);

    // A dip that recovers does not count.
    Eigen::VectorXd one = Eigen::VectorXd::Ones(16);
    Trajectory dip = constant_trajectory(g, one, {0.0, 0.1, 0.2});
    dip.fields[1].values.setZero();
    CHECK_FALSE(detect_extinction(dip, 1e-3).extinct);
}

TEST_CASE("L2 extinction bound arithmetic", "[diagnostics][extinction]") {
    const GridDomain g(-1.0, 1.0, 64);
    const FracParams fp(1.5, 0.5);
    const Field u0{Eigen::VectorXd::Constant(64, 1.0 / std::sqrt(2.0)), 0.0};
    REQUIRE_THAT(lp_norm(u0, g, 2.0), WithinRel(1.0, 1e-14));
    for (double S : {0.5, 1.0, 3.7}) {
        CHECK_THAT(extinction_bound(u0, fp, g, S, ExtinctionVariant::L2), WithinRel(4.0 * std::sqrt(2.0) / S, 1e-14));
    }
    const Field twice{2.0 * u0.values, 0.0};
    CHECK_THAT(extinction_bound(twice, fp, g, 1.0, ExtinctionVariant::L2),
               WithinRel(std::pow(2.0, 0.5) * extinction_bound(u0, fp, g, 1.0, ExtinctionVariant::L2), 1e-14));
    CHECK(extinction_bound(Field{Eigen::VectorXd::Zero(64), 0.0}, fp, g, 1.0, ExtinctionVariant::L2) == 0.0);
    CHECK(throws_kind<ErrorKind::InvalidParameter>([&] { extinction_bound(u0, FracParams(2.5, 0.3), g, 1.0, ExtinctionVariant::L2); }));
    CHECK(throws_kind<ErrorKind::InvalidParameter>([&] { extinction_bound(u0, fp, g, 1.0, ExtinctionVariant::Lnu); }));
    CHECK(throws_kind<ErrorKind::InvalidParameter>([&] { extinction_bound(u0, fp, g, 0.0, ExtinctionVariant::L2); }));
}

TEST_CASE("L^{nu+1} extinction bound arithmetic", "[diagnostics][extinction]") {
    // N = 1, s = 0.2: the split point 2N/(N+2s) is 1/0.7, so p = 1.2 uses this variant.
    const GridDomain g(-1.0, 1.0, 32);
    const FracParams fp(1.2, 0.2);
    const double nu1 = 0.8 / 0.24;
    Gen gen(63);
    const Field u0{gen.field(32, 0.0, 2.0), 0.0};
    double acc = 0.0;
    for (int i = 0; i < 32; ++i) acc += std::pow(u0.values[i], nu1) * g.h();
    const double expect = std::pow(acc, 0.8 / nu1) / (0.8 * published_c3(1.2, nu1 - 1.0) * 2.5);
    CHECK_THAT(extinction_bound(u0, fp, g, 2.5, ExtinctionVariant::Lnu), WithinRel(expect, 1e-13));
    CHECK(throws_kind<ErrorKind::InvalidParameter>([&] { extinction_bound(u0, fp, g, 2.5, ExtinctionVariant::L2); }));
}

TEST_CASE("concave smallness threshold arithmetic", "[diagnostics]") {
    // p = 1.5, s = 0.5, |Omega| = 2: (S 2^{1/4 - 3/4})^{2}.
    const double S = 3.0;
    CHECK_THAT(concave_smallness_threshold(FracParams(1.5, 0.5), GridDomain(-1.0, 1.0, 16), S),
               WithinRel(S * S / 2.0, 1e-14));
    CHECK(throws_kind<ErrorKind::InvalidParameter>([&] { concave_smallness_threshold(FracParams(2.5, 0.3), GridDomain(-1.0, 1.0, 16), S); }));
}

TEST_CASE("Sobolev quotient is scale invariant", "[diagnostics][sobolev]") {
    const KernelTable t = build_kernel_table(GridDomain(-1.0, 1.0, 32), FracParams(1.5, 0.5));
    Gen gen(64);
    for (int n = 0; n < 100; ++n) {
        const Eigen::VectorXd u = gen.field(32);
        const double a = gen.sign() * gen.log_uniform(1e-2, 1e2);
        REQUIRE_THAT(sobolev_quotient(Eigen::VectorXd(a * u), t), WithinRel(sobolev_quotient(u, t), 1e-12));
    }
    CHECK(throws_kind<ErrorKind::InvalidParameter>([] {
        sobolev_quotient(Eigen::VectorXd::Ones(8), build_kernel_table(GridDomain(-1.0, 1.0, 8), FracParams(2.0, 0.5)));
    }));
}

TEST_CASE("Sobolev constant on a coarse grid", "[diagnostics][sobolev][golden]") {
    // p = 2, s = 0.4 (p s < N = 1), Omega = (-1, 1), M = 16.
    const GridDomain g(-1.0, 1.0, 16);
    const FracParams fp(2.0, 0.4);
    const KernelTable t = build_kernel_table(g, fp);
    const SobolevEstimate est = estimate_sobolev_constant(g, fp);
    CHECK_FALSE(est.stagnated);
    CHECK(est.per_start.size() == 8);
    CHECK_THAT(sobolev_quotient(est.minimizer, t), WithinRel(est.value, 1e-12));
    CHECK_THAT(est.value, WithinRel(2.7934443809623968, 1e-9));

    // No random field beats the optimizer.
    Gen gen(65);
    double best = HUGE_VAL;
    for (int n = 0; n < 100000; ++n) best = std::min(best, sobolev_quotient(gen.field(16, 0.0, 1.0), t));
    INFO("random search " << best);
    CHECK(est.value <= best);

    // Local optimality: small perturbations of the minimizer do not lower the quotient.
    const double scale = est.minimizer.cwiseAbs().maxCoeff();
    for (int n = 0; n < 2000; ++n) {
        const Eigen::VectorXd v = est.minimizer + 1e-3 * scale * gen.field(16);
        REQUIRE(sobolev_quotient(v, t) >= est.value * (1.0 - 1e-9));
    }
    const SobolevEstimate again = estimate_sobolev_constant(g, fp);
    CHECK(again.value == est.value);
}

TEST_CASE("Sobolev constant under refinement", "[diagnostics][sobolev]") {
    const FracParams fp(1.5, 0.5);
    const double s64 = estimate_sobolev_constant(GridDomain(-1.0, 1.0, 64), fp).value;
    const double s128 = estimate_sobolev_constant(GridDomain(-1.0, 1.0, 128), fp).value;
    INFO("S64=" << s64 << " S128=" << s128);
    CHECK(s128 <= 1.05 * s64);
}

TEST_CASE("positivity check", "[diagnostics]") {
    auto run = [](const std::string& u0) { return evolve(problem(1.5, 0.5, 64, 2e-3, u0), stepper(1e-3)); };
    const Trajectory a = run("indicator(-1, 0)");
    const Trajectory b = run("2*indicator(-1, 0)");
    CHECK(positivity_check(a, 0) == 0.0);
    CHECK(positivity_check(a, 1) > 0.0);
    CHECK(positivity_check(a, 2) > 0.0);
    CHECK(positivity_check(b, 1) >= positivity_check(a, 1));
    CHECK(positivity_check(b, 2) >= positivity_check(a, 2));
}

TEST_CASE("Cauchy gap", "[diagnostics][ladder]") {
    const Trajectory tr = evolve(problem(1.5, 0.5, 32, 0.05, "bump(0, 0.5)"), stepper(0.01));
    const CauchyGap same = cauchy_gap(tr, tr, data_gap(tr, tr));
    CHECK(same.gap == 0.0);
    CHECK(same.bound == 0.0);
    CHECK(same.satisfied);

    const ProblemSpec spec = problem(1.5, 0.5, 128, 0.1, "power_spike(0, 0.5)");
    const std::vector<Trajectory> lad = approximation_ladder(spec, {8.0, 16.0, 32.0}, stepper(0.01));
    const CauchyGap g832 = cauchy_gap(lad[0], lad[2], data_gap(lad[0], lad[2]));
    const CauchyGap g1632 = cauchy_gap(lad[1], lad[2], data_gap(lad[1], lad[2]));
    const CauchyGap g816 = cauchy_gap(lad[0], lad[1], data_gap(lad[0], lad[1]));
    CHECK(g832.satisfied);
    CHECK(g1632.satisfied);
    CHECK(g816.satisfied);
    CHECK(g832.gap >= g1632.gap);
    CHECK(g832.gap > 0.0);

    const Trajectory other = evolve(problem(1.5, 0.5, 32, 0.05, "bump(0, 0.5)"), stepper(0.025));
    CHECK(throws_kind<ErrorKind::ShapeMismatch>([&] { data_gap(tr, other); }));
}
