#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ped2/problem.hpp"
#include "ped2/rng.hpp"
#include "test_oracles.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using ped2::CouplingFunction;
using ped2::CouplingKind;
using ped2::QuadraticCost;
using ped2::SharingProblem;
using ped2::SmoothCost;

namespace {

VectorXd vec2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

QuadraticCost random_quadratic(ped2::Rng& rng, int n) {
    MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
    }
    QuadraticCost q;
    q.R = m.transpose() * m + MatrixXd::Identity(n, n);
    q.r = VectorXd::NullaryExpr(n, [&rng](Eigen::Index) { return rng.normal(); });
    return q;
}

SharingProblem two_agent_problem() {
    QuadraticCost q1;
    q1.R = 2.0 * MatrixXd::Identity(1, 1);
    q1.r = VectorXd::Ones(1);
    QuadraticCost q2;
    q2.R = MatrixXd::Identity(1, 1);
    q2.r = VectorXd::Zero(1);
    std::vector<ped2::AgentSpec> agents;
    agents.push_back({SmoothCost::quadratic(q1), MatrixXd::Identity(1, 1)});
    agents.push_back({SmoothCost::quadratic(q2), MatrixXd::Identity(1, 1)});
    return SharingProblem(std::move(agents), CouplingFunction::zero(1));
}

}  // namespace

TEST_CASE("quadratic gradient matches the per-block affine formula") {
    QuadraticCost q;
    q.R = MatrixXd::Identity(2, 2);
    q.r = VectorXd::Zero(2);
    std::vector<ped2::AgentSpec> agents;
    agents.push_back({SmoothCost::quadratic(q), MatrixXd::Identity(2, 2)});
    SharingProblem p(std::move(agents), CouplingFunction::zero(2));
    CHECK((p.smooth_gradient(vec2(1.0, 2.0)) - vec2(1.0, 2.0)).norm() == 0.0);

    SharingProblem two = two_agent_problem();
    const VectorXd g = two.smooth_gradient(vec2(1.0, 1.0));
    CHECK(g(0) == doctest::Approx(3.0));
    CHECK(g(1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(two.smooth_gradient(VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("gradient agrees with central finite differences") {
    ped2::Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        QuadraticCost q = random_quadratic(rng, 5);
        std::vector<ped2::AgentSpec> agents;
        agents.push_back({SmoothCost::quadratic(q), MatrixXd::Identity(5, 5)});
        SharingProblem p(std::move(agents), CouplingFunction::zero(5));

        VectorXd w(5);
        for (int i = 0; i < 5; ++i) w(i) = rng.normal();
        const VectorXd analytic = p.smooth_gradient(w);
        const VectorXd numeric = test_oracles::fd_gradient(
            [&p](const VectorXd& x) { return p.smooth_value(x); }, w);
        CHECK((analytic - numeric).norm() <= 1e-6 * std::max(1.0, analytic.norm()));
    }
}

TEST_CASE("quadratic validation rejects asymmetric and indefinite matrices") {
    QuadraticCost asym;
    asym.R = MatrixXd::Identity(2, 2);
    asym.R(0, 1) = 0.5;  // not mirrored
    asym.r = VectorXd::Zero(2);
    CHECK_THROWS_AS(SmoothCost::quadratic(asym), std::invalid_argument);

    QuadraticCost indef;
    indef.R = MatrixXd::Identity(2, 2);
    indef.R(1, 1) = -1.0;
    indef.r = VectorXd::Zero(2);
    CHECK_THROWS_AS(SmoothCost::quadratic(indef), std::invalid_argument);
}

TEST_CASE("aggregate moduli take the blockwise extremes") {
    {
        QuadraticCost q;
        q.R = MatrixXd::Identity(3, 3);
        q.r = VectorXd::Zero(3);
        std::vector<ped2::AgentSpec> agents;
        agents.push_back({SmoothCost::quadratic(q), MatrixXd::Identity(3, 3)});
        SharingProblem p(std::move(agents), CouplingFunction::zero(3));
        CHECK(p.aggregate_moduli().nu == doctest::Approx(1.0));
        CHECK(p.aggregate_moduli().delta == doctest::Approx(1.0));
    }
    {
        // spectra [1, 2] and [0.5, 3] stack into a block-diagonal Hessian
        QuadraticCost q1;
        q1.R = MatrixXd::Zero(2, 2);
        q1.R(0, 0) = 1.0;
        q1.R(1, 1) = 2.0;
        q1.r = VectorXd::Zero(2);
        QuadraticCost q2;
        q2.R = MatrixXd::Zero(2, 2);
        q2.R(0, 0) = 0.5;
        q2.R(1, 1) = 3.0;
        q2.r = VectorXd::Zero(2);
        std::vector<ped2::AgentSpec> agents;
        agents.push_back({SmoothCost::quadratic(q1), MatrixXd::Identity(2, 2)});
        agents.push_back({SmoothCost::quadratic(q2), MatrixXd::Identity(2, 2)});
        SharingProblem p(std::move(agents), CouplingFunction::zero(2));
        CHECK(p.aggregate_moduli().nu == doctest::Approx(0.5));
        CHECK(p.aggregate_moduli().delta == doctest::Approx(3.0));
    }
    {
        QuadraticCost q;
        q.R = 4.0 * MatrixXd::Identity(2, 2);
        q.r = VectorXd::Zero(2);
        std::vector<ped2::AgentSpec> agents;
        agents.push_back({SmoothCost::quadratic(q), MatrixXd::Identity(2, 2)});
        SharingProblem p(std::move(agents), CouplingFunction::zero(2));
        CHECK(p.aggregate_moduli().nu == doctest::Approx(4.0));
        CHECK(p.aggregate_moduli().delta == doctest::Approx(4.0));
    }
}

TEST_CASE("prox closed forms match the hand-solved cases") {
    SUBCASE("zero kind is the identity") {
        auto g = CouplingFunction::zero(2);
        const VectorXd v = vec2(3.0, -1.5);
        CHECK((g.prox(0.7, v) - v).norm() == 0.0);
        CHECK(g.conjugate_prox(0.7, v).norm() == 0.0);
    }
    SUBCASE("upper bound projects componentwise") {
        auto g = CouplingFunction::upper_bound(vec2(0.5, 0.5));
        const VectorXd p = g.prox(1.0, vec2(1.0, -1.0));
        CHECK(p(0) == doctest::Approx(0.5));
        CHECK(p(1) == doctest::Approx(-1.0));
        const VectorXd cp = g.conjugate_prox(1.0, vec2(1.0, -1.0));
        CHECK(cp(0) == doctest::Approx(0.5));
        CHECK(cp(1) == doctest::Approx(0.0));
    }
    SUBCASE("l1 soft-thresholds and its conjugate clamps") {
        auto g = CouplingFunction::l1_norm(2, 1.0);
        const VectorXd p = g.prox(2.0, vec2(3.0, -0.5));
        CHECK(p(0) == doctest::Approx(1.0));
        CHECK(p(1) == doctest::Approx(0.0));
        const VectorXd cp = g.conjugate_prox(5.0, vec2(3.0, -0.5));
        CHECK(cp(0) == doctest::Approx(1.0));
        CHECK(cp(1) == doctest::Approx(-0.5));
    }
    SUBCASE("equality shifts by tau * b in the conjugate") {
        auto g = CouplingFunction::equality(vec2(1.0, -2.0));
        const VectorXd cp = g.conjugate_prox(0.5, vec2(0.0, 0.0));
        CHECK(cp(0) == doctest::Approx(-0.5));
        CHECK(cp(1) == doctest::Approx(1.0));
        CHECK((g.prox(0.5, vec2(9.0, 9.0)) - vec2(1.0, -2.0)).norm() == 0.0);
    }
    SUBCASE("nonpositive step is rejected") {
        auto g = CouplingFunction::zero(2);
        CHECK_THROWS_AS(g.prox(0.0, vec2(1.0, 1.0)), std::invalid_argument);
        CHECK_THROWS_AS(g.conjugate_prox(-1.0, vec2(1.0, 1.0)), std::invalid_argument);
    }
}

TEST_CASE("Moreau identity holds for every kind") {
    ped2::Rng rng(21);
    std::vector<CouplingFunction> kinds;
    kinds.push_back(CouplingFunction::zero(4));
    kinds.push_back(CouplingFunction::equality(VectorXd::NullaryExpr(
        4, [&rng](Eigen::Index) { return rng.normal(); })));
    kinds.push_back(CouplingFunction::upper_bound(VectorXd::NullaryExpr(
        4, [&rng](Eigen::Index) { return rng.normal(); })));
    kinds.push_back(CouplingFunction::l1_norm(4, 0.75));

    for (const CouplingFunction& g : kinds) {
        for (int trial = 0; trial < 25; ++trial) {
            const double tau = rng.uniform(0.1, 10.0);
            VectorXd v(4);
            for (int i = 0; i < 4; ++i) v(i) = 3.0 * rng.normal();
            const VectorXd lhs = g.prox(tau, v) + tau * g.conjugate_prox(1.0 / tau, v / tau);
            CHECK((lhs - v).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("closed-form conjugate prox agrees with the Moreau route") {
    ped2::Rng rng(22);
    std::vector<CouplingFunction> kinds;
    kinds.push_back(CouplingFunction::zero(3));
    kinds.push_back(CouplingFunction::equality(vec2(0.2, -0.4)));
    kinds.push_back(CouplingFunction::upper_bound(vec2(0.5, 1.5)));
    kinds.push_back(CouplingFunction::l1_norm(3, 1.3));

    for (const CouplingFunction& g : kinds) {
        for (int trial = 0; trial < 20; ++trial) {
            const double tau = rng.uniform(0.05, 8.0);
            VectorXd v(g.dim());
            for (int i = 0; i < g.dim(); ++i) v(i) = 2.0 * rng.normal();
            const VectorXd direct = g.conjugate_prox(tau, v);
            const VectorXd via_moreau = ped2::moreau_conjugate_prox(g, tau, v);
            CHECK((direct - via_moreau).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }

    // A generic wrapper around the upper-bound prox must reproduce the
    // closed-form conjugate through the Moreau fallback.
    auto closed = CouplingFunction::upper_bound(vec2(0.5, 0.5));
    auto wrapped = CouplingFunction::generic(
        2, [&closed](double tau, const VectorXd& v) { return closed.prox(tau, v); });
    for (int trial = 0; trial < 20; ++trial) {
        const double tau = rng.uniform(0.05, 8.0);
        VectorXd v(2);
        v << 2.0 * rng.normal(), 2.0 * rng.normal();
        CHECK((wrapped.conjugate_prox(tau, v) - closed.conjugate_prox(tau, v))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-12);
    }
}

TEST_CASE("strong convexity and smoothness inequalities hold for the aggregate") {
    ped2::Rng rng(31);
    std::vector<ped2::AgentSpec> agents;
    for (int k = 0; k < 3; ++k) {
        agents.push_back({SmoothCost::quadratic(random_quadratic(rng, 4)),
                          MatrixXd::Identity(4, 4)});
    }
    SharingProblem p(std::move(agents), CouplingFunction::zero(4));
    const ped2::Moduli m = p.aggregate_moduli();
    for (int trial = 0; trial < 50; ++trial) {
        VectorXd w(12), x(12);
        for (int i = 0; i < 12; ++i) w(i) = rng.normal();
        for (int i = 0; i < 12; ++i) x(i) = rng.normal();
        const VectorXd diff = w - x;
        const double inner = diff.dot(p.smooth_gradient(w) - p.smooth_gradient(x));
        CHECK(inner >= m.nu * diff.squaredNorm() - 1e-9);
        CHECK(inner <= m.delta * diff.squaredNorm() + 1e-9);
    }
    CHECK(ped2::spot_check_moduli(p.agent(0).cost, 25, 77));
}

TEST_CASE("generic cost with inflated nu fails the spot check") {
    QuadraticCost q;
    q.R = MatrixXd::Identity(2, 2);
    q.r = VectorXd::Zero(2);
    auto value = [q](const VectorXd& w) { return q.value(w); };
    auto grad = [q](const VectorXd& w) { return q.gradient(w); };
    const SmoothCost lying = SmoothCost::generic(2, 5.0, 6.0, value, grad);
    CHECK_FALSE(ped2::spot_check_moduli(lying, 25, 5));
}

TEST_CASE("problem construction validates shapes") {
    QuadraticCost q;
    q.R = MatrixXd::Identity(2, 2);
    q.r = VectorXd::Zero(2);
    std::vector<ped2::AgentSpec> wrong_rows;
    wrong_rows.push_back({SmoothCost::quadratic(q), MatrixXd::Identity(3, 2)});
    CHECK_THROWS_AS(SharingProblem(std::move(wrong_rows), CouplingFunction::zero(2)),
                    std::invalid_argument);

    std::vector<ped2::AgentSpec> wrong_cols;
    wrong_cols.push_back({SmoothCost::quadratic(q), MatrixXd::Identity(2, 3)});
    CHECK_THROWS_AS(SharingProblem(std::move(wrong_cols), CouplingFunction::zero(2)),
                    std::invalid_argument);

    CHECK_THROWS_AS(SharingProblem({}, CouplingFunction::zero(2)), std::invalid_argument);
}

TEST_CASE("full row rank detection uses the scale-invariant gram test") {
    QuadraticCost q;
    q.R = MatrixXd::Identity(3, 3);
    q.r = VectorXd::Zero(3);
    MatrixXd rank_deficient(2, 3);
    rank_deficient << 1.0, 0.0, 0.0,
                      1.0, 0.0, 0.0;
    std::vector<ped2::AgentSpec> agents;
    agents.push_back({SmoothCost::quadratic(q), rank_deficient});
    SharingProblem p(std::move(agents), CouplingFunction::zero(2));
    CHECK_FALSE(p.full_row_rank_blocks());

    std::vector<ped2::AgentSpec> good;
    good.push_back({SmoothCost::quadratic(q), MatrixXd::Identity(3, 3)});
    SharingProblem p2(std::move(good), CouplingFunction::zero(3));
    CHECK(p2.full_row_rank_blocks());
}

TEST_CASE("assumption-1 style checks") {
    ped2::Rng rng(41);
    SUBCASE("surjective stacked coupling settles the interior condition") {
        std::vector<ped2::AgentSpec> agents;
        agents.push_back({SmoothCost::quadratic(random_quadratic(rng, 3)),
                          MatrixXd::Identity(3, 3)});
        SharingProblem p(std::move(agents), CouplingFunction::upper_bound(VectorXd::Zero(3)));
        const ped2::Assumption1Report rep = ped2::check_assumption1(p);
        CHECK(rep.ok);
        CHECK(rep.moduli_ok);
        CHECK(rep.relint_ok);
    }
    SUBCASE("rank-deficient coupling falls back to the reference point") {
        QuadraticCost q;
        q.R = MatrixXd::Identity(2, 2);
        q.r = VectorXd::Zero(2);  // unconstrained minimizer at the origin
        MatrixXd B(2, 2);
        B << 1.0, 0.0,
             1.0, 0.0;  // rank one
        std::vector<ped2::AgentSpec> agents;
        agents.push_back({SmoothCost::quadratic(q), B});
        SharingProblem p(std::move(agents), CouplingFunction::upper_bound(vec2(1.0, 1.0)));
        CHECK(ped2::check_assumption1(p).ok);  // B*0 = 0 < 1 strictly

        std::vector<ped2::AgentSpec> agents2;
        agents2.push_back({SmoothCost::quadratic(q), B});
        SharingProblem tight(std::move(agents2), CouplingFunction::upper_bound(vec2(0.0, 0.0)));
        CHECK_FALSE(ped2::check_assumption1(tight).relint_ok);  // B*0 = 0 is not interior
    }
}
