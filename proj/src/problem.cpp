#include "ped2/problem.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "ped2/linalg.hpp"
#include "ped2/rng.hpp"

namespace ped2 {

namespace {

void check_positive_step(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw std::invalid_argument("prox step tau must be positive and finite");
    }
}

void check_dim(const Eigen::VectorXd& v, int dim, const char* what) {
    if (static_cast<int>(v.size()) != dim) {
        std::ostringstream msg;
        msg << what << ": expected dimension " << dim << ", got " << v.size();
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

double QuadraticCost::value(const Eigen::VectorXd& w) const {
    return 0.5 * w.dot(R * w) + r.dot(w);
}

Eigen::VectorXd QuadraticCost::gradient(const Eigen::VectorXd& w) const {
    return R * w + r;
}

SmoothCost SmoothCost::quadratic(QuadraticCost cost) {
    if (cost.R.rows() != cost.R.cols() || cost.R.rows() != cost.r.size()) {
        throw std::invalid_argument("QuadraticCost: R must be square and match r");
    }
    const double scale = cost.R.cwiseAbs().maxCoeff();
    const double asym = (cost.R - cost.R.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(scale, 1e-300)) {
        throw std::invalid_argument("QuadraticCost: R is not symmetric");
    }
    const SymmetricEigen eig = jacobi_eigen(cost.R);
    const double lambda_min = eig.values(0);
    const double lambda_max = eig.values(eig.values.size() - 1);
    if (!(lambda_min > 0.0)) {
        throw std::invalid_argument("QuadraticCost: R is not positive definite");
    }

    SmoothCost out;
    out.dim_ = cost.dim();
    out.nu_ = lambda_min;
    out.delta_ = lambda_max;
    out.quad_ = std::make_shared<const QuadraticCost>(std::move(cost));
    const auto* q = out.quad_.get();
    out.value_ = [q](const Eigen::VectorXd& w) { return q->value(w); };
    out.grad_ = [q](const Eigen::VectorXd& w) { return q->gradient(w); };
    return out;
}

SmoothCost SmoothCost::generic(int dim, double nu, double delta, ValueFn value, GradFn gradient) {
    if (dim < 1) throw std::invalid_argument("SmoothCost: dim must be >= 1");
    if (!(nu >= 0.0) || !(delta >= nu) || !(delta > 0.0)) {
        throw std::invalid_argument("SmoothCost: need 0 <= nu <= delta, delta > 0");
    }
    if (!value || !gradient) {
        throw std::invalid_argument("SmoothCost: value and gradient oracles required");
    }
    SmoothCost out;
    out.dim_ = dim;
    out.nu_ = nu;
    out.delta_ = delta;
    out.value_ = std::move(value);
    out.grad_ = std::move(gradient);
    return out;
}

double SmoothCost::value(const Eigen::VectorXd& w) const {
    check_dim(w, dim_, "SmoothCost::value");
    return value_(w);
}

Eigen::VectorXd SmoothCost::gradient(const Eigen::VectorXd& w) const {
    check_dim(w, dim_, "SmoothCost::gradient");
    Eigen::VectorXd g = grad_(w);
    check_dim(g, dim_, "SmoothCost gradient oracle output");
    return g;
}

CouplingFunction CouplingFunction::zero(int dim) {
    if (dim < 1) throw std::invalid_argument("CouplingFunction: dim must be >= 1");
    CouplingFunction g;
    g.kind_ = CouplingKind::kZero;
    g.dim_ = dim;
    return g;
}

CouplingFunction CouplingFunction::equality(Eigen::VectorXd b) {
    if (b.size() < 1) throw std::invalid_argument("CouplingFunction: empty bound");
    CouplingFunction g;
    g.kind_ = CouplingKind::kEquality;
    g.dim_ = static_cast<int>(b.size());
    g.b_ = std::move(b);
    return g;
}

CouplingFunction CouplingFunction::upper_bound(Eigen::VectorXd b) {
    if (b.size() < 1) throw std::invalid_argument("CouplingFunction: empty bound");
    CouplingFunction g;
    g.kind_ = CouplingKind::kUpperBound;
    g.dim_ = static_cast<int>(b.size());
    g.b_ = std::move(b);
    return g;
}

CouplingFunction CouplingFunction::l1_norm(int dim, double weight) {
    if (dim < 1) throw std::invalid_argument("CouplingFunction: dim must be >= 1");
    if (!(weight > 0.0)) throw std::invalid_argument("CouplingFunction: l1 weight must be positive");
    CouplingFunction g;
    g.kind_ = CouplingKind::kL1;
    g.dim_ = dim;
    g.weight_ = weight;
    return g;
}

CouplingFunction CouplingFunction::generic(int dim, ProxFn prox) {
    if (dim < 1) throw std::invalid_argument("CouplingFunction: dim must be >= 1");
    if (!prox) throw std::invalid_argument("CouplingFunction: prox oracle required");
    CouplingFunction g;
    g.kind_ = CouplingKind::kGeneric;
    g.dim_ = dim;
    g.prox_ = std::move(prox);
    return g;
}

const Eigen::VectorXd& CouplingFunction::bound() const {
    if (kind_ != CouplingKind::kEquality && kind_ != CouplingKind::kUpperBound) {
        throw std::invalid_argument("CouplingFunction: this kind has no bound vector");
    }
    return b_;
}

double CouplingFunction::l1_weight() const {
    if (kind_ != CouplingKind::kL1) {
        throw std::invalid_argument("CouplingFunction: not an l1 kind");
    }
    return weight_;
}

Eigen::VectorXd CouplingFunction::prox(double tau, const Eigen::VectorXd& v) const {
    check_positive_step(tau);
    check_dim(v, dim_, "CouplingFunction::prox");
    switch (kind_) {
        case CouplingKind::kZero:
            return v;
        case CouplingKind::kEquality:
            return b_;
        case CouplingKind::kUpperBound:
            return v.cwiseMin(b_);
        case CouplingKind::kL1: {
            // componentwise soft threshold by tau * weight
            const double t = tau * weight_;
            return v.unaryExpr([t](double x) {
                if (x > t) return x - t;
                if (x < -t) return x + t;
                return 0.0;
            });
        }
        case CouplingKind::kGeneric: {
            Eigen::VectorXd out = prox_(tau, v);
            check_dim(out, dim_, "CouplingFunction generic prox output");
            return out;
        }
    }
    throw std::logic_error("CouplingFunction: unknown kind");
}

Eigen::VectorXd CouplingFunction::conjugate_prox(double tau, const Eigen::VectorXd& v) const {
    check_positive_step(tau);
    check_dim(v, dim_, "CouplingFunction::conjugate_prox");
    switch (kind_) {
        case CouplingKind::kZero:
            // g* is the indicator of {0}
            return Eigen::VectorXd::Zero(dim_);
        case CouplingKind::kEquality:
            // g*(y) = b^T y, a linear shift
            return v - tau * b_;
        case CouplingKind::kUpperBound:
            // g*(y) = b^T y on {y >= 0}
            return (v - tau * b_).cwiseMax(0.0);
        case CouplingKind::kL1: {
            // g* is the indicator of the l-inf ball of radius weight
            const double w = weight_;
            return v.unaryExpr([w](double x) { return std::clamp(x, -w, w); });
        }
        case CouplingKind::kGeneric:
            return moreau_conjugate_prox(*this, tau, v);
    }
    throw std::logic_error("CouplingFunction: unknown kind");
}

Eigen::VectorXd moreau_conjugate_prox(const CouplingFunction& g, double tau,
                                      const Eigen::VectorXd& v) {
    check_positive_step(tau);
    return v - tau * g.prox(1.0 / tau, v / tau);
}

SharingProblem::SharingProblem(std::vector<AgentSpec> agents, CouplingFunction g)
    : agents_(std::move(agents)), g_(std::move(g)) {
    if (agents_.empty()) {
        throw std::invalid_argument("SharingProblem: at least one agent required");
    }
    coupling_dim_ = g_.dim();
    offsets_.reserve(agents_.size());
    double nu = std::numeric_limits<double>::infinity();
    double delta = 0.0;
    double sigma_max = 0.0;
    double lambda_min = std::numeric_limits<double>::infinity();
    full_row_rank_ = true;
    for (std::size_t k = 0; k < agents_.size(); ++k) {
        const AgentSpec& a = agents_[k];
        if (a.B.rows() != coupling_dim_) {
            throw std::invalid_argument("SharingProblem: coupling matrix row count must equal g dimension");
        }
        if (a.B.cols() != a.cost.dim()) {
            throw std::invalid_argument("SharingProblem: coupling matrix columns must match cost dimension");
        }
        offsets_.push_back(total_dim_);
        total_dim_ += a.cost.dim();
        nu = std::min(nu, a.cost.nu());
        delta = std::max(delta, a.cost.delta());

        const SymmetricEigen gram = jacobi_eigen(Eigen::MatrixXd(a.B * a.B.transpose()));
        const double gram_min = gram.values(0);
        const double gram_max = gram.values(gram.values.size() - 1);
        sigma_max = std::max(sigma_max, std::sqrt(std::max(0.0, gram_max)));
        lambda_min = std::min(lambda_min, gram_min);
        // scale-invariant numerical rank test
        if (!(gram_min > 1e-10 * gram_max)) full_row_rank_ = false;
    }
    moduli_ = Moduli{nu, delta};
    sigma_max_ = sigma_max;
    lambda_min_gram_ = lambda_min;
}

int SharingProblem::block_dim(int k) const { return agent(k).cost.dim(); }

int SharingProblem::block_offset(int k) const {
    if (k < 0 || k >= num_agents()) throw std::invalid_argument("SharingProblem: agent index out of range");
    return offsets_[static_cast<std::size_t>(k)];
}

const AgentSpec& SharingProblem::agent(int k) const {
    if (k < 0 || k >= num_agents()) throw std::invalid_argument("SharingProblem: agent index out of range");
    return agents_[static_cast<std::size_t>(k)];
}

double SharingProblem::smooth_value(const Eigen::VectorXd& w) const {
    check_dim(w, total_dim_, "SharingProblem::smooth_value");
    double sum = 0.0;
    for (int k = 0; k < num_agents(); ++k) {
        sum += agents_[static_cast<std::size_t>(k)].cost.value(w.segment(block_offset(k), block_dim(k)));
    }
    return sum;
}

Eigen::VectorXd SharingProblem::smooth_gradient(const Eigen::VectorXd& w) const {
    check_dim(w, total_dim_, "SharingProblem::smooth_gradient");
    Eigen::VectorXd out(total_dim_);
    for (int k = 0; k < num_agents(); ++k) {
        out.segment(block_offset(k), block_dim(k)) =
            agents_[static_cast<std::size_t>(k)].cost.gradient(w.segment(block_offset(k), block_dim(k)));
    }
    return out;
}

Eigen::VectorXd SharingProblem::block_gradient(int k, const Eigen::VectorXd& wk) const {
    return agent(k).cost.gradient(wk);
}

Eigen::MatrixXd SharingProblem::stacked_coupling_matrix() const {
    Eigen::MatrixXd out(coupling_dim_, total_dim_);
    for (int k = 0; k < num_agents(); ++k) {
        out.middleCols(block_offset(k), block_dim(k)) = agent(k).B;
    }
    return out;
}

Eigen::VectorXd SharingProblem::coupling_sum(const Eigen::VectorXd& w) const {
    check_dim(w, total_dim_, "SharingProblem::coupling_sum");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(coupling_dim_);
    for (int k = 0; k < num_agents(); ++k) {
        out += agent(k).B * w.segment(block_offset(k), block_dim(k));
    }
    return out;
}

Eigen::VectorXd SharingProblem::coupling_apply(const Eigen::VectorXd& w) const {
    check_dim(w, total_dim_, "SharingProblem::coupling_apply");
    Eigen::VectorXd out(static_cast<Eigen::Index>(coupling_dim_) * num_agents());
    for (int k = 0; k < num_agents(); ++k) {
        out.segment(static_cast<Eigen::Index>(k) * coupling_dim_, coupling_dim_) =
            agent(k).B * w.segment(block_offset(k), block_dim(k));
    }
    return out;
}

Eigen::VectorXd SharingProblem::coupling_apply_adjoint(const Eigen::VectorXd& y) const {
    check_dim(y, coupling_dim_ * num_agents(), "SharingProblem::coupling_apply_adjoint");
    Eigen::VectorXd out(total_dim_);
    for (int k = 0; k < num_agents(); ++k) {
        out.segment(block_offset(k), block_dim(k)) =
            agent(k).B.transpose() * y.segment(static_cast<Eigen::Index>(k) * coupling_dim_, coupling_dim_);
    }
    return out;
}

bool SharingProblem::all_quadratic() const {
    for (const AgentSpec& a : agents_) {
        if (a.cost.quadratic_data() == nullptr) return false;
    }
    return true;
}

Eigen::VectorXd SharingProblem::unconstrained_minimizer() const {
    if (!all_quadratic()) {
        throw std::invalid_argument("unconstrained_minimizer: requires quadratic costs");
    }
    Eigen::VectorXd out(total_dim_);
    for (int k = 0; k < num_agents(); ++k) {
        const QuadraticCost* q = agent(k).cost.quadratic_data();
        out.segment(block_offset(k), block_dim(k)) = q->R.ldlt().solve(-q->r);
    }
    return out;
}

Assumption1Report check_assumption1(const SharingProblem& problem,
                                    const Eigen::VectorXd* reference_w) {
    Assumption1Report rep;
    const Moduli m = problem.aggregate_moduli();
    rep.nu = m.nu;
    rep.delta = m.delta;
    rep.moduli_ok = m.nu > 0.0 && m.nu <= m.delta;
    std::ostringstream detail;
    if (!rep.moduli_ok) {
        detail << "aggregate moduli violate 0 < nu <= delta (nu=" << m.nu
               << ", delta=" << m.delta << "); ";
    }

    const CouplingKind kind = problem.coupling().kind();
    if (kind == CouplingKind::kEquality || kind == CouplingKind::kUpperBound) {
        const Eigen::MatrixXd stacked = problem.stacked_coupling_matrix();
        const SymmetricEigen gram = jacobi_eigen(Eigen::MatrixXd(stacked * stacked.transpose()));
        const double gmin = gram.values(0);
        const double gmax = gram.values(gram.values.size() - 1);
        if (gmin > 1e-10 * gmax) {
            // stacked B surjective: every coupling value is reachable
            rep.relint_ok = true;
        } else {
            Eigen::VectorXd ref;
            if (reference_w != nullptr) {
                ref = *reference_w;
            } else if (problem.all_quadratic()) {
                ref = problem.unconstrained_minimizer();
            } else {
                rep.relint_ok = false;
                detail << "stacked coupling matrix is row-rank deficient and no "
                          "reference point is available; ";
            }
            if (ref.size() == problem.total_dim()) {
                const Eigen::VectorXd coupled = problem.coupling_sum(ref);
                const Eigen::VectorXd& b = problem.coupling().bound();
                if (kind == CouplingKind::kUpperBound) {
                    rep.relint_ok = ((b - coupled).minCoeff() > 0.0);
                    if (!rep.relint_ok) detail << "reference point is not strictly feasible; ";
                } else {
                    rep.relint_ok = ((coupled - b).cwiseAbs().maxCoeff() <= 1e-9);
                    if (!rep.relint_ok) detail << "reference point does not reach the equality target; ";
                }
            }
        }
    } else {
        // finite-valued coupling: the domain condition is vacuous
        rep.relint_ok = true;
    }

    rep.ok = rep.moduli_ok && rep.relint_ok;
    rep.detail = detail.str();
    return rep;
}

bool spot_check_moduli(const SmoothCost& cost, int samples, std::uint64_t seed) {
    Rng rng(seed);
    const int n = cost.dim();
    for (int t = 0; t < samples; ++t) {
        Eigen::VectorXd a(n), b(n);
        for (int i = 0; i < n; ++i) a(i) = rng.normal();
        for (int i = 0; i < n; ++i) b(i) = rng.normal();
        const Eigen::VectorXd diff = a - b;
        const double d2 = diff.squaredNorm();
        if (d2 == 0.0) continue;
        const Eigen::VectorXd grad_gap = cost.gradient(a) - cost.gradient(b);
        const double inner = diff.dot(grad_gap);
        const double slack = 1e-9 * std::max(1.0, d2);
        if (inner < cost.nu() * d2 - slack) return false;
        if (grad_gap.norm() > cost.delta() * std::sqrt(d2) + slack) return false;
    }
    return true;
}

}  // namespace ped2
