#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ped2 {

/// Quadratic cost 0.5 * w^T R w + r^T w with R symmetric positive definite.
struct QuadraticCost {
    Eigen::MatrixXd R;
    Eigen::VectorXd r;

    double value(const Eigen::VectorXd& w) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
    int dim() const { return static_cast<int>(r.size()); }
};

/// Smooth local cost with declared strong-convexity (nu) and smoothness
/// (delta) moduli. For quadratic costs the moduli are the extreme
/// eigenvalues of R; for generic oracles they are caller-asserted.
class SmoothCost {
public:
    using ValueFn = std::function<double(const Eigen::VectorXd&)>;
    using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

    static SmoothCost quadratic(QuadraticCost cost);
    static SmoothCost generic(int dim, double nu, double delta, ValueFn value, GradFn gradient);

    int dim() const { return dim_; }
    double nu() const { return nu_; }
    double delta() const { return delta_; }

    double value(const Eigen::VectorXd& w) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;

    /// Non-null only for costs built from QuadraticCost.
    const QuadraticCost* quadratic_data() const { return quad_.get(); }

private:
    SmoothCost() = default;

    int dim_ = 0;
    double nu_ = 0.0;
    double delta_ = 0.0;
    ValueFn value_;
    GradFn grad_;
    std::shared_ptr<const QuadraticCost> quad_;
};

enum class CouplingKind { kZero, kEquality, kUpperBound, kL1, kGeneric };

/// Convex (possibly non-smooth, extended-valued) coupling function g acting
/// on the aggregated quantity sum_k B_k w_k. Only proximal evaluations are
/// exposed; the conjugate prox is what the dual updates consume.
class CouplingFunction {
public:
    /// prox(tau, v) = argmin_u f(u) + ||v - u||^2 / (2 tau)
    using ProxFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

    static CouplingFunction zero(int dim);
    static CouplingFunction equality(Eigen::VectorXd b);           // g = indicator of {x == b}
    static CouplingFunction upper_bound(Eigen::VectorXd b);        // g = indicator of {x <= b}
    static CouplingFunction l1_norm(int dim, double weight);       // g = weight * ||x||_1
    static CouplingFunction generic(int dim, ProxFn prox);

    CouplingKind kind() const { return kind_; }
    int dim() const { return dim_; }
    const Eigen::VectorXd& bound() const;
    double l1_weight() const;

    Eigen::VectorXd prox(double tau, const Eigen::VectorXd& v) const;

    /// prox of the conjugate, prox_{tau g*}(v). Closed forms for the
    /// built-in kinds; Moreau decomposition for generic proxes.
    Eigen::VectorXd conjugate_prox(double tau, const Eigen::VectorXd& v) const;

private:
    CouplingFunction() = default;

    CouplingKind kind_ = CouplingKind::kZero;
    int dim_ = 0;
    Eigen::VectorXd b_;
    double weight_ = 0.0;
    ProxFn prox_;
};

/// Conjugate prox through the Moreau identity,
/// prox_{tau g*}(v) = v - tau * prox_{g/tau}(v / tau).
/// Works for every kind; the built-in closed forms must agree with it.
Eigen::VectorXd moreau_conjugate_prox(const CouplingFunction& g, double tau,
                                      const Eigen::VectorXd& v);

/// One agent's private data: its smooth cost and coupling matrix (E x Q_k).
struct AgentSpec {
    SmoothCost cost;
    Eigen::MatrixXd B;
};

struct Moduli {
    double nu = 0.0;
    double delta = 0.0;
};

/// K agents with disjoint variable blocks, coupled only through
/// g(sum_k B_k w_k). Immutable after construction.
class SharingProblem {
public:
    SharingProblem(std::vector<AgentSpec> agents, CouplingFunction g);

    int num_agents() const { return static_cast<int>(agents_.size()); }
    int coupling_dim() const { return coupling_dim_; }         // E
    int total_dim() const { return total_dim_; }               // Q = sum Q_k
    int block_dim(int k) const;
    int block_offset(int k) const;
    const AgentSpec& agent(int k) const;
    const CouplingFunction& coupling() const { return g_; }

    double smooth_value(const Eigen::VectorXd& w) const;
    Eigen::VectorXd smooth_gradient(const Eigen::VectorXd& w) const;
    Eigen::VectorXd block_gradient(int k, const Eigen::VectorXd& wk) const;

    /// nu = min_k nu_k, delta = max_k delta_k (block-diagonal Hessian).
    Moduli aggregate_moduli() const { return moduli_; }

    Eigen::MatrixXd stacked_coupling_matrix() const;                    // [B_1 ... B_K]
    Eigen::VectorXd coupling_sum(const Eigen::VectorXd& w) const;       // sum_k B_k w_k
    Eigen::VectorXd coupling_apply(const Eigen::VectorXd& w) const;     // per-agent B_k w_k, stacked
    Eigen::VectorXd coupling_apply_adjoint(const Eigen::VectorXd& y) const;  // per-agent B_k^T y_k

    double sigma_max_coupling() const { return sigma_max_; }            // max_k sigma_max(B_k)
    double lambda_min_coupling_gram() const { return lambda_min_gram_; }  // min_k lambda_min(B_k B_k^T)
    bool full_row_rank_blocks() const { return full_row_rank_; }

    bool all_quadratic() const;
    /// Blockwise minimizer of the smooth part; quadratic costs only.
    Eigen::VectorXd unconstrained_minimizer() const;

private:
    std::vector<AgentSpec> agents_;
    CouplingFunction g_;
    int coupling_dim_ = 0;
    int total_dim_ = 0;
    std::vector<int> offsets_;
    Moduli moduli_;
    double sigma_max_ = 0.0;
    double lambda_min_gram_ = 0.0;
    bool full_row_rank_ = false;
};

struct Assumption1Report {
    bool ok = false;
    double nu = 0.0;
    double delta = 0.0;
    bool moduli_ok = false;
    bool relint_ok = false;
    std::string detail;
};

/// Operational check of the objective assumptions: positive aggregate
/// strong convexity and reachability of the coupling function's relative
/// interior. For indicator couplings a full-row-rank stacked B settles
/// reachability; otherwise a reference point is tested directly
/// (the unconstrained minimizer when all costs are quadratic).
Assumption1Report check_assumption1(const SharingProblem& problem,
                                    const Eigen::VectorXd* reference_w = nullptr);

/// Samples random pairs and verifies the declared (nu, delta) of a generic
/// cost against the strong-convexity and smoothness inequalities.
bool spot_check_moduli(const SmoothCost& cost, int samples, std::uint64_t seed);

}  // namespace ped2
