#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ped2/graph.hpp"
#include "ped2/problem.hpp"

namespace ped2 {

enum class SolverMode { kPed2, kGeneralForm, kCentralized };

struct SolverConfig {
    double mu_w = 0.0;        // primal step
    double mu_y = 0.0;        // dual step
    long max_iter = 1000;
    double stop_tol = 1e-12;  // infinity-norm change of w; 0 disables early stop
    std::uint64_t seed = 0;
    SolverMode mode = SolverMode::kPed2;
};

/// Raised when an iterate leaves the finite range (norm above 1e12 or NaN).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(long iteration, const std::string& message)
        : std::runtime_error(message), iteration_(iteration) {}
    long iteration() const { return iteration_; }

private:
    long iteration_;
};

struct AgentState {
    Eigen::VectorXd w;    // primal block (Q_k)
    Eigen::VectorXd y;    // local dual copy (E)
    Eigen::VectorXd psi;  // dual pre-combination value (E)
    Eigen::VectorXd phi;  // combined neighborhood value (E)
    Eigen::VectorXd z;    // exchanged message (E)
};

struct NetworkState {
    std::vector<AgentState> agents;
    Eigen::VectorXd x;  // auxiliary stacked vector (E*K); only the general form uses it
    long iter = 0;
};

Eigen::VectorXd stacked_primal(const NetworkState& state, const SharingProblem& problem);
Eigen::VectorXd stacked_dual(const NetworkState& state);
Eigen::VectorXd stacked_message(const NetworkState& state);

/// Records which agents' messages each agent read during the exchange round.
struct NeighborAccessLog {
    std::vector<std::pair<int, int>> reads;  // (reader, source)
    void record(int reader, int source) { reads.emplace_back(reader, source); }
    void clear() { reads.clear(); }
};

/// Fresh decentralized state: w and y from the given stacked vectors (zeros
/// when omitted), psi and phi zeroed so the first exchanged message equals
/// y + mu_y * B_k * w_new.
NetworkState ped2_init(const SharingProblem& problem, const CombinationSet& cs,
                       const SolverConfig& config, const Eigen::VectorXd* w_init = nullptr,
                       const Eigen::VectorXd* y_init = nullptr);

/// One synchronous round of the decentralized recursion: per-agent primal
/// descent, message formation, exactly one neighbor exchange weighted by
/// Abar, then the scaled conjugate prox (step mu_y / K). Each agent touches
/// only its own state and its neighbors' messages.
void ped2_step(NetworkState& state, const SharingProblem& problem, const CombinationSet& cs,
               const SolverConfig& config, NeighborAccessLog* log = nullptr);

/// State for the unreduced recursion with the explicit auxiliary variable
/// (x starts at zero and stays in the range space of the consensus matrix).
NetworkState general_init(const SharingProblem& problem, const CombinationSet& cs,
                          const SolverConfig& config, const Eigen::VectorXd* w_init = nullptr,
                          const Eigen::VectorXd* y_init = nullptr);

/// One step of the unreduced primal-dual recursion, using the materialized
/// consensus matrix L. Produces the same (w, y) iterates as ped2_step.
void general_step(NetworkState& state, const SharingProblem& problem, const CombinationSet& cs,
                  const Eigen::MatrixXd& L, const SolverConfig& config);

struct CentralState {
    Eigen::VectorXd w;       // Q
    Eigen::VectorXd lambda;  // E
    long iter = 0;
};

CentralState centralized_init(const SharingProblem& problem, const Eigen::VectorXd* w_init = nullptr,
                              const Eigen::VectorXd* lambda_init = nullptr);

/// Linearized prox-ascent baseline on the assembled problem: gradient step
/// on w, then lambda <- prox_{mu_y g*}(lambda + mu_y B w). Note the prox
/// step is mu_y here, not mu_y / K.
void centralized_step(CentralState& state, const SharingProblem& problem,
                      const Eigen::MatrixXd& stacked_B, const SolverConfig& config);

struct StepSizeBounds {
    double mu_w_max = 0.0;  // closed bound: mu_w <= mu_w_max
    double mu_y_sup = 0.0;  // open bound: mu_y < mu_y_sup
};

/// Certified step-size region: mu_w_max = 2 / (delta + nu) and
/// mu_y_sup = 2 delta nu / ((delta + nu) sigma_max^2(B_d)).
StepSizeBounds step_size_bounds(const SharingProblem& problem);

/// Fills in mu_w = mu_w_max and mu_y = 0.99 * mu_y_sup (the open bound
/// needs a safety factor).
SolverConfig auto_steps(const SharingProblem& problem, SolverConfig base);

/// Stationary tuple of the recursion, built from a centralized optimal pair
/// and verified against the fixed-point conditions.
struct FixedPoint {
    Eigen::VectorXd w_star;  // Q
    Eigen::VectorXd y_star;  // E
    Eigen::VectorXd w_o;     // Q (equals w_star)
    Eigen::VectorXd y_o;     // E*K, consensus replication of y_star
    Eigen::VectorXd z_o;     // E*K, consensus
    Eigen::VectorXd x_o;     // E*K, in the range space of the consensus matrix
    double residual_stationarity = 0.0;
    double residual_message = 0.0;
    double residual_consensus = 0.0;
    double residual_prox = 0.0;
    double max_residual() const;
};

/// Constructs the fixed point from an optimal pair (w_star, y_star): the
/// dual blocks replicate y_star, the message blocks replicate
/// y_star + (mu_y / K) * B * w_star, and x solves the message equation by
/// least squares inside the range of L. Throws when the pair fails the
/// optimality residuals (1e-8) or the constructed tuple fails the
/// fixed-point residuals (1e-9).
FixedPoint build_fixed_point(const SharingProblem& problem, const CombinationSet& cs,
                             const Eigen::MatrixXd& L, const SolverConfig& config,
                             const Eigen::VectorXd& w_star, const Eigen::VectorXd& y_star);

/// Network states that embed the fixed point for each solver form; one step
/// from these must be a no-op.
NetworkState ped2_state_at(const FixedPoint& fp, const SharingProblem& problem,
                           const SolverConfig& config);
NetworkState general_state_at(const FixedPoint& fp, const SharingProblem& problem);

struct RateReport {
    double nu = 0.0;
    double delta = 0.0;
    double sigma_max_Bd = 0.0;
    double lambda_min_BdBdT = 0.0;
    double sigma_min_L = 0.0;  // NaN when K == 1
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double gamma3 = 0.0;
    double gamma = 0.0;
    double C_o = 0.0;          // NaN unless a fixed point was supplied
    bool certified = false;
    std::vector<std::string> reasons;  // populated when not certified
};

/// Contraction-factor certificate. Verifies the hypotheses (positive
/// aggregate strong convexity, full-row-rank coupling blocks, the
/// combination-matrix conditions, and the step-size region) and evaluates
/// gamma1..gamma3. When a fixed point and the run's initial vectors are
/// supplied, also evaluates the trajectory constant C_o (x starts at zero).
RateReport rate_report(const SharingProblem& problem, const CombinationSet& cs,
                       const SolverConfig& config, const FixedPoint* fp = nullptr,
                       const Eigen::VectorXd* w_init = nullptr,
                       const Eigen::VectorXd* y_init = nullptr);

/// Recorded trajectory of the unreduced recursion; index i holds the state
/// after step i, with the pre-step values kept separately.
struct GeneralRun {
    Eigen::VectorXd w_init, y_init, x_init;
    std::vector<Eigen::VectorXd> w, y, z, x;
    long iterations = 0;
};

GeneralRun run_general_recorded(const SharingProblem& problem, const CombinationSet& cs,
                                const Eigen::MatrixXd& L, const SolverConfig& config,
                                const Eigen::VectorXd* w_init = nullptr,
                                const Eigen::VectorXd* y_init = nullptr);

// Weighted error norms of the contraction analysis.
double weighted_primal_sq(const SharingProblem& problem, const SolverConfig& config,
                          const Eigen::VectorXd& w_tilde);
double weighted_dual_sq(const SharingProblem& problem, const SolverConfig& config,
                        const Eigen::VectorXd& y_tilde);
double quad_form_Abar(const CombinationSet& cs, const Eigen::VectorXd& v);

/// Per-iteration defect of the exact energy identity relating consecutive
/// iterates of the unreduced recursion; returns max_i |lhs - rhs| / (1 + |rhs|).
double energy_identity_max_violation(const GeneralRun& run, const FixedPoint& fp,
                                     const SharingProblem& problem, const CombinationSet& cs,
                                     const SolverConfig& config);

/// Lyapunov values V_{-1}, V_0, ..., V_{N-1} along a recorded run; a
/// certified run must satisfy V_i <= gamma * V_{i-1}.
std::vector<double> lyapunov_sequence(const GeneralRun& run, const FixedPoint& fp,
                                      const SharingProblem& problem, const SolverConfig& config);

}  // namespace ped2
