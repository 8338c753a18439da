#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ped2/graph.hpp"
#include "ped2/problem.hpp"
#include "ped2/solvers.hpp"

namespace ped2 {

/// Recipe for a randomly generated sharing instance. Identical specs (same
/// seeds) reproduce the instance bit for bit.
struct ExperimentSpec {
    enum class CouplingMatrixKind { kIdentity, kRandom };

    int K = 20;
    int Qk = 10;  // uniform per-agent dimension
    int E = 10;
    CouplingKind coupling = CouplingKind::kUpperBound;
    double l1_weight = 1.0;
    CouplingMatrixKind b_kind = CouplingMatrixKind::kIdentity;
    std::uint64_t graph_seed = 7;
    double edge_prob = 0.3;
    std::uint64_t cost_seed = 13;
    bool auto_step_sizes = true;
    double mu_w = 0.0;  // used when auto_step_sizes is false
    double mu_y = 0.0;
    long max_iter = 2000;
    double stop_tol = 1e-12;
    SolverMode mode = SolverMode::kPed2;
};

/// Defaults for the bundled demonstration: the 20-agent resource-sharing
/// instance with fixed steps mu_w = 0.03, mu_y = 2.
ExperimentSpec demo_spec();

struct Instance {
    SharingProblem problem;
    Topology topology;
};

/// Draws the instance: costs R_k = M^T M + I (M standard normal) and normal
/// r_k, bound entries uniform in (0, 1), coupling matrices identity or
/// conditioned random full-row-rank blocks.
Instance generate_instance(const ExperimentSpec& spec);

/// Solver configuration implied by a spec (auto steps or the explicit pair).
SolverConfig config_from_spec(const ExperimentSpec& spec, const SharingProblem& problem);

struct OracleSolution {
    Eigen::VectorXd w_star;       // Q
    Eigen::VectorXd y_star;       // E
    std::vector<int> active_set;  // tight inequality rows
    double kkt_residual = 0.0;
    double objective = 0.0;
};

/// Exact ground truth by active-set enumeration: for each subset S of
/// coupling rows, solves the equality-constrained stationarity system and
/// keeps the feasible candidate with dual-sign admissibility and minimal
/// objective. Quadratic costs and zero/equality/upper-bound couplings only;
/// the coupling dimension must not exceed 16.
OracleSolution qp_oracle(const SharingProblem& problem);

/// qp_oracle when applicable, otherwise a long centralized run with
/// certified steps (stop tolerance 1e-13, budget fallback_iters).
OracleSolution ground_truth(const SharingProblem& problem, long fallback_iters);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

/// Ordinary least squares of ln(error) against the iteration index over the
/// last tail_fraction of the iterations whose error sits above the 1e-24
/// floor. Requires at least 20 usable tail points.
RateFit fit_rate(const std::vector<double>& sq_errors, double tail_fraction = 0.5);

struct TraceRow {
    long iter = 0;  // -1 holds the initial state
    double sq_err_w = 0.0;
    double sq_err_y = 0.0;
    double lyapunov_v = 0.0;
    double bound_gamma_pow_i_Co = 0.0;
};

struct SolveTrace {
    std::vector<TraceRow> rows;
    long iterations = 0;
    Eigen::VectorXd final_w;
    double final_sq_err = 0.0;
};

/// Optional references that enrich a trace: squared errors and Lyapunov
/// values need a fixed point; the bound column needs a certified rate; the
/// decentralized run reconstructs the auxiliary variable through L for
/// diagnostics only (the algorithm itself never touches it).
struct RunDiagnostics {
    const FixedPoint* fixed_point = nullptr;
    const RateReport* rate = nullptr;
    const Eigen::MatrixXd* L = nullptr;
};

SolveTrace run_ped2_traced(const SharingProblem& problem, const CombinationSet& cs,
                           const SolverConfig& config, const RunDiagnostics& diag = {});
SolveTrace run_general_traced(const SharingProblem& problem, const CombinationSet& cs,
                              const Eigen::MatrixXd& L, const SolverConfig& config,
                              const RunDiagnostics& diag = {});
SolveTrace run_centralized_traced(const SharingProblem& problem, const SolverConfig& config,
                                  const RunDiagnostics& diag = {});

struct RunSummary {
    std::string solver;
    long iterations = 0;
    double final_sq_err = 0.0;
    long iters_to_target = -1;  // first iteration with squared error <= 1e-10
    double fitted_slope = 0.0;
    double fitted_intercept = 0.0;
    double r_squared = 0.0;
    int fit_points = 0;
    double log_gamma = 0.0;  // NaN unless certified
};

RunSummary summarize_run(const std::string& solver, const SolveTrace& trace,
                         const RateReport* rate, double tail_fraction = 0.5);

struct Comparison {
    Instance instance;
    OracleSolution truth;
    FixedPoint fixed_point;
    RateReport rate;
    SolverConfig config;
    SolveTrace ped2_trace;
    SolveTrace central_trace;
    RunSummary ped2_summary;
    RunSummary central_summary;
};

/// Full side-by-side run of the decentralized solver and the centralized
/// baseline from zero initialization with shared step sizes.
Comparison run_comparison(const ExperimentSpec& spec);

}  // namespace ped2
