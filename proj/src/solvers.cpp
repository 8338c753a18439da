#include "ped2/solvers.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ped2/linalg.hpp"

namespace ped2 {

namespace {

constexpr double kDivergenceNorm = 1e12;

void require_positive_steps(const SolverConfig& config) {
    if (!(config.mu_w > 0.0) || !(config.mu_y > 0.0)) {
        throw std::invalid_argument("SolverConfig: mu_w and mu_y must be positive");
    }
}

void require_matching(const SharingProblem& problem, const CombinationSet& cs) {
    if (cs.K != problem.num_agents()) {
        throw std::invalid_argument("solver: combination set and problem disagree on agent count");
    }
}

void check_finite(const NetworkState& state, long iteration) {
    for (const AgentState& a : state.agents) {
        const bool bad = !a.w.allFinite() || !a.y.allFinite() || !a.z.allFinite() ||
                         a.w.lpNorm<Eigen::Infinity>() > kDivergenceNorm ||
                         a.y.lpNorm<Eigen::Infinity>() > kDivergenceNorm;
        if (bad) {
            std::ostringstream msg;
            msg << "solver diverged at iteration " << iteration;
            throw DivergenceError(iteration, msg.str());
        }
    }
    if (state.x.size() > 0 &&
        (!state.x.allFinite() || state.x.lpNorm<Eigen::Infinity>() > kDivergenceNorm)) {
        std::ostringstream msg;
        msg << "solver diverged at iteration " << iteration;
        throw DivergenceError(iteration, msg.str());
    }
}

NetworkState init_state(const SharingProblem& problem, const CombinationSet& cs,
                        const SolverConfig& config, const Eigen::VectorXd* w_init,
                        const Eigen::VectorXd* y_init, bool with_aux) {
    require_positive_steps(config);
    require_matching(problem, cs);
    const int K = problem.num_agents();
    const int E = problem.coupling_dim();
    if (w_init != nullptr && w_init->size() != problem.total_dim()) {
        throw std::invalid_argument("solver init: w_init has wrong dimension");
    }
    if (y_init != nullptr && y_init->size() != static_cast<Eigen::Index>(E) * K) {
        throw std::invalid_argument("solver init: y_init has wrong dimension");
    }

    NetworkState state;
    state.agents.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        AgentState& a = state.agents[static_cast<std::size_t>(k)];
        a.w = w_init != nullptr ? w_init->segment(problem.block_offset(k), problem.block_dim(k))
                                : Eigen::VectorXd::Zero(problem.block_dim(k));
        a.y = y_init != nullptr ? y_init->segment(static_cast<Eigen::Index>(k) * E, E)
                                : Eigen::VectorXd::Zero(E);
        a.psi = Eigen::VectorXd::Zero(E);
        a.phi = Eigen::VectorXd::Zero(E);
        a.z = Eigen::VectorXd::Zero(E);
    }
    state.x = with_aux ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(E) * K)
                       : Eigen::VectorXd();
    state.iter = 0;
    return state;
}

void scatter_dual(NetworkState& state, const Eigen::VectorXd& stacked, int E,
                  Eigen::VectorXd AgentState::*field) {
    for (std::size_t k = 0; k < state.agents.size(); ++k) {
        state.agents[k].*field = stacked.segment(static_cast<Eigen::Index>(k) * E, E);
    }
}

}  // namespace

Eigen::VectorXd stacked_primal(const NetworkState& state, const SharingProblem& problem) {
    Eigen::VectorXd out(problem.total_dim());
    for (int k = 0; k < problem.num_agents(); ++k) {
        out.segment(problem.block_offset(k), problem.block_dim(k)) =
            state.agents[static_cast<std::size_t>(k)].w;
    }
    return out;
}

Eigen::VectorXd stacked_dual(const NetworkState& state) {
    const Eigen::Index E = state.agents.empty() ? 0 : state.agents.front().y.size();
    Eigen::VectorXd out(E * static_cast<Eigen::Index>(state.agents.size()));
    for (std::size_t k = 0; k < state.agents.size(); ++k) {
        out.segment(static_cast<Eigen::Index>(k) * E, E) = state.agents[k].y;
    }
    return out;
}

Eigen::VectorXd stacked_message(const NetworkState& state) {
    const Eigen::Index E = state.agents.empty() ? 0 : state.agents.front().z.size();
    Eigen::VectorXd out(E * static_cast<Eigen::Index>(state.agents.size()));
    for (std::size_t k = 0; k < state.agents.size(); ++k) {
        out.segment(static_cast<Eigen::Index>(k) * E, E) = state.agents[k].z;
    }
    return out;
}

NetworkState ped2_init(const SharingProblem& problem, const CombinationSet& cs,
                       const SolverConfig& config, const Eigen::VectorXd* w_init,
                       const Eigen::VectorXd* y_init) {
    return init_state(problem, cs, config, w_init, y_init, /*with_aux=*/false);
}

void ped2_step(NetworkState& state, const SharingProblem& problem, const CombinationSet& cs,
               const SolverConfig& config, NeighborAccessLog* log) {
    require_positive_steps(config);
    require_matching(problem, cs);
    const int K = problem.num_agents();
    const int E = problem.coupling_dim();
    const long iteration = state.iter;

    // Local phase: each agent updates w, forms psi, and posts its message z
    // from its own state only.
    for (int k = 0; k < K; ++k) {
        AgentState& a = state.agents[static_cast<std::size_t>(k)];
        const Eigen::MatrixXd& B = problem.agent(k).B;
        const Eigen::VectorXd w_new =
            a.w - config.mu_w * (problem.block_gradient(k, a.w) + B.transpose() * a.y);
        const Eigen::VectorXd psi_new = a.y + config.mu_y * (B * w_new);
        a.z = a.phi + psi_new - a.psi;
        a.w = w_new;
        a.psi = psi_new;
    }

    // Exchange round: agent k combines the messages of its neighborhood with
    // the weights of the combination matrix.
    std::vector<Eigen::VectorXd> combined(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(E);
        for (int s : cs.neighbors[static_cast<std::size_t>(k)]) {
            if (log != nullptr) log->record(k, s);
            acc += cs.Abar(s, k) * state.agents[static_cast<std::size_t>(s)].z;
        }
        combined[static_cast<std::size_t>(k)] = std::move(acc);
    }

    // Dual prox with the agentwise step mu_y / K.
    const double tau = config.mu_y / K;
    for (int k = 0; k < K; ++k) {
        AgentState& a = state.agents[static_cast<std::size_t>(k)];
        a.phi = combined[static_cast<std::size_t>(k)];
        a.y = problem.coupling().conjugate_prox(tau, a.phi);
    }

    state.iter = iteration + 1;
    check_finite(state, iteration);
}

NetworkState general_init(const SharingProblem& problem, const CombinationSet& cs,
                          const SolverConfig& config, const Eigen::VectorXd* w_init,
                          const Eigen::VectorXd* y_init) {
    return init_state(problem, cs, config, w_init, y_init, /*with_aux=*/true);
}

void general_step(NetworkState& state, const SharingProblem& problem, const CombinationSet& cs,
                  const Eigen::MatrixXd& L, const SolverConfig& config) {
    require_positive_steps(config);
    require_matching(problem, cs);
    if (state.x.size() != static_cast<Eigen::Index>(problem.coupling_dim()) * problem.num_agents()) {
        throw std::invalid_argument("general_step: state has no auxiliary vector; use general_init");
    }
    const int K = problem.num_agents();
    const int E = problem.coupling_dim();
    const long iteration = state.iter;

    const Eigen::VectorXd w = stacked_primal(state, problem);
    const Eigen::VectorXd y = stacked_dual(state);

    const Eigen::VectorXd w_new =
        w - config.mu_w * (problem.smooth_gradient(w) + problem.coupling_apply_adjoint(y));
    const Eigen::VectorXd z_new =
        y + config.mu_y * problem.coupling_apply(w_new) + apply_block_matrix(L, state.x, E);
    state.x -= apply_block_matrix(L, z_new, E);
    const Eigen::VectorXd combined = apply_block_matrix(cs.Abar, z_new, E);

    const double tau = config.mu_y / K;
    for (int k = 0; k < K; ++k) {
        AgentState& a = state.agents[static_cast<std::size_t>(k)];
        a.w = w_new.segment(problem.block_offset(k), problem.block_dim(k));
        a.z = z_new.segment(static_cast<Eigen::Index>(k) * E, E);
        a.y = problem.coupling().conjugate_prox(
            tau, combined.segment(static_cast<Eigen::Index>(k) * E, E));
    }

    state.iter = iteration + 1;
    check_finite(state, iteration);
}

CentralState centralized_init(const SharingProblem& problem, const Eigen::VectorXd* w_init,
                              const Eigen::VectorXd* lambda_init) {
    CentralState st;
    st.w = w_init != nullptr ? *w_init : Eigen::VectorXd::Zero(problem.total_dim());
    st.lambda = lambda_init != nullptr ? *lambda_init
                                       : Eigen::VectorXd::Zero(problem.coupling_dim());
    if (st.w.size() != problem.total_dim() || st.lambda.size() != problem.coupling_dim()) {
        throw std::invalid_argument("centralized_init: initial vectors have wrong dimensions");
    }
    st.iter = 0;
    return st;
}

void centralized_step(CentralState& state, const SharingProblem& problem,
                      const Eigen::MatrixXd& stacked_B, const SolverConfig& config) {
    require_positive_steps(config);
    const long iteration = state.iter;
    state.w -= config.mu_w * (problem.smooth_gradient(state.w) + stacked_B.transpose() * state.lambda);
    state.lambda = problem.coupling().conjugate_prox(
        config.mu_y, state.lambda + config.mu_y * (stacked_B * state.w));
    state.iter = iteration + 1;

    const bool bad = !state.w.allFinite() || !state.lambda.allFinite() ||
                     state.w.lpNorm<Eigen::Infinity>() > kDivergenceNorm ||
                     state.lambda.lpNorm<Eigen::Infinity>() > kDivergenceNorm;
    if (bad) {
        std::ostringstream msg;
        msg << "centralized solver diverged at iteration " << iteration;
        throw DivergenceError(iteration, msg.str());
    }
}

StepSizeBounds step_size_bounds(const SharingProblem& problem) {
    const Moduli m = problem.aggregate_moduli();
    if (!(m.nu > 0.0)) {
        throw std::invalid_argument("step_size_bounds: aggregate cost is not strongly convex");
    }
    const double sigma = problem.sigma_max_coupling();
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("step_size_bounds: all coupling matrices are zero");
    }
    StepSizeBounds b;
    b.mu_w_max = 2.0 / (m.delta + m.nu);
    b.mu_y_sup = 2.0 * m.delta * m.nu / ((m.delta + m.nu) * sigma * sigma);
    return b;
}

SolverConfig auto_steps(const SharingProblem& problem, SolverConfig base) {
    const StepSizeBounds b = step_size_bounds(problem);
    base.mu_w = b.mu_w_max;
    base.mu_y = 0.99 * b.mu_y_sup;
    return base;
}

double FixedPoint::max_residual() const {
    return std::max(std::max(residual_stationarity, residual_message),
                    std::max(residual_consensus, residual_prox));
}

FixedPoint build_fixed_point(const SharingProblem& problem, const CombinationSet& cs,
                             const Eigen::MatrixXd& L, const SolverConfig& config,
                             const Eigen::VectorXd& w_star, const Eigen::VectorXd& y_star) {
    require_positive_steps(config);
    require_matching(problem, cs);
    const int K = problem.num_agents();
    const int E = problem.coupling_dim();
    if (w_star.size() != problem.total_dim() || y_star.size() != E) {
        throw std::invalid_argument("build_fixed_point: optimal pair has wrong dimensions");
    }

    // The pair must satisfy the centralized optimality conditions: gradient
    // stationarity and the prox characterization of B w in the conjugate
    // subdifferential.
    const Eigen::MatrixXd B = problem.stacked_coupling_matrix();
    const Eigen::VectorXd coupled = problem.coupling_sum(w_star);
    const double stat =
        (problem.smooth_gradient(w_star) + B.transpose() * y_star).lpNorm<Eigen::Infinity>();
    const double tau0 = config.mu_y / K;
    const double prox_res =
        (y_star - problem.coupling().conjugate_prox(tau0, y_star + tau0 * coupled))
            .lpNorm<Eigen::Infinity>();
    if (stat > 1e-8 || prox_res > 1e-8) {
        std::ostringstream msg;
        msg << "build_fixed_point: (w*, y*) fails optimality (stationarity=" << stat
            << ", prox residual=" << prox_res << ")";
        throw std::invalid_argument(msg.str());
    }

    FixedPoint fp;
    fp.w_star = w_star;
    fp.y_star = y_star;
    fp.w_o = w_star;
    fp.y_o.resize(static_cast<Eigen::Index>(E) * K);
    fp.z_o.resize(static_cast<Eigen::Index>(E) * K);
    const Eigen::VectorXd z_block = y_star + (config.mu_y / K) * coupled;
    for (int k = 0; k < K; ++k) {
        fp.y_o.segment(static_cast<Eigen::Index>(k) * E, E) = y_star;
        fp.z_o.segment(static_cast<Eigen::Index>(k) * E, E) = z_block;
    }

    // x solves L x = z - y - mu_y B_d w inside the range of L (pseudo-inverse
    // through the eigendecomposition of I - Abar).
    const Eigen::VectorXd rhs = fp.z_o - fp.y_o - config.mu_y * problem.coupling_apply(w_star);
    const SymmetricEigen eig = jacobi_eigen(L);
    const double top = eig.values(eig.values.size() - 1);
    Eigen::VectorXd inv(eig.values.size());
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        inv(i) = eig.values(i) > 1e-8 * std::max(top, 1.0) ? 1.0 / eig.values(i) : 0.0;
    }
    const Eigen::MatrixXd L_pinv = eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
    fp.x_o = apply_block_matrix(L_pinv, rhs, E);

    fp.residual_stationarity =
        (problem.smooth_gradient(fp.w_o) + problem.coupling_apply_adjoint(fp.y_o))
            .lpNorm<Eigen::Infinity>();
    fp.residual_message =
        (fp.z_o - fp.y_o - config.mu_y * problem.coupling_apply(fp.w_o) -
         apply_block_matrix(L, fp.x_o, E))
            .lpNorm<Eigen::Infinity>();
    fp.residual_consensus = apply_block_matrix(L, fp.z_o, E).lpNorm<Eigen::Infinity>();
    const Eigen::VectorXd combined = apply_block_matrix(cs.Abar, fp.z_o, E);
    double prox_fixed = 0.0;
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd yk = problem.coupling().conjugate_prox(
            tau0, combined.segment(static_cast<Eigen::Index>(k) * E, E));
        prox_fixed = std::max(prox_fixed, (yk - y_star).lpNorm<Eigen::Infinity>());
    }
    fp.residual_prox = prox_fixed;

    if (fp.max_residual() > 1e-9) {
        std::ostringstream msg;
        msg << "build_fixed_point: fixed-point residual " << fp.max_residual()
            << " exceeds 1e-9";
        throw std::invalid_argument(msg.str());
    }
    return fp;
}

NetworkState ped2_state_at(const FixedPoint& fp, const SharingProblem& problem,
                           const SolverConfig& config) {
    require_positive_steps(config);
    const int K = problem.num_agents();
    const int E = problem.coupling_dim();
    NetworkState state;
    state.agents.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        AgentState& a = state.agents[static_cast<std::size_t>(k)];
        a.w = fp.w_o.segment(problem.block_offset(k), problem.block_dim(k));
        a.y = fp.y_star;
        a.psi = fp.y_star + config.mu_y * (problem.agent(k).B * a.w);
        a.z = fp.z_o.segment(static_cast<Eigen::Index>(k) * E, E);
        a.phi = a.z;
    }
    state.iter = 0;
    return state;
}

NetworkState general_state_at(const FixedPoint& fp, const SharingProblem& problem) {
    const int K = problem.num_agents();
    const int E = problem.coupling_dim();
    NetworkState state;
    state.agents.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        AgentState& a = state.agents[static_cast<std::size_t>(k)];
        a.w = fp.w_o.segment(problem.block_offset(k), problem.block_dim(k));
        a.y = fp.y_star;
        a.z = fp.z_o.segment(static_cast<Eigen::Index>(k) * E, E);
        a.psi = Eigen::VectorXd::Zero(E);
        a.phi = Eigen::VectorXd::Zero(E);
    }
    state.x = fp.x_o;
    state.iter = 0;
    return state;
}

RateReport rate_report(const SharingProblem& problem, const CombinationSet& cs,
                       const SolverConfig& config, const FixedPoint* fp,
                       const Eigen::VectorXd* w_init, const Eigen::VectorXd* y_init) {
    require_matching(problem, cs);
    RateReport rep;
    const Moduli m = problem.aggregate_moduli();
    rep.nu = m.nu;
    rep.delta = m.delta;
    rep.sigma_max_Bd = problem.sigma_max_coupling();
    rep.lambda_min_BdBdT = problem.lambda_min_coupling_gram();
    rep.sigma_min_L = cs.sigma_min_L.has_value() ? *cs.sigma_min_L
                                                 : std::numeric_limits<double>::quiet_NaN();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.gamma1 = rep.gamma2 = rep.gamma3 = rep.gamma = nan;
    rep.C_o = nan;

    std::ostringstream reason;
    if (!(config.mu_w > 0.0) || !(config.mu_y > 0.0)) {
        rep.reasons.push_back("step sizes must be strictly positive");
    }
    if (!(m.nu > 0.0)) {
        reason.str("");
        reason << "aggregate cost is not strongly convex (nu=" << m.nu << ")";
        rep.reasons.push_back(reason.str());
    }
    if (!problem.full_row_rank_blocks()) {
        rep.reasons.push_back("some coupling matrix B_k is not full row rank");
    }
    const Assumption2Report a2 = check_assumption2(cs);
    if (!a2.ok) {
        reason.str("");
        reason << "combination-matrix conditions fail (min eig I-L^2=" << a2.min_eig_I_minus_L2
               << ", min eig I-L^2-Abar^2=" << a2.min_eig_I_minus_L2_minus_Abar2 << ")";
        rep.reasons.push_back(reason.str());
    }
    if (m.nu > 0.0 && rep.sigma_max_Bd > 0.0) {
        const StepSizeBounds b = step_size_bounds(problem);
        if (config.mu_w > b.mu_w_max) {
            reason.str("");
            reason << "mu_w=" << config.mu_w << " violates mu_w <= 2/(delta+nu) = " << b.mu_w_max;
            rep.reasons.push_back(reason.str());
        }
        if (!(config.mu_y < b.mu_y_sup)) {
            reason.str("");
            reason << "mu_y=" << config.mu_y
                   << " violates mu_y < 2*delta*nu/((delta+nu)*sigma_max^2(B_d)) = " << b.mu_y_sup;
            rep.reasons.push_back(reason.str());
        }
    } else if (!(rep.sigma_max_Bd > 0.0)) {
        rep.reasons.push_back("all coupling matrices are zero");
    }

    if (!rep.reasons.empty()) {
        rep.certified = false;
        return rep;
    }

    const double sigma_sq = rep.sigma_max_Bd * rep.sigma_max_Bd;
    const double denom = 1.0 - config.mu_y * config.mu_w * sigma_sq;
    rep.gamma1 = (1.0 - 2.0 * config.mu_w * m.delta * m.nu / (m.delta + m.nu)) / denom;
    rep.gamma2 = 1.0 - config.mu_w * config.mu_y * rep.lambda_min_BdBdT;
    // With a single agent there is no consensus error component.
    rep.gamma3 = cs.sigma_min_L.has_value() ? 1.0 - (*cs.sigma_min_L) * (*cs.sigma_min_L) : 0.0;
    rep.gamma = std::max(std::max(rep.gamma1, rep.gamma2), rep.gamma3);
    rep.certified = denom > 0.0 && rep.gamma < 1.0;
    if (!rep.certified) {
        rep.reasons.push_back("contraction factor did not certify below one");
        return rep;
    }

    if (fp != nullptr) {
        const int E = problem.coupling_dim();
        const int K = problem.num_agents();
        const Eigen::VectorXd w0 =
            w_init != nullptr ? *w_init : Eigen::VectorXd::Zero(problem.total_dim());
        const Eigen::VectorXd y0 = y_init != nullptr
                                       ? *y_init
                                       : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(E) * K);
        const double c_y = config.mu_w / config.mu_y;
        const Eigen::VectorXd w_tilde = w0 - fp->w_o;
        const Eigen::VectorXd y_tilde = y0 - fp->y_o;
        const double v_init = weighted_primal_sq(problem, config, w_tilde) +
                              c_y * y_tilde.squaredNorm() + c_y * fp->x_o.squaredNorm();
        rep.C_o = v_init / denom;
    }
    return rep;
}

GeneralRun run_general_recorded(const SharingProblem& problem, const CombinationSet& cs,
                                const Eigen::MatrixXd& L, const SolverConfig& config,
                                const Eigen::VectorXd* w_init, const Eigen::VectorXd* y_init) {
    NetworkState state = general_init(problem, cs, config, w_init, y_init);
    GeneralRun run;
    run.w_init = stacked_primal(state, problem);
    run.y_init = stacked_dual(state);
    run.x_init = state.x;

    Eigen::VectorXd w_prev = run.w_init;
    for (long i = 0; i < config.max_iter; ++i) {
        general_step(state, problem, cs, L, config);
        run.w.push_back(stacked_primal(state, problem));
        run.y.push_back(stacked_dual(state));
        run.z.push_back(stacked_message(state));
        run.x.push_back(state.x);
        const double change = (run.w.back() - w_prev).lpNorm<Eigen::Infinity>();
        w_prev = run.w.back();
        if (config.stop_tol > 0.0 && change <= config.stop_tol) break;
    }
    run.iterations = static_cast<long>(run.w.size());
    return run;
}

double weighted_primal_sq(const SharingProblem& problem, const SolverConfig& config,
                          const Eigen::VectorXd& w_tilde) {
    return w_tilde.squaredNorm() -
           config.mu_y * config.mu_w * problem.coupling_apply(w_tilde).squaredNorm();
}

double weighted_dual_sq(const SharingProblem& problem, const SolverConfig& config,
                        const Eigen::VectorXd& y_tilde) {
    return y_tilde.squaredNorm() -
           config.mu_w * config.mu_y * problem.coupling_apply_adjoint(y_tilde).squaredNorm();
}

double quad_form_Abar(const CombinationSet& cs, const Eigen::VectorXd& v) {
    const int E = static_cast<int>(v.size()) / cs.K;
    return v.dot(apply_block_matrix(cs.Abar, v, E));
}

double energy_identity_max_violation(const GeneralRun& run, const FixedPoint& fp,
                                     const SharingProblem& problem, const CombinationSet& cs,
                                     const SolverConfig& config) {
    if (run.iterations == 0) {
        throw std::invalid_argument("energy_identity_max_violation: empty run");
    }
    const double c_y = config.mu_w / config.mu_y;
    const Eigen::VectorXd grad_at_fp = problem.smooth_gradient(fp.w_o);

    double worst = 0.0;
    for (long i = 0; i < run.iterations; ++i) {
        const Eigen::VectorXd& w_prev = i == 0 ? run.w_init : run.w[static_cast<std::size_t>(i - 1)];
        const Eigen::VectorXd& y_prev = i == 0 ? run.y_init : run.y[static_cast<std::size_t>(i - 1)];
        const Eigen::VectorXd& x_prev = i == 0 ? run.x_init : run.x[static_cast<std::size_t>(i - 1)];

        const Eigen::VectorXd w_tilde = run.w[static_cast<std::size_t>(i)] - fp.w_o;
        const Eigen::VectorXd z_tilde = run.z[static_cast<std::size_t>(i)] - fp.z_o;
        const Eigen::VectorXd x_tilde = run.x[static_cast<std::size_t>(i)] - fp.x_o;
        const double lhs = weighted_primal_sq(problem, config, w_tilde) +
                           c_y * quad_form_Abar(cs, z_tilde) + c_y * x_tilde.squaredNorm();

        const Eigen::VectorXd u =
            (w_prev - fp.w_o) - config.mu_w * (problem.smooth_gradient(w_prev) - grad_at_fp);
        const Eigen::VectorXd y_tilde_prev = y_prev - fp.y_o;
        const Eigen::VectorXd x_tilde_prev = x_prev - fp.x_o;
        const double rhs = u.squaredNorm() + c_y * weighted_dual_sq(problem, config, y_tilde_prev) +
                           c_y * quad_form_Abar(cs, x_tilde_prev);

        worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
    }
    return worst;
}

std::vector<double> lyapunov_sequence(const GeneralRun& run, const FixedPoint& fp,
                                      const SharingProblem& problem, const SolverConfig& config) {
    const double c_y = config.mu_w / config.mu_y;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(run.iterations) + 1);
    auto value_at = [&](const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& x) {
        return weighted_primal_sq(problem, config, w - fp.w_o) + c_y * (y - fp.y_o).squaredNorm() +
               c_y * (x - fp.x_o).squaredNorm();
    };
    values.push_back(value_at(run.w_init, run.y_init, run.x_init));
    for (long i = 0; i < run.iterations; ++i) {
        values.push_back(value_at(run.w[static_cast<std::size_t>(i)],
                                  run.y[static_cast<std::size_t>(i)],
                                  run.x[static_cast<std::size_t>(i)]));
    }
    return values;
}

}  // namespace ped2
