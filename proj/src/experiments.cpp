#include "ped2/experiments.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ped2/linalg.hpp"
#include "ped2/rng.hpp"

namespace ped2 {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kErrorFloor = 1e-24;
constexpr double kTargetSqErr = 1e-10;

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    }
    return m;
}

Eigen::VectorXd random_vector(Rng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

// Full-row-rank draw with a bounded condition of the Gram matrix, so the
// certified contraction factors stay away from one.
Eigen::MatrixXd conditioned_coupling_block(Rng& rng, int E, int Qk) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(Qk));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Eigen::MatrixXd B = random_matrix(rng, E, Qk, scale);
        const SymmetricEigen gram = jacobi_eigen(Eigen::MatrixXd(B * B.transpose()));
        if (gram.values(0) >= 0.02 * gram.values(gram.values.size() - 1)) return B;
    }
    throw std::runtime_error("generate_instance: could not draw a well-conditioned coupling block");
}

}  // namespace

ExperimentSpec demo_spec() {
    ExperimentSpec spec;
    spec.auto_step_sizes = false;
    spec.mu_w = 0.03;
    spec.mu_y = 2.0;
    spec.max_iter = 5000;
    return spec;
}

Instance generate_instance(const ExperimentSpec& spec) {
    if (spec.K < 1 || spec.Qk < 1 || spec.E < 1) {
        throw std::invalid_argument("generate_instance: K, Qk, E must be >= 1");
    }
    if (spec.b_kind == ExperimentSpec::CouplingMatrixKind::kIdentity && spec.E != spec.Qk) {
        throw std::invalid_argument("generate_instance: identity coupling needs E == Qk");
    }
    if (spec.coupling == CouplingKind::kGeneric) {
        throw std::invalid_argument("generate_instance: generic couplings cannot be generated");
    }

    Topology topology = random_connected_topology(spec.K, spec.edge_prob, spec.graph_seed);

    Rng rng(spec.cost_seed);
    std::vector<QuadraticCost> costs;
    costs.reserve(static_cast<std::size_t>(spec.K));
    for (int k = 0; k < spec.K; ++k) {
        const Eigen::MatrixXd m = random_matrix(rng, spec.Qk, spec.Qk, 1.0);
        QuadraticCost qc;
        qc.R = m.transpose() * m + Eigen::MatrixXd::Identity(spec.Qk, spec.Qk);
        qc.r = random_vector(rng, spec.Qk);
        costs.push_back(std::move(qc));
    }

    Eigen::VectorXd b(spec.E);
    for (int i = 0; i < spec.E; ++i) b(i) = rng.uniform();

    std::vector<AgentSpec> agents;
    agents.reserve(static_cast<std::size_t>(spec.K));
    for (int k = 0; k < spec.K; ++k) {
        Eigen::MatrixXd B;
        if (spec.b_kind == ExperimentSpec::CouplingMatrixKind::kIdentity) {
            B = Eigen::MatrixXd::Identity(spec.E, spec.Qk);
        } else {
            B = conditioned_coupling_block(rng, spec.E, spec.Qk);
        }
        agents.push_back(AgentSpec{SmoothCost::quadratic(std::move(costs[static_cast<std::size_t>(k)])),
                                   std::move(B)});
    }

    CouplingFunction g = CouplingFunction::zero(spec.E);
    switch (spec.coupling) {
        case CouplingKind::kZero:
            break;
        case CouplingKind::kEquality:
            g = CouplingFunction::equality(b);
            break;
        case CouplingKind::kUpperBound:
            g = CouplingFunction::upper_bound(b);
            break;
        case CouplingKind::kL1:
            g = CouplingFunction::l1_norm(spec.E, spec.l1_weight);
            break;
        case CouplingKind::kGeneric:
            break;  // rejected above
    }

    return Instance{SharingProblem(std::move(agents), std::move(g)), std::move(topology)};
}

SolverConfig config_from_spec(const ExperimentSpec& spec, const SharingProblem& problem) {
    SolverConfig cfg;
    cfg.max_iter = spec.max_iter;
    cfg.stop_tol = spec.stop_tol;
    cfg.mode = spec.mode;
    if (spec.auto_step_sizes) {
        cfg = auto_steps(problem, cfg);
    } else {
        cfg.mu_w = spec.mu_w;
        cfg.mu_y = spec.mu_y;
        if (!(cfg.mu_w > 0.0) || !(cfg.mu_y > 0.0)) {
            throw std::invalid_argument("config_from_spec: explicit step sizes must be positive");
        }
    }
    return cfg;
}

OracleSolution qp_oracle(const SharingProblem& problem) {
    if (!problem.all_quadratic()) {
        throw std::invalid_argument("qp_oracle: quadratic costs required");
    }
    const CouplingKind kind = problem.coupling().kind();
    if (kind != CouplingKind::kZero && kind != CouplingKind::kEquality &&
        kind != CouplingKind::kUpperBound) {
        throw std::invalid_argument("qp_oracle: coupling kind not supported");
    }
    const int E = problem.coupling_dim();
    if (kind != CouplingKind::kZero && E > 16) {
        throw std::invalid_argument("qp_oracle: coupling dimension above 16, enumeration rejected");
    }
    const int K = problem.num_agents();

    // Schur pieces: G = B R^{-1} B^T, h = B R^{-1} r, and the blockwise
    // unconstrained minimizer w_uc = -R^{-1} r (so B w_uc = -h).
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(E, E);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(E);
    Eigen::VectorXd w_uc(problem.total_dim());
    std::vector<Eigen::MatrixXd> rinv_bt(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const QuadraticCost* q = problem.agent(k).cost.quadratic_data();
        const Eigen::MatrixXd& B = problem.agent(k).B;
        const auto ldlt = q->R.ldlt();
        rinv_bt[static_cast<std::size_t>(k)] = ldlt.solve(B.transpose());
        const Eigen::VectorXd rinv_r = ldlt.solve(q->r);
        G += B * rinv_bt[static_cast<std::size_t>(k)];
        h += B * rinv_r;
        w_uc.segment(problem.block_offset(k), problem.block_dim(k)) = -rinv_r;
    }

    auto assemble = [&](const std::vector<int>& rows, const Eigen::VectorXd& y_rows) {
        Eigen::VectorXd w = w_uc;
        for (int k = 0; k < K; ++k) {
            const Eigen::MatrixXd& rb = rinv_bt[static_cast<std::size_t>(k)];
            Eigen::VectorXd delta = Eigen::VectorXd::Zero(problem.block_dim(k));
            for (std::size_t j = 0; j < rows.size(); ++j) {
                delta += rb.col(rows[j]) * y_rows(static_cast<Eigen::Index>(j));
            }
            w.segment(problem.block_offset(k), problem.block_dim(k)) -= delta;
        }
        return w;
    };

    OracleSolution best;
    bool found = false;

    if (kind == CouplingKind::kZero) {
        best.w_star = w_uc;
        best.y_star = Eigen::VectorXd::Zero(E);
        best.objective = problem.smooth_value(w_uc);
        best.kkt_residual = problem.smooth_gradient(w_uc).lpNorm<Eigen::Infinity>();
        return best;
    }

    const Eigen::VectorXd& b = problem.coupling().bound();

    if (kind == CouplingKind::kEquality) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
        if (!lu.isInvertible()) {
            throw std::invalid_argument("qp_oracle: singular stationarity system for equality coupling");
        }
        const Eigen::VectorXd y = lu.solve(-(b + h));
        std::vector<int> rows(static_cast<std::size_t>(E));
        for (int i = 0; i < E; ++i) rows[static_cast<std::size_t>(i)] = i;
        const Eigen::VectorXd w = assemble(rows, y);
        best.w_star = w;
        best.y_star = y;
        best.active_set = rows;
        best.objective = problem.smooth_value(w);
        const double stat = (problem.smooth_gradient(w) + problem.stacked_coupling_matrix().transpose() * y)
                                .lpNorm<Eigen::Infinity>();
        const double prim = (problem.coupling_sum(w) - b).cwiseAbs().maxCoeff();
        best.kkt_residual = std::max(stat, prim);
        return best;
    }

    // Upper bound: enumerate the candidate active sets.
    const std::uint32_t subsets = 1u << E;
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
        std::vector<int> rows;
        for (int i = 0; i < E; ++i) {
            if (mask & (1u << i)) rows.push_back(i);
        }
        const int s = static_cast<int>(rows.size());

        Eigen::VectorXd y_rows(s);
        if (s > 0) {
            Eigen::MatrixXd Gss(s, s);
            Eigen::VectorXd rhs(s);
            for (int a = 0; a < s; ++a) {
                rhs(a) = -(b(rows[static_cast<std::size_t>(a)]) + h(rows[static_cast<std::size_t>(a)]));
                for (int c = 0; c < s; ++c) {
                    Gss(a, c) = G(rows[static_cast<std::size_t>(a)], rows[static_cast<std::size_t>(c)]);
                }
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(Gss);
            if (!lu.isInvertible()) continue;  // degenerate subset, skip
            y_rows = lu.solve(rhs);
            if (y_rows.minCoeff() < -1e-9) continue;
        }

        Eigen::VectorXd coupled = -h;
        for (int a = 0; a < s; ++a) coupled -= G.col(rows[static_cast<std::size_t>(a)]) * y_rows(a);
        if ((coupled - b).maxCoeff() > 1e-9) continue;

        const Eigen::VectorXd w = assemble(rows, y_rows);
        const double objective = problem.smooth_value(w);
        if (!found || objective < best.objective) {
            found = true;
            best.w_star = w;
            best.y_star = Eigen::VectorXd::Zero(E);
            for (int a = 0; a < s; ++a) best.y_star(rows[static_cast<std::size_t>(a)]) = y_rows(a);
            best.active_set = rows;
            best.objective = objective;
        }
    }
    if (!found) {
        throw std::runtime_error("qp_oracle: no feasible stationary candidate survived enumeration");
    }

    const Eigen::VectorXd coupled = problem.coupling_sum(best.w_star);
    const double stat =
        (problem.smooth_gradient(best.w_star) +
         problem.stacked_coupling_matrix().transpose() * best.y_star)
            .lpNorm<Eigen::Infinity>();
    const double primal = std::max(0.0, (coupled - b).maxCoeff());
    const double dual = std::max(0.0, -best.y_star.minCoeff());
    const double compl_slack =
        (best.y_star.array() * (coupled - b).array()).abs().maxCoeff();
    best.kkt_residual = std::max(std::max(stat, primal), std::max(dual, compl_slack));
    return best;
}

OracleSolution ground_truth(const SharingProblem& problem, long fallback_iters) {
    const CouplingKind kind = problem.coupling().kind();
    const bool oracle_ok = problem.all_quadratic() && problem.coupling_dim() <= 16 &&
                           (kind == CouplingKind::kZero || kind == CouplingKind::kEquality ||
                            kind == CouplingKind::kUpperBound);
    if (oracle_ok) return qp_oracle(problem);

    SolverConfig cfg;
    cfg.max_iter = fallback_iters;
    cfg.stop_tol = 1e-13;
    cfg = auto_steps(problem, cfg);
    CentralState state = centralized_init(problem);
    const Eigen::MatrixXd B = problem.stacked_coupling_matrix();
    Eigen::VectorXd w_prev = state.w;
    for (long i = 0; i < cfg.max_iter; ++i) {
        centralized_step(state, problem, B, cfg);
        const double change = (state.w - w_prev).lpNorm<Eigen::Infinity>();
        w_prev = state.w;
        if (change <= cfg.stop_tol) break;
    }

    OracleSolution sol;
    sol.w_star = state.w;
    sol.y_star = state.lambda;
    sol.objective = problem.smooth_value(state.w);
    const double stat =
        (problem.smooth_gradient(state.w) + B.transpose() * state.lambda).lpNorm<Eigen::Infinity>();
    const Eigen::VectorXd coupled = problem.coupling_sum(state.w);
    const double prox_res =
        (state.lambda - problem.coupling().conjugate_prox(1.0, state.lambda + coupled))
            .lpNorm<Eigen::Infinity>();
    sol.kkt_residual = std::max(stat, prox_res);
    return sol;
}

RateFit fit_rate(const std::vector<double>& sq_errors, double tail_fraction) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
        throw std::invalid_argument("fit_rate: tail_fraction must lie in (0, 1]");
    }
    std::vector<std::pair<long, double>> usable;
    for (std::size_t i = 0; i < sq_errors.size(); ++i) {
        if (sq_errors[i] > kErrorFloor) usable.emplace_back(static_cast<long>(i), sq_errors[i]);
    }
    const std::size_t tail =
        static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(usable.size())));
    if (tail < 20) {
        std::ostringstream msg;
        msg << "fit_rate: only " << tail << " usable tail points (" << usable.size()
            << " above the 1e-24 floor); need at least 20";
        throw std::invalid_argument(msg.str());
    }
    const std::size_t start = usable.size() - tail;

    double sx = 0.0, sy = 0.0;
    for (std::size_t i = start; i < usable.size(); ++i) {
        sx += static_cast<double>(usable[i].first);
        sy += std::log(usable[i].second);
    }
    const double n = static_cast<double>(tail);
    const double mean_x = sx / n;
    const double mean_y = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = start; i < usable.size(); ++i) {
        const double dx = static_cast<double>(usable[i].first) - mean_x;
        const double dy = std::log(usable[i].second) - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    RateFit fit;
    fit.points = static_cast<int>(tail);
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    if (syy <= 0.0) {
        fit.r_squared = 1.0;
    } else {
        const double ss_res = syy - fit.slope * sxy;
        fit.r_squared = 1.0 - std::max(0.0, ss_res) / syy;
    }
    return fit;
}

namespace {

TraceRow make_row(long iter, const SharingProblem& problem, const SolverConfig& config,
                  const RunDiagnostics& diag, const Eigen::VectorXd& w,
                  const Eigen::VectorXd& y_stacked, const Eigen::VectorXd* x) {
    TraceRow row;
    row.iter = iter;
    row.sq_err_w = kNaN;
    row.sq_err_y = kNaN;
    row.lyapunov_v = kNaN;
    row.bound_gamma_pow_i_Co = kNaN;
    if (diag.fixed_point != nullptr) {
        const FixedPoint& fp = *diag.fixed_point;
        row.sq_err_w = (w - fp.w_o).squaredNorm();
        if (y_stacked.size() == fp.y_o.size()) {
            row.sq_err_y = (y_stacked - fp.y_o).squaredNorm();
        } else {
            row.sq_err_y = (y_stacked - fp.y_star).squaredNorm();
        }
        if (x != nullptr && y_stacked.size() == fp.y_o.size()) {
            const double c_y = config.mu_w / config.mu_y;
            row.lyapunov_v = weighted_primal_sq(problem, config, w - fp.w_o) +
                             c_y * (y_stacked - fp.y_o).squaredNorm() +
                             c_y * (*x - fp.x_o).squaredNorm();
        }
    }
    if (iter >= 0 && diag.rate != nullptr && diag.rate->certified &&
        std::isfinite(diag.rate->C_o)) {
        row.bound_gamma_pow_i_Co =
            std::pow(diag.rate->gamma, static_cast<double>(iter)) * diag.rate->C_o;
    }
    return row;
}

void finalize_trace(SolveTrace& trace, const Eigen::VectorXd& w) {
    trace.final_w = w;
    trace.final_sq_err = trace.rows.empty() ? kNaN : trace.rows.back().sq_err_w;
    trace.iterations = trace.rows.empty() ? 0 : trace.rows.back().iter + 1;
}

}  // namespace

SolveTrace run_ped2_traced(const SharingProblem& problem, const CombinationSet& cs,
                           const SolverConfig& config, const RunDiagnostics& diag) {
    NetworkState state = ped2_init(problem, cs, config);
    const int E = problem.coupling_dim();
    Eigen::VectorXd x_shadow;
    Eigen::VectorXd* x_ptr = nullptr;
    if (diag.L != nullptr) {
        x_shadow = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(E) * problem.num_agents());
        x_ptr = &x_shadow;
    }

    SolveTrace trace;
    Eigen::VectorXd w = stacked_primal(state, problem);
    trace.rows.push_back(make_row(-1, problem, config, diag, w, stacked_dual(state), x_ptr));
    for (long i = 0; i < config.max_iter; ++i) {
        const Eigen::VectorXd w_prev = w;
        ped2_step(state, problem, cs, config);
        if (x_ptr != nullptr) {
            x_shadow -= apply_block_matrix(*diag.L, stacked_message(state), E);
        }
        w = stacked_primal(state, problem);
        trace.rows.push_back(make_row(i, problem, config, diag, w, stacked_dual(state), x_ptr));
        if (config.stop_tol > 0.0 && (w - w_prev).lpNorm<Eigen::Infinity>() <= config.stop_tol) break;
    }
    finalize_trace(trace, w);
    return trace;
}

SolveTrace run_general_traced(const SharingProblem& problem, const CombinationSet& cs,
                              const Eigen::MatrixXd& L, const SolverConfig& config,
                              const RunDiagnostics& diag) {
    NetworkState state = general_init(problem, cs, config);
    SolveTrace trace;
    Eigen::VectorXd w = stacked_primal(state, problem);
    trace.rows.push_back(make_row(-1, problem, config, diag, w, stacked_dual(state), &state.x));
    for (long i = 0; i < config.max_iter; ++i) {
        const Eigen::VectorXd w_prev = w;
        general_step(state, problem, cs, L, config);
        w = stacked_primal(state, problem);
        trace.rows.push_back(make_row(i, problem, config, diag, w, stacked_dual(state), &state.x));
        if (config.stop_tol > 0.0 && (w - w_prev).lpNorm<Eigen::Infinity>() <= config.stop_tol) break;
    }
    finalize_trace(trace, w);
    return trace;
}

SolveTrace run_centralized_traced(const SharingProblem& problem, const SolverConfig& config,
                                  const RunDiagnostics& diag) {
    CentralState state = centralized_init(problem);
    const Eigen::MatrixXd B = problem.stacked_coupling_matrix();
    SolveTrace trace;
    trace.rows.push_back(
        make_row(-1, problem, config, diag, state.w, state.lambda, nullptr));
    for (long i = 0; i < config.max_iter; ++i) {
        const Eigen::VectorXd w_prev = state.w;
        centralized_step(state, problem, B, config);
        trace.rows.push_back(make_row(i, problem, config, diag, state.w, state.lambda, nullptr));
        if (config.stop_tol > 0.0 &&
            (state.w - w_prev).lpNorm<Eigen::Infinity>() <= config.stop_tol) break;
    }
    finalize_trace(trace, state.w);
    return trace;
}

RunSummary summarize_run(const std::string& solver, const SolveTrace& trace,
                         const RateReport* rate, double tail_fraction) {
    RunSummary s;
    s.solver = solver;
    s.iterations = trace.iterations;
    s.final_sq_err = trace.final_sq_err;
    s.fitted_slope = s.fitted_intercept = s.r_squared = kNaN;
    s.log_gamma = rate != nullptr && rate->certified ? std::log(rate->gamma) : kNaN;

    std::vector<double> errors;
    errors.reserve(trace.rows.size());
    for (const TraceRow& row : trace.rows) {
        if (row.iter < 0) continue;
        if (row.iter >= 0 && std::isfinite(row.sq_err_w)) {
            errors.push_back(row.sq_err_w);
            if (s.iters_to_target < 0 && row.sq_err_w <= kTargetSqErr) s.iters_to_target = row.iter;
        }
    }
    try {
        const RateFit fit = fit_rate(errors, tail_fraction);
        s.fitted_slope = fit.slope;
        s.fitted_intercept = fit.intercept;
        s.r_squared = fit.r_squared;
        s.fit_points = fit.points;
    } catch (const std::invalid_argument&) {
        s.fit_points = 0;  // trace too short to fit; summary keeps NaNs
    }
    return s;
}

Comparison run_comparison(const ExperimentSpec& spec) {
    Instance instance = generate_instance(spec);
    const SharingProblem& problem = instance.problem;
    const CombinationSet cs = build_combination_set(metropolis(instance.topology));
    const Eigen::MatrixXd L = materialize_L(cs);
    const SolverConfig config = config_from_spec(spec, problem);

    OracleSolution truth = ground_truth(problem, 10 * config.max_iter);
    FixedPoint fp = build_fixed_point(problem, cs, L, config, truth.w_star, truth.y_star);
    RateReport rate = rate_report(problem, cs, config, &fp);

    RunDiagnostics diag;
    diag.fixed_point = &fp;
    diag.rate = &rate;
    diag.L = &L;

    SolveTrace ped2_trace = run_ped2_traced(problem, cs, config, diag);
    SolveTrace central_trace = run_centralized_traced(problem, config, diag);
    RunSummary ped2_summary = summarize_run("ped2", ped2_trace, &rate);
    RunSummary central_summary = summarize_run("centralized", central_trace, &rate);

    return Comparison{std::move(instance), std::move(truth),   std::move(fp),
                      std::move(rate),     config,             std::move(ped2_trace),
                      std::move(central_trace), std::move(ped2_summary),
                      std::move(central_summary)};
}

}  // namespace ped2
