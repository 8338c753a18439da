#include "ped2/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ped2 {

namespace {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double number_or_nan(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.at(key).get<double>();
}

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) fail(where + ": unknown key '" + item.key() + "'");
    }
}

}  // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) fail("matrix: expected a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j.at(0).is_array() || j.at(0).empty()) fail("matrix: rows must be nonempty arrays");
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            fail("matrix: ragged rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (!j.is_array()) fail("vector: expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    }
    return v;
}

json coupling_to_json(const CouplingFunction& g) {
    json out;
    switch (g.kind()) {
        case CouplingKind::kZero:
            out["kind"] = "zero";
            out["dim"] = g.dim();
            break;
        case CouplingKind::kEquality:
            out["kind"] = "equality";
            out["b"] = vector_to_json(g.bound());
            break;
        case CouplingKind::kUpperBound:
            out["kind"] = "upper_bound";
            out["b"] = vector_to_json(g.bound());
            break;
        case CouplingKind::kL1:
            out["kind"] = "l1";
            out["dim"] = g.dim();
            out["lambda"] = g.l1_weight();
            break;
        case CouplingKind::kGeneric:
            fail("coupling_to_json: generic couplings are runtime-only");
    }
    return out;
}

CouplingFunction coupling_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) fail("coupling: expected an object with 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") {
        require_keys(j, {"kind", "dim"}, "coupling(zero)");
        return CouplingFunction::zero(j.at("dim").get<int>());
    }
    if (kind == "equality") {
        require_keys(j, {"kind", "b"}, "coupling(equality)");
        return CouplingFunction::equality(vector_from_json(j.at("b")));
    }
    if (kind == "upper_bound") {
        require_keys(j, {"kind", "b"}, "coupling(upper_bound)");
        return CouplingFunction::upper_bound(vector_from_json(j.at("b")));
    }
    if (kind == "l1") {
        require_keys(j, {"kind", "dim", "lambda"}, "coupling(l1)");
        return CouplingFunction::l1_norm(j.at("dim").get<int>(), j.at("lambda").get<double>());
    }
    fail("coupling: unknown kind '" + kind + "'");
}

json problem_to_json(const SharingProblem& problem) {
    json agents = json::array();
    for (int k = 0; k < problem.num_agents(); ++k) {
        const QuadraticCost* q = problem.agent(k).cost.quadratic_data();
        if (q == nullptr) fail("problem_to_json: generic costs are runtime-only");
        json a;
        a["R"] = matrix_to_json(q->R);
        a["r"] = vector_to_json(q->r);
        a["B"] = matrix_to_json(problem.agent(k).B);
        agents.push_back(std::move(a));
    }
    json out;
    out["E"] = problem.coupling_dim();
    out["g"] = coupling_to_json(problem.coupling());
    out["agents"] = std::move(agents);
    return out;
}

SharingProblem problem_from_json(const json& j) {
    if (!j.is_object()) fail("problem: expected an object");
    require_keys(j, {"E", "g", "agents"}, "problem");
    const int E = j.at("E").get<int>();
    CouplingFunction g = coupling_from_json(j.at("g"));
    if (g.dim() != E) fail("problem: coupling dimension disagrees with E");
    if (!j.at("agents").is_array() || j.at("agents").empty()) {
        fail("problem: 'agents' must be a nonempty array");
    }
    std::vector<AgentSpec> agents;
    for (const json& a : j.at("agents")) {
        require_keys(a, {"R", "r", "B"}, "problem agent");
        QuadraticCost qc;
        qc.R = matrix_from_json(a.at("R"));
        qc.r = vector_from_json(a.at("r"));
        agents.push_back(AgentSpec{SmoothCost::quadratic(std::move(qc)),
                                   matrix_from_json(a.at("B"))});
    }
    return SharingProblem(std::move(agents), std::move(g));
}

json topology_to_json(const Topology& t) {
    json edges = json::array();
    for (auto [s, k] : t.edges) edges.push_back(json::array({s, k}));
    json out;
    out["K"] = t.K;
    out["edges"] = std::move(edges);
    return out;
}

Topology topology_from_json(const json& j) {
    if (!j.is_object()) fail("topology: expected an object");
    require_keys(j, {"K", "edges"}, "topology");
    std::vector<std::pair<int, int>> edges;
    for (const json& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) fail("topology: edges must be [s, k] pairs");
        edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
    return Topology::from_edges(j.at("K").get<int>(), std::move(edges));
}

namespace {

std::string coupling_kind_name(CouplingKind kind) {
    switch (kind) {
        case CouplingKind::kZero: return "zero";
        case CouplingKind::kEquality: return "equality";
        case CouplingKind::kUpperBound: return "upper_bound";
        case CouplingKind::kL1: return "l1";
        case CouplingKind::kGeneric: return "generic";
    }
    return "unknown";
}

CouplingKind coupling_kind_from_name(const std::string& name) {
    if (name == "zero") return CouplingKind::kZero;
    if (name == "equality") return CouplingKind::kEquality;
    if (name == "upper_bound") return CouplingKind::kUpperBound;
    if (name == "l1") return CouplingKind::kL1;
    fail("spec: unknown coupling kind '" + name + "'");
}

std::string mode_name(SolverMode mode) {
    switch (mode) {
        case SolverMode::kPed2: return "ped2";
        case SolverMode::kGeneralForm: return "general";
        case SolverMode::kCentralized: return "centralized";
    }
    return "unknown";
}

SolverMode mode_from_name(const std::string& name) {
    if (name == "ped2") return SolverMode::kPed2;
    if (name == "general") return SolverMode::kGeneralForm;
    if (name == "centralized") return SolverMode::kCentralized;
    fail("spec: unknown mode '" + name + "'");
}

}  // namespace

json experiment_spec_to_json(const ExperimentSpec& spec) {
    json out;
    out["K"] = spec.K;
    out["Qk"] = spec.Qk;
    out["E"] = spec.E;
    json coupling;
    coupling["kind"] = coupling_kind_name(spec.coupling);
    if (spec.coupling == CouplingKind::kL1) coupling["lambda"] = spec.l1_weight;
    out["coupling"] = std::move(coupling);
    out["B"] = spec.b_kind == ExperimentSpec::CouplingMatrixKind::kIdentity ? "identity" : "random";
    out["graph_seed"] = spec.graph_seed;
    out["edge_prob"] = spec.edge_prob;
    out["cost_seed"] = spec.cost_seed;
    if (spec.auto_step_sizes) {
        out["mu_w"] = "auto";
        out["mu_y"] = "auto";
    } else {
        out["mu_w"] = spec.mu_w;
        out["mu_y"] = spec.mu_y;
    }
    out["max_iter"] = spec.max_iter;
    out["stop_tol"] = spec.stop_tol;
    out["mode"] = mode_name(spec.mode);
    return out;
}

ExperimentSpec experiment_spec_from_json(const json& j) {
    if (!j.is_object()) fail("spec: expected an object");
    require_keys(j,
                 {"K", "Qk", "E", "coupling", "B", "graph_seed", "edge_prob", "cost_seed",
                  "mu_w", "mu_y", "max_iter", "stop_tol", "mode"},
                 "spec");
    ExperimentSpec spec;
    if (j.contains("K")) spec.K = j.at("K").get<int>();
    if (j.contains("Qk")) spec.Qk = j.at("Qk").get<int>();
    if (j.contains("E")) spec.E = j.at("E").get<int>();
    if (j.contains("coupling")) {
        const json& c = j.at("coupling");
        require_keys(c, {"kind", "lambda"}, "spec coupling");
        spec.coupling = coupling_kind_from_name(c.at("kind").get<std::string>());
        if (c.contains("lambda")) spec.l1_weight = c.at("lambda").get<double>();
    }
    if (j.contains("B")) {
        const std::string b = j.at("B").get<std::string>();
        if (b == "identity") {
            spec.b_kind = ExperimentSpec::CouplingMatrixKind::kIdentity;
        } else if (b == "random") {
            spec.b_kind = ExperimentSpec::CouplingMatrixKind::kRandom;
        } else {
            fail("spec: B must be 'identity' or 'random'");
        }
    }
    if (j.contains("graph_seed")) spec.graph_seed = j.at("graph_seed").get<std::uint64_t>();
    if (j.contains("edge_prob")) spec.edge_prob = j.at("edge_prob").get<double>();
    if (j.contains("cost_seed")) spec.cost_seed = j.at("cost_seed").get<std::uint64_t>();

    const bool has_mu_w = j.contains("mu_w");
    const bool has_mu_y = j.contains("mu_y");
    if (has_mu_w != has_mu_y) fail("spec: mu_w and mu_y must be given together");
    if (has_mu_w) {
        const json& mw = j.at("mu_w");
        const json& my = j.at("mu_y");
        const bool auto_w = mw.is_string() && mw.get<std::string>() == "auto";
        const bool auto_y = my.is_string() && my.get<std::string>() == "auto";
        if (auto_w != auto_y) fail("spec: mu_w and mu_y must both be numbers or both 'auto'");
        spec.auto_step_sizes = auto_w;
        if (!auto_w) {
            spec.mu_w = mw.get<double>();
            spec.mu_y = my.get<double>();
        }
    }
    if (j.contains("max_iter")) spec.max_iter = j.at("max_iter").get<long>();
    if (j.contains("stop_tol")) spec.stop_tol = j.at("stop_tol").get<double>();
    if (j.contains("mode")) spec.mode = mode_from_name(j.at("mode").get<std::string>());
    return spec;
}

json rate_report_to_json(const RateReport& rep) {
    json out;
    out["nu"] = rep.nu;
    out["delta"] = rep.delta;
    out["sigma_max_Bd"] = rep.sigma_max_Bd;
    out["lambda_min_BdBdT"] = rep.lambda_min_BdBdT;
    out["sigma_min_L"] = rep.sigma_min_L;  // NaN serializes as null
    out["gamma1"] = rep.gamma1;
    out["gamma2"] = rep.gamma2;
    out["gamma3"] = rep.gamma3;
    out["gamma"] = rep.gamma;
    out["C_o"] = rep.C_o;
    out["certified"] = rep.certified;
    out["reasons"] = rep.reasons;
    return out;
}

json oracle_to_json(const OracleSolution& sol) {
    json out;
    out["w_star"] = vector_to_json(sol.w_star);
    out["y_star"] = vector_to_json(sol.y_star);
    out["active_set"] = sol.active_set;
    out["kkt_residual"] = sol.kkt_residual;
    out["objective"] = sol.objective;
    return out;
}

json run_summary_to_json(const RunSummary& summary) {
    json out;
    out["solver"] = summary.solver;
    out["iterations"] = summary.iterations;
    out["final_sq_err"] = summary.final_sq_err;
    out["iters_to_1e-10"] = summary.iters_to_target;
    out["fitted_slope"] = summary.fitted_slope;
    out["fitted_intercept"] = summary.fitted_intercept;
    out["r_squared"] = summary.r_squared;
    out["fit_points"] = summary.fit_points;
    out["log_gamma"] = summary.log_gamma;
    out["init"] = "zero";
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out.good()) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const json& j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

void write_trace_csv(const std::filesystem::path& path, const SolveTrace& trace) {
    std::ostringstream out;
    out << "iter,sq_err_w,sq_err_y,lyapunov_V,bound_gamma_pow_i_Co\n";
    for (const TraceRow& row : trace.rows) {
        out << row.iter << ',' << format_double(row.sq_err_w) << ','
            << format_double(row.sq_err_y) << ',' << format_double(row.lyapunov_v) << ','
            << format_double(row.bound_gamma_pow_i_Co) << '\n';
    }
    write_file_atomic(path, out.str());
}

void write_logerr_dat(const std::filesystem::path& path, const SolveTrace& trace) {
    std::ostringstream out;
    for (const TraceRow& row : trace.rows) {
        if (row.iter < 0 || !(row.sq_err_w > 0.0)) continue;
        out << row.iter << ' ' << format_double(row.sq_err_w) << '\n';
    }
    write_file_atomic(path, out.str());
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ostringstream out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

}  // namespace ped2
