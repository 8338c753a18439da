#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ped2/experiments.hpp"
#include "ped2/graph.hpp"
#include "ped2/problem.hpp"
#include "ped2/solvers.hpp"

namespace ped2 {

using json = nlohmann::json;

// Dense matrices travel as row-major nested arrays, vectors as flat arrays.
json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);
json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

// Coupling functions as a tagged variant, e.g. {"kind": "upper_bound", "b": [...]}.
json coupling_to_json(const CouplingFunction& g);
CouplingFunction coupling_from_json(const json& j);

json problem_to_json(const SharingProblem& problem);
SharingProblem problem_from_json(const json& j);

// {"K": int, "edges": [[s, k], ...]} with 0-indexed endpoints.
json topology_to_json(const Topology& t);
Topology topology_from_json(const json& j);

json experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const json& j);

json rate_report_to_json(const RateReport& rep);
json oracle_to_json(const OracleSolution& sol);
json run_summary_to_json(const RunSummary& summary);

/// Writes through a temporary file plus rename so partial output never
/// lands under the final name.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
void write_json_atomic(const std::filesystem::path& path, const json& j);

/// Trace CSV: header iter,sq_err_w,sq_err_y,lyapunov_V,bound_gamma_pow_i_Co
/// and one row per iteration (iter -1 holds the initial state).
void write_trace_csv(const std::filesystem::path& path, const SolveTrace& trace);

/// Two-column "iter sq_err" file of the positive squared errors, ready for
/// a log-scale plot.
void write_logerr_dat(const std::filesystem::path& path, const SolveTrace& trace);

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

}  // namespace ped2
