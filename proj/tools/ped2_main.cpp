#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ped2/experiments.hpp"
#include "ped2/serialization.hpp"

namespace {

namespace fs = std::filesystem;
using ped2::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitHypothesis = 3;
constexpr int kExitDivergence = 4;

struct Options {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    bool quiet = false;
};

json load_config(const Options& opt, const json& defaults) {
    json cfg = defaults;
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) {
            throw std::invalid_argument("config file not found: " + opt.config_path);
        }
        cfg = json::parse(in);  // parse_error carries the byte offset
        if (!cfg.is_object()) throw std::invalid_argument("config must be a JSON object");
    }
    for (const std::string& kv : opt.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        }
        const std::string key = kv.substr(0, eq);
        const std::string raw = kv.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw;  // bare strings are allowed unquoted
        }
        // dotted keys address nested objects, e.g. coupling.kind=l1
        json* node = &cfg;
        std::size_t pos = 0;
        while (true) {
            const auto dot = key.find('.', pos);
            if (dot == std::string::npos) {
                (*node)[key.substr(pos)] = value;
                break;
            }
            node = &(*node)[key.substr(pos, dot - pos)];
            pos = dot + 1;
        }
    }
    return cfg;
}

void print_summary(const Options& opt, const std::string& line) {
    if (!opt.quiet) std::cout << line << '\n';
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

int cmd_run(const Options& opt) {
    const json cfg = load_config(opt, ped2::experiment_spec_to_json(ped2::ExperimentSpec{}));
    const ped2::ExperimentSpec spec = ped2::experiment_spec_from_json(cfg);
    const ped2::Instance instance = ped2::generate_instance(spec);
    const ped2::CombinationSet cs = ped2::build_combination_set(ped2::metropolis(instance.topology));
    const Eigen::MatrixXd L = ped2::materialize_L(cs);
    const ped2::SolverConfig config = ped2::config_from_spec(spec, instance.problem);

    const ped2::OracleSolution truth = ped2::ground_truth(instance.problem, 10 * config.max_iter);
    const ped2::FixedPoint fp =
        ped2::build_fixed_point(instance.problem, cs, L, config, truth.w_star, truth.y_star);
    const ped2::RateReport rate = ped2::rate_report(instance.problem, cs, config, &fp);

    ped2::RunDiagnostics diag;
    diag.fixed_point = &fp;
    diag.rate = &rate;
    diag.L = &L;

    ped2::SolveTrace trace;
    std::string name;
    switch (spec.mode) {
        case ped2::SolverMode::kPed2:
            trace = ped2::run_ped2_traced(instance.problem, cs, config, diag);
            name = "ped2";
            break;
        case ped2::SolverMode::kGeneralForm:
            trace = ped2::run_general_traced(instance.problem, cs, L, config, diag);
            name = "general";
            break;
        case ped2::SolverMode::kCentralized:
            trace = ped2::run_centralized_traced(instance.problem, config, diag);
            name = "centralized";
            break;
    }
    ped2::write_trace_csv(fs::path(opt.out_dir) / ("trace_" + (name == "centralized" ? std::string("central") : name) + ".csv"),
                          trace);
    print_summary(opt, "run: mode=" + name + " iters=" + std::to_string(trace.iterations) +
                           " final_sq_err=" + fmt(trace.final_sq_err) +
                           (rate.certified ? " gamma=" + fmt(rate.gamma) : " (rate not certified)"));
    return kExitOk;
}

int cmd_rate(const Options& opt) {
    const json cfg = load_config(opt, ped2::experiment_spec_to_json(ped2::ExperimentSpec{}));
    const ped2::ExperimentSpec spec = ped2::experiment_spec_from_json(cfg);
    const ped2::Instance instance = ped2::generate_instance(spec);
    const ped2::CombinationSet cs = ped2::build_combination_set(ped2::metropolis(instance.topology));
    const Eigen::MatrixXd L = ped2::materialize_L(cs);
    const ped2::SolverConfig config = ped2::config_from_spec(spec, instance.problem);

    ped2::RateReport rate;
    try {
        const ped2::OracleSolution truth = ped2::ground_truth(instance.problem, 10 * config.max_iter);
        const ped2::FixedPoint fp =
            ped2::build_fixed_point(instance.problem, cs, L, config, truth.w_star, truth.y_star);
        rate = ped2::rate_report(instance.problem, cs, config, &fp);
    } catch (const std::invalid_argument&) {
        // no trajectory constant without a usable fixed point
        rate = ped2::rate_report(instance.problem, cs, config);
    }
    ped2::write_json_atomic(fs::path(opt.out_dir) / "rate.json", ped2::rate_report_to_json(rate));

    if (!rate.certified) {
        std::ostringstream line;
        line << "rate: not certified:";
        for (const std::string& r : rate.reasons) line << ' ' << r << ';';
        print_summary(opt, line.str());
        return kExitHypothesis;
    }
    print_summary(opt, "rate: gamma=" + fmt(rate.gamma) + " (gamma1=" + fmt(rate.gamma1) +
                           " gamma2=" + fmt(rate.gamma2) + " gamma3=" + fmt(rate.gamma3) +
                           ") C_o=" + fmt(rate.C_o) + " certified=true");
    return kExitOk;
}

int cmd_validate(const Options& opt) {
    const json cfg = load_config(opt, ped2::experiment_spec_to_json(ped2::ExperimentSpec{}));
    const ped2::ExperimentSpec spec = ped2::experiment_spec_from_json(cfg);
    const ped2::Instance instance = ped2::generate_instance(spec);
    const Eigen::MatrixXd A = ped2::metropolis(instance.topology);
    const ped2::CombinationSet cs = ped2::build_combination_set(A);

    const ped2::Assumption1Report a1 = ped2::check_assumption1(instance.problem);
    const ped2::Assumption2Report a2 = ped2::check_assumption2(cs);

    const int K = cs.K;
    const double row_sum_err =
        (A.rowwise().sum() - Eigen::VectorXd::Ones(K)).cwiseAbs().maxCoeff();
    const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
    const bool doubly_stochastic = row_sum_err <= 1e-12 && asym <= 1e-12 && A.minCoeff() >= -1e-14;
    const bool spectrum_ok =
        cs.eig_Abar(0) > 0.0 && cs.eig_Abar(K - 1) <= 1.0 + 1e-12 &&
        (K == 1 || cs.lambda2 < 1.0 - 1e-12);

    const bool full_row_rank = instance.problem.full_row_rank_blocks();

    ped2::SolverConfig config;
    bool steps_ok = true;
    std::string step_detail;
    json steps;
    try {
        config = ped2::config_from_spec(spec, instance.problem);
        const ped2::StepSizeBounds bounds = ped2::step_size_bounds(instance.problem);
        steps["mu_w"] = config.mu_w;
        steps["mu_y"] = config.mu_y;
        steps["mu_w_max"] = bounds.mu_w_max;
        steps["mu_y_sup"] = bounds.mu_y_sup;
        steps_ok = config.mu_w > 0.0 && config.mu_w <= bounds.mu_w_max && config.mu_y > 0.0 &&
                   config.mu_y < bounds.mu_y_sup;
        steps["ok"] = steps_ok;
    } catch (const std::invalid_argument& e) {
        steps_ok = false;
        steps["ok"] = false;
        step_detail = e.what();
        steps["detail"] = step_detail;
    }

    const bool ok = a1.ok && a2.ok && doubly_stochastic && spectrum_ok && full_row_rank && steps_ok;

    json out;
    out["ok"] = ok;
    out["assumption1"] = {{"ok", a1.ok},
                          {"nu", a1.nu},
                          {"delta", a1.delta},
                          {"moduli_ok", a1.moduli_ok},
                          {"relative_interior_ok", a1.relint_ok},
                          {"detail", a1.detail}};
    out["combination"] = {{"doubly_stochastic", doubly_stochastic},
                          {"row_sum_error", row_sum_err},
                          {"asymmetry", asym},
                          {"spectrum_in_unit_interval", spectrum_ok},
                          {"lambda2", K == 1 ? json(nullptr) : json(cs.lambda2)}};
    out["assumption2"] = {{"ok", a2.ok},
                          {"min_eig_I_minus_L2", a2.min_eig_I_minus_L2},
                          {"min_eig_I_minus_L2_minus_Abar2", a2.min_eig_I_minus_L2_minus_Abar2}};
    out["full_row_rank_blocks"] = full_row_rank;
    out["step_sizes"] = steps;
    ped2::write_json_atomic(fs::path(opt.out_dir) / "validate.json", out);

    std::ostringstream line;
    line << "validate: " << (ok ? "ok" : "FAILED") << " (assumption1 " << (a1.ok ? "ok" : "fail")
         << ", doubly-stochastic " << (doubly_stochastic ? "ok" : "fail") << ", assumption2 "
         << (a2.ok ? "ok" : "fail") << ", full-row-rank " << (full_row_rank ? "ok" : "fail")
         << ", steps " << (steps_ok ? "ok" : "fail") << ")";
    print_summary(opt, line.str());
    return ok ? kExitOk : kExitUsage;
}

int cmd_oracle(const Options& opt) {
    const json cfg = load_config(opt, ped2::experiment_spec_to_json(ped2::ExperimentSpec{}));
    const ped2::ExperimentSpec spec = ped2::experiment_spec_from_json(cfg);
    const ped2::Instance instance = ped2::generate_instance(spec);
    const ped2::OracleSolution sol = ped2::qp_oracle(instance.problem);
    ped2::write_json_atomic(fs::path(opt.out_dir) / "oracle.json", ped2::oracle_to_json(sol));

    std::ostringstream line;
    line << "oracle: active=[";
    for (std::size_t i = 0; i < sol.active_set.size(); ++i) {
        if (i > 0) line << ',';
        line << sol.active_set[i];
    }
    line << "] kkt_residual=" << fmt(sol.kkt_residual) << " objective=" << fmt(sol.objective);
    print_summary(opt, line.str());
    return kExitOk;
}

int cmd_demo(const Options& opt) {
    const json cfg = load_config(opt, ped2::experiment_spec_to_json(ped2::demo_spec()));
    const ped2::ExperimentSpec spec = ped2::experiment_spec_from_json(cfg);
    const ped2::Comparison cmp = ped2::run_comparison(spec);

    const fs::path out(opt.out_dir);
    ped2::write_trace_csv(out / "trace_ped2.csv", cmp.ped2_trace);
    ped2::write_trace_csv(out / "trace_central.csv", cmp.central_trace);
    ped2::write_logerr_dat(out / "logerr_ped2.dat", cmp.ped2_trace);
    ped2::write_logerr_dat(out / "logerr_central.dat", cmp.central_trace);

    json summary;
    summary["spec"] = ped2::experiment_spec_to_json(spec);
    summary["ped2"] = ped2::run_summary_to_json(cmp.ped2_summary);
    summary["centralized"] = ped2::run_summary_to_json(cmp.central_summary);
    summary["rate"] = ped2::rate_report_to_json(cmp.rate);
    summary["oracle_kkt_residual"] = cmp.truth.kkt_residual;
    summary["mu_w"] = cmp.config.mu_w;
    summary["mu_y"] = cmp.config.mu_y;
    ped2::write_json_atomic(out / "summary.json", summary);

    print_summary(opt, "demo-fig1: ped2 iters=" + std::to_string(cmp.ped2_summary.iterations) +
                           " final_sq_err=" + fmt(cmp.ped2_summary.final_sq_err) +
                           " slope=" + fmt(cmp.ped2_summary.fitted_slope) +
                           " | central slope=" + fmt(cmp.central_summary.fitted_slope));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized proximal primal-dual solver for coupled resource-sharing problems"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "JSON config file");
    app.add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    app.add_option("--set", opt.overrides, "override a config key, key=value (repeatable)");
    app.add_flag("--quiet", opt.quiet, "suppress the summary line");

    auto* run = app.add_subcommand("run", "solve one instance and write its trace");
    auto* rate = app.add_subcommand("rate", "emit the linear-rate certificate");
    auto* validate = app.add_subcommand("validate", "check the problem and network hypotheses");
    auto* demo = app.add_subcommand("demo-fig1", "side-by-side 20-agent demonstration run");
    auto* oracle = app.add_subcommand("oracle", "emit the enumeration ground truth");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(opt);
        if (rate->parsed()) return cmd_rate(opt);
        if (validate->parsed()) return cmd_validate(opt);
        if (demo->parsed()) return cmd_demo(opt);
        if (oracle->parsed()) return cmd_oracle(opt);
    } catch (const ped2::DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const json::parse_error& e) {
        std::cerr << "config parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
