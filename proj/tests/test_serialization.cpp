#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ped2/serialization.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace ped2;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("matrix and vector round trips are exact") {
    MatrixXd m(2, 3);
    m << 1.5, -2.25, 3.0,
         0.0, 1e-17, -4.5;
    CHECK((matrix_from_json(matrix_to_json(m)) - m).cwiseAbs().maxCoeff() == 0.0);

    VectorXd v(3);
    v << -1.0, 0.125, 9.0;
    CHECK((vector_from_json(vector_to_json(v)) - v).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(matrix_from_json(json::parse("[[1,2],[3]]")), std::invalid_argument);
}

TEST_CASE("coupling functions round trip as tagged variants") {
    {
        const json j = coupling_to_json(CouplingFunction::upper_bound(VectorXd::Ones(2)));
        CHECK(j.at("kind") == "upper_bound");
        const CouplingFunction g = coupling_from_json(j);
        CHECK(g.kind() == CouplingKind::kUpperBound);
        CHECK(g.dim() == 2);
    }
    {
        const CouplingFunction g =
            coupling_from_json(json::parse(R"({"kind":"l1","dim":3,"lambda":0.5})"));
        CHECK(g.kind() == CouplingKind::kL1);
        CHECK(g.l1_weight() == doctest::Approx(0.5));
    }
    CHECK_THROWS_AS(coupling_from_json(json::parse(R"({"kind":"box"})")), std::invalid_argument);
    CHECK_THROWS_AS(coupling_from_json(json::parse(R"({"kind":"zero","dim":2,"extra":1})")),
                    std::invalid_argument);
    auto generic = CouplingFunction::generic(
        2, [](double, const VectorXd& v) { return v; });
    CHECK_THROWS_AS(coupling_to_json(generic), std::invalid_argument);
}

TEST_CASE("problem round trip preserves data and validates on load") {
    ExperimentSpec spec;
    spec.K = 3;
    spec.Qk = 2;
    spec.E = 2;
    spec.graph_seed = 8;
    spec.cost_seed = 9;
    const Instance inst = generate_instance(spec);
    const json j = problem_to_json(inst.problem);
    const SharingProblem back = problem_from_json(j);
    CHECK(back.num_agents() == 3);
    CHECK(back.total_dim() == inst.problem.total_dim());
    for (int k = 0; k < 3; ++k) {
        CHECK((back.agent(k).cost.quadratic_data()->R -
               inst.problem.agent(k).cost.quadratic_data()->R)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }

    json bad = j;
    bad["agents"][0]["R"][0][1] = 99.0;  // breaks symmetry
    CHECK_THROWS_AS(problem_from_json(bad), std::invalid_argument);
}

TEST_CASE("topology json uses zero-indexed edge pairs") {
    const Topology t = Topology::from_edges(4, {{0, 1}, {2, 3}, {1, 2}});
    const json j = topology_to_json(t);
    CHECK(j.at("K") == 4);
    const Topology back = topology_from_json(j);
    CHECK(back.edges == t.edges);
    CHECK_THROWS_AS(topology_from_json(json::parse(R"({"K":2,"edges":[[0,2]]})")),
                    std::invalid_argument);
}

TEST_CASE("experiment specs accept explicit or auto steps and reject typos") {
    ExperimentSpec spec = demo_spec();
    const json j = experiment_spec_to_json(spec);
    CHECK(j.at("mu_w") == 0.03);
    const ExperimentSpec back = experiment_spec_from_json(j);
    CHECK(back.mu_w == doctest::Approx(0.03));
    CHECK(back.mu_y == doctest::Approx(2.0));
    CHECK_FALSE(back.auto_step_sizes);

    const ExperimentSpec autod = experiment_spec_from_json(
        json::parse(R"({"K":4,"Qk":3,"E":3,"mu_w":"auto","mu_y":"auto"})"));
    CHECK(autod.auto_step_sizes);
    CHECK(autod.K == 4);

    CHECK_THROWS_AS(experiment_spec_from_json(json::parse(R"({"KK":4})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(experiment_spec_from_json(json::parse(R"({"mu_w":0.1})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(experiment_spec_from_json(
                        json::parse(R"({"mu_w":"auto","mu_y":0.5})")),
                    std::invalid_argument);
}

TEST_CASE("atomic writes land complete files and matrix csv is dense") {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "ped2_serialization_test";
    std::filesystem::remove_all(dir);

    write_file_atomic(dir / "a.txt", "hello\n");
    CHECK(slurp(dir / "a.txt") == "hello\n");
    CHECK_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));

    MatrixXd m(2, 2);
    m << 1.0, 2.0, 3.0, 4.25;
    write_matrix_csv(dir / "m.csv", m);
    CHECK(slurp(dir / "m.csv") == "1,2\n3,4.25\n");

    SolveTrace trace;
    trace.rows.push_back(TraceRow{-1, 1.0, 2.0,
                                  std::numeric_limits<double>::quiet_NaN(),
                                  std::numeric_limits<double>::quiet_NaN()});
    trace.rows.push_back(TraceRow{0, 0.5, 1.0, 0.25, 0.75});
    write_trace_csv(dir / "t.csv", trace);
    CHECK(slurp(dir / "t.csv") ==
          "iter,sq_err_w,sq_err_y,lyapunov_V,bound_gamma_pow_i_Co\n"
          "-1,1,2,nan,nan\n"
          "0,0.5,1,0.25,0.75\n");

    write_logerr_dat(dir / "e.dat", trace);
    CHECK(slurp(dir / "e.dat") == "0 0.5\n");

    std::filesystem::remove_all(dir);
}
