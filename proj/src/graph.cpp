#include "ped2/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ped2/linalg.hpp"
#include "ped2/rng.hpp"

namespace ped2 {

Topology Topology::from_edges(int K, std::vector<std::pair<int, int>> raw_edges) {
    if (K < 1) throw std::invalid_argument("Topology: K must be >= 1");
    std::set<std::pair<int, int>> normalized;
    for (auto [s, k] : raw_edges) {
        if (s < 0 || s >= K || k < 0 || k >= K) {
            throw std::invalid_argument("Topology: edge endpoint out of range");
        }
        if (s == k) throw std::invalid_argument("Topology: self-loop edges are not allowed");
        normalized.insert({std::min(s, k), std::max(s, k)});
    }

    Topology t;
    t.K = K;
    t.edges.assign(normalized.begin(), normalized.end());
    t.neighbors.assign(static_cast<std::size_t>(K), {});
    for (int k = 0; k < K; ++k) t.neighbors[static_cast<std::size_t>(k)].push_back(k);
    for (auto [s, k] : t.edges) {
        t.neighbors[static_cast<std::size_t>(s)].push_back(k);
        t.neighbors[static_cast<std::size_t>(k)].push_back(s);
    }
    for (auto& list : t.neighbors) std::sort(list.begin(), list.end());
    return t;
}

bool Topology::connected() const {
    if (K <= 1) return true;
    std::vector<bool> seen(static_cast<std::size_t>(K), false);
    std::deque<int> frontier{0};
    seen[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
        const int k = frontier.front();
        frontier.pop_front();
        for (int s : neighbors[static_cast<std::size_t>(k)]) {
            if (!seen[static_cast<std::size_t>(s)]) {
                seen[static_cast<std::size_t>(s)] = true;
                ++reached;
                frontier.push_back(s);
            }
        }
    }
    return reached == K;
}

int Topology::degree(int k) const {
    if (k < 0 || k >= K) throw std::invalid_argument("Topology: agent index out of range");
    return static_cast<int>(neighbors[static_cast<std::size_t>(k)].size()) - 1;
}

Topology random_connected_topology(int K, double edge_prob, std::uint64_t seed) {
    if (K < 1) throw std::invalid_argument("random_connected_topology: K must be >= 1");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
        throw std::invalid_argument("random_connected_topology: edge_prob must be in [0, 1]");
    }
    Rng rng(seed);
    constexpr int kMaxAttempts = 10000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::vector<std::pair<int, int>> edges;
        for (int s = 0; s < K; ++s) {
            for (int k = s + 1; k < K; ++k) {
                if (rng.uniform() < edge_prob) edges.emplace_back(s, k);
            }
        }
        Topology t = Topology::from_edges(K, std::move(edges));
        if (t.connected()) return t;
    }
    throw std::runtime_error("random_connected_topology: no connected draw; edge_prob too small");
}

Eigen::MatrixXd metropolis(const Topology& topology) {
    if (!topology.connected()) {
        throw std::invalid_argument("metropolis: topology must be connected");
    }
    const int K = topology.K;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K, K);
    for (auto [s, k] : topology.edges) {
        const double n_s = static_cast<double>(topology.degree(s) + 1);
        const double n_k = static_cast<double>(topology.degree(k) + 1);
        const double w = 1.0 / std::max(n_s, n_k);
        A(s, k) = w;
        A(k, s) = w;
    }
    for (int k = 0; k < K; ++k) {
        A(k, k) = 1.0 - (A.row(k).sum() - A(k, k));
    }
    return A;
}

CombinationSet build_combination_set(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols() || A.rows() < 1) {
        throw std::invalid_argument("build_combination_set: A must be square and nonempty");
    }
    const int K = static_cast<int>(A.rows());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("build_combination_set: A must be symmetric");
    }
    if ((A.rowwise().sum() - Eigen::VectorXd::Ones(K)).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("build_combination_set: rows of A must sum to one");
    }
    if (A.minCoeff() < -1e-14) {
        throw std::invalid_argument("build_combination_set: A must be entrywise nonnegative");
    }

    CombinationSet cs;
    cs.K = K;
    cs.A = A;
    cs.Abar = 0.5 * (Eigen::MatrixXd::Identity(K, K) + A);
    const SymmetricEigen eig = jacobi_eigen(cs.Abar);
    cs.eig_Abar = eig.values;
    cs.eigvec_Abar = eig.vectors;
    if (K >= 2) {
        cs.lambda2 = eig.values(K - 2);
        if (cs.lambda2 >= 1.0 - 1e-12) {
            throw std::invalid_argument(
                "build_combination_set: second-largest eigenvalue reaches 1, "
                "the graph is effectively disconnected");
        }
        cs.sigma_min_L = std::sqrt(1.0 - cs.lambda2);
    } else {
        cs.lambda2 = std::numeric_limits<double>::quiet_NaN();
        cs.sigma_min_L = std::nullopt;
    }

    cs.neighbors.assign(static_cast<std::size_t>(K), {});
    for (int k = 0; k < K; ++k) {
        for (int s = 0; s < K; ++s) {
            if (s == k || A(s, k) != 0.0) cs.neighbors[static_cast<std::size_t>(k)].push_back(s);
        }
    }
    return cs;
}

double CombinationSet::sigma_max_L() const {
    return std::sqrt(std::max(0.0, 1.0 - eig_Abar(0)));
}

namespace {

Assumption2Report report_from_spectrum(const Eigen::VectorXd& eigenvalues) {
    Assumption2Report rep;
    double min_a = std::numeric_limits<double>::infinity();
    double min_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        const double lam = eigenvalues(i);
        min_a = std::min(min_a, lam);
        min_gap = std::min(min_gap, lam - lam * lam);
    }
    rep.min_eig_I_minus_L2 = min_a;          // I - L^2 = Abar
    rep.min_eig_I_minus_L2_minus_Abar2 = min_gap;
    rep.ok = min_a > 0.0 && min_gap >= -1e-12;
    return rep;
}

}  // namespace

Assumption2Report check_assumption2(const CombinationSet& cs) {
    return report_from_spectrum(cs.eig_Abar);
}

Assumption2Report check_assumption2(const Eigen::MatrixXd& Abar, const Eigen::MatrixXd* L) {
    if (Abar.rows() != Abar.cols()) {
        throw std::invalid_argument("check_assumption2: Abar must be square");
    }
    if (L == nullptr) {
        return report_from_spectrum(jacobi_eigen(Abar).values);
    }
    if (L->rows() != Abar.rows() || L->cols() != Abar.cols()) {
        throw std::invalid_argument("check_assumption2: L must match Abar in size");
    }
    const Eigen::Index n = Abar.rows();
    const Eigen::MatrixXd i_minus_l2 =
        Eigen::MatrixXd::Identity(n, n) - (*L) * (*L);
    const Eigen::MatrixXd gap = i_minus_l2 - Abar * Abar;
    Assumption2Report rep;
    rep.min_eig_I_minus_L2 = min_eigenvalue(0.5 * (i_minus_l2 + i_minus_l2.transpose()));
    rep.min_eig_I_minus_L2_minus_Abar2 = min_eigenvalue(0.5 * (gap + gap.transpose()));
    rep.ok = rep.min_eig_I_minus_L2 > 0.0 && rep.min_eig_I_minus_L2_minus_Abar2 >= -1e-12;
    return rep;
}

Eigen::MatrixXd materialize_L(const CombinationSet& cs) {
    const int K = cs.K;
    Eigen::VectorXd roots(K);
    for (int i = 0; i < K; ++i) {
        roots(i) = std::sqrt(std::max(0.0, 1.0 - cs.eig_Abar(i)));
    }
    // The stochastic eigenvalue is 1 up to roundoff; pin its root to zero so
    // the consensus direction lies exactly in the null space.
    if (std::abs(cs.eig_Abar(K - 1) - 1.0) <= 1e-9) roots(K - 1) = 0.0;
    Eigen::MatrixXd L = cs.eigvec_Abar * roots.asDiagonal() * cs.eigvec_Abar.transpose();
    return 0.5 * (L + L.transpose());
}

Eigen::VectorXd apply_block_matrix(const Eigen::MatrixXd& M, const Eigen::VectorXd& stacked,
                                   int block_dim) {
    if (M.rows() != M.cols()) {
        throw std::invalid_argument("apply_block_matrix: M must be square");
    }
    if (block_dim < 1 || stacked.size() != M.rows() * block_dim) {
        std::ostringstream msg;
        msg << "apply_block_matrix: vector of size " << stacked.size()
            << " does not split into " << M.rows() << " blocks of " << block_dim;
        throw std::invalid_argument(msg.str());
    }
    const Eigen::Index K = M.rows();
    Eigen::VectorXd out(stacked.size());
    Eigen::Map<const Eigen::MatrixXd> in(stacked.data(), block_dim, K);
    Eigen::Map<Eigen::MatrixXd>(out.data(), block_dim, K) = in * M.transpose();
    return out;
}

}  // namespace ped2
