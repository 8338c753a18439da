#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace ped2 {

/// Undirected communication graph over K agents. Neighbor lists are
/// self-inclusive (agent k always appears in its own list).
struct Topology {
    int K = 0;
    std::vector<std::pair<int, int>> edges;        // normalized s < k, deduplicated
    std::vector<std::vector<int>> neighbors;       // sorted, includes self

    static Topology from_edges(int K, std::vector<std::pair<int, int>> edges);

    bool connected() const;
    int degree(int k) const;
};

/// Erdos-Renyi draw with edge probability edge_prob, resampled until the
/// graph is connected. Deterministic in the seed.
Topology random_connected_topology(int K, double edge_prob, std::uint64_t seed);

/// Metropolis weights: a_{sk} = 1 / max(n_s, n_k) across edges, with
/// n_k = degree + 1, and diagonal chosen so rows sum to one. Symmetric,
/// doubly stochastic, positive diagonal.
Eigen::MatrixXd metropolis(const Topology& topology);

/// Combination matrices derived from a symmetric doubly-stochastic A:
/// Abar = (I + A) / 2 together with its full spectrum. The consensus-matrix
/// square here is I - Abar, so the smallest nonzero singular value of L is
/// sqrt(1 - lambda2).
struct CombinationSet {
    int K = 0;
    Eigen::MatrixXd A;
    Eigen::MatrixXd Abar;
    Eigen::VectorXd eig_Abar;                  // ascending
    Eigen::MatrixXd eigvec_Abar;               // columns matching eig_Abar
    double lambda2 = 0.0;                      // NaN when K == 1
    std::optional<double> sigma_min_L;         // empty when K == 1 (consensus trivial)
    std::vector<std::vector<int>> neighbors;   // structural nonzeros of A, self-inclusive

    double sigma_max_L() const;                // sqrt(1 - min eigenvalue of Abar)
};

CombinationSet build_combination_set(const Eigen::MatrixXd& A);

struct Assumption2Report {
    bool ok = false;
    double min_eig_I_minus_L2 = 0.0;
    double min_eig_I_minus_L2_minus_Abar2 = 0.0;
};

/// Spectral check of the combination-matrix conditions: I - L^2 must be
/// positive definite and Abar^2 <= I - L^2 must hold in the PSD order.
Assumption2Report check_assumption2(const CombinationSet& cs);

/// Generic form of the same check for an arbitrary (Abar, L) pair; when L is
/// omitted, L^2 = I - Abar is assumed.
Assumption2Report check_assumption2(const Eigen::MatrixXd& Abar,
                                    const Eigen::MatrixXd* L = nullptr);

/// Symmetric PSD square root of I - Abar. The top eigenvalue (the
/// stochastic eigenvalue 1) is zeroed exactly so that L * ones == 0.
Eigen::MatrixXd materialize_L(const CombinationSet& cs);

/// Applies a K x K matrix across the K blocks of a stacked vector:
/// out_k = sum_s M(k, s) * v_s. This is the action of M (Kronecker) I_E
/// without ever forming the EK x EK matrix.
Eigen::VectorXd apply_block_matrix(const Eigen::MatrixXd& M, const Eigen::VectorXd& stacked,
                                   int block_dim);

}  // namespace ped2
