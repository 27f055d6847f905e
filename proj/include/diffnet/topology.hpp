#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace diffnet {

enum class GraphModel { Ring, Complete, Random };

// Undirected agent graph with mandatory self-loops. Immutable after
// construction, so it can be shared read-only across concurrent
// replications. Neighborhood lists are sorted ascending and always
// contain the node itself.
class Topology {
public:
    // Builds from a symmetric boolean adjacency (row-major n x n).
    // Self-loops are forced on; asymmetry throws. Connectivity is the
    // caller's concern (see is_strongly_connected).
    static Topology from_adjacency(int n_nodes, const std::vector<std::uint8_t>& adjacency);

    int n_nodes() const { return n_; }
    bool linked(int k, int l) const { return adj_[static_cast<std::size_t>(k) * n_ + l] != 0; }
    const std::vector<int>& neighbors(int k) const { return nbrs_[static_cast<std::size_t>(k)]; }
    int degree(int k) const { return static_cast<int>(nbrs_[static_cast<std::size_t>(k)].size()); }
    int max_degree() const;

private:
    Topology() = default;

    int n_ = 0;
    std::vector<std::uint8_t> adj_;       // row-major n x n
    std::vector<std::vector<int>> nbrs_;  // sorted ascending, includes self
};

// Neighborhood selection matrix P_k: the N x n_k 0/1 matrix whose
// columns are the standard basis vectors indexed by N_k.
struct SelectionMap {
    int node = 0;
    std::vector<int> columns;  // global indices, ascending

    static SelectionMap of(const Topology& t, int k);
    Eigen::MatrixXd matrix(int n_nodes) const;
};

// Generates a graph of the requested model. The random model draws
// Erdos-Renyi off-diagonal edges with probability edge_prob and
// resamples (up to max_attempts) until the graph is connected.
// Deterministic given (n_nodes, model, seed).
Topology generate_topology(int n_nodes, GraphModel model, std::uint64_t seed,
                           double edge_prob = 0.5, int max_attempts = 1000);

// For an undirected graph with self-loops this is plain connectivity.
bool is_strongly_connected(const Topology& t);

// Principal submatrix of m indexed by N_k, i.e. P_k^T m P_k.
Eigen::MatrixXd restrict_to_neighborhood(const Topology& t, int k, const Eigen::MatrixXd& m);

// P_k v: embeds a length-n_k vector into R^N, zero outside N_k.
Eigen::VectorXd embed_from_neighborhood(const Topology& t, int k, const Eigen::VectorXd& v);

// Adjacency-list text block used inside experiment configs. One line
// per node, "k: l1 l2 ...", self-loops implied.
std::string to_adjacency_text(const Topology& t);
Topology topology_from_adjacency_text(int n_nodes, const std::vector<std::string>& lines);

}  // namespace diffnet
