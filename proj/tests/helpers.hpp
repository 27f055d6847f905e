#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "diffnet/rng.hpp"
#include "diffnet/topology.hpp"

namespace testutil {

// Dense symmetric adjacency from an undirected edge list (self-loops
// are implied by Topology).
inline diffnet::Topology topo_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::uint8_t> adj(static_cast<std::size_t>(n) * n, 0);
    for (int k = 0; k < n; ++k) {
        adj[static_cast<std::size_t>(k) * n + k] = 1;
    }
    for (auto [a, b] : edges) {
        adj[static_cast<std::size_t>(a) * n + b] = 1;
        adj[static_cast<std::size_t>(b) * n + a] = 1;
    }
    return diffnet::Topology::from_adjacency(n, adj);
}

inline diffnet::Topology complete(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            edges.emplace_back(a, b);
        }
    }
    return topo_from_edges(n, edges);
}

inline diffnet::Topology path(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a + 1 < n; ++a) {
        edges.emplace_back(a, a + 1);
    }
    return topo_from_edges(n, edges);
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, diffnet::Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = rng.normal();
        }
    }
    return m;
}

inline Eigen::VectorXd random_vector(int n, diffnet::Rng& rng) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
        v(i) = rng.normal();
    }
    return v;
}

// Random symmetric PSD matrix B^T B with B (rank x n).
inline Eigen::MatrixXd random_psd(int n, int rank, diffnet::Rng& rng) {
    const Eigen::MatrixXd b = random_matrix(rank, n, rng);
    return b.transpose() * b;
}

}  // namespace testutil
