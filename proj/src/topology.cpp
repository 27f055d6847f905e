#include "diffnet/topology.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

#include "diffnet/errors.hpp"
#include "diffnet/rng.hpp"

namespace diffnet {

Topology Topology::from_adjacency(int n_nodes, const std::vector<std::uint8_t>& adjacency) {
    if (n_nodes < 1) {
        throw ConfigError("topology: n_nodes must be >= 1");
    }
    const std::size_t n = static_cast<std::size_t>(n_nodes);
    if (adjacency.size() != n * n) {
        throw ConfigError("topology: adjacency size does not match n_nodes");
    }
    Topology t;
    t.n_ = n_nodes;
    t.adj_ = adjacency;
    for (std::size_t k = 0; k < n; ++k) {
        t.adj_[k * n + k] = 1;  // self-loops mandatory
        for (std::size_t l = k + 1; l < n; ++l) {
            if ((adjacency[k * n + l] != 0) != (adjacency[l * n + k] != 0)) {
                throw ConfigError("topology: adjacency must be symmetric");
            }
        }
    }
    t.nbrs_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            if (t.adj_[k * n + l] != 0) {
                t.nbrs_[k].push_back(static_cast<int>(l));
            }
        }
    }
    return t;
}

int Topology::max_degree() const {
    int best = 0;
    for (int k = 0; k < n_; ++k) {
        best = std::max(best, degree(k));
    }
    return best;
}

SelectionMap SelectionMap::of(const Topology& t, int k) {
    return SelectionMap{k, t.neighbors(k)};
}

Eigen::MatrixXd SelectionMap::matrix(int n_nodes) const {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_nodes, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        p(columns[j], static_cast<Eigen::Index>(j)) = 1.0;
    }
    return p;
}

bool is_strongly_connected(const Topology& t) {
    const int n = t.n_nodes();
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : t.neighbors(u)) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == n;
}

Topology generate_topology(int n_nodes, GraphModel model, std::uint64_t seed,
                           double edge_prob, int max_attempts) {
    if (n_nodes < 1) {
        throw ConfigError("generate_topology: n_nodes must be >= 1");
    }
    const std::size_t n = static_cast<std::size_t>(n_nodes);
    std::vector<std::uint8_t> adj(n * n, 0);
    switch (model) {
        case GraphModel::Ring:
            for (std::size_t k = 0; k < n; ++k) {
                adj[k * n + k] = 1;
                const std::size_t next = (k + 1) % n;
                adj[k * n + next] = 1;
                adj[next * n + k] = 1;
            }
            return Topology::from_adjacency(n_nodes, adj);
        case GraphModel::Complete:
            std::fill(adj.begin(), adj.end(), std::uint8_t{1});
            return Topology::from_adjacency(n_nodes, adj);
        case GraphModel::Random: {
            if (!(edge_prob > 0.0) || edge_prob > 1.0) {
                throw ConfigError("generate_topology: edge_prob must be in (0, 1]");
            }
            Rng rng(derive_seed(seed, Stream::Topology));
            for (int attempt = 0; attempt < max_attempts; ++attempt) {
                std::fill(adj.begin(), adj.end(), std::uint8_t{0});
                for (std::size_t k = 0; k < n; ++k) {
                    adj[k * n + k] = 1;
                    for (std::size_t l = k + 1; l < n; ++l) {
                        if (rng.bernoulli(edge_prob)) {
                            adj[k * n + l] = 1;
                            adj[l * n + k] = 1;
                        }
                    }
                }
                Topology t = Topology::from_adjacency(n_nodes, adj);
                if (is_strongly_connected(t)) {
                    return t;
                }
            }
            // The parameters were legal; the draw failed. Runtime, not config.
            throw SimulationError("generate_topology: no connected graph within retry budget");
        }
    }
    throw ConfigError("generate_topology: unknown graph model");
}

Eigen::MatrixXd restrict_to_neighborhood(const Topology& t, int k, const Eigen::MatrixXd& m) {
    if (m.rows() != t.n_nodes() || m.cols() != t.n_nodes()) {
        throw SimulationError("restrict_to_neighborhood: matrix must be N x N");
    }
    const auto& nb = t.neighbors(k);
    const Eigen::Index nk = static_cast<Eigen::Index>(nb.size());
    Eigen::MatrixXd out(nk, nk);
    for (Eigen::Index a = 0; a < nk; ++a) {
        for (Eigen::Index b = 0; b < nk; ++b) {
            out(a, b) = m(nb[static_cast<std::size_t>(a)], nb[static_cast<std::size_t>(b)]);
        }
    }
    return out;
}

Eigen::VectorXd embed_from_neighborhood(const Topology& t, int k, const Eigen::VectorXd& v) {
    const auto& nb = t.neighbors(k);
    if (v.size() != static_cast<Eigen::Index>(nb.size())) {
        throw SimulationError("embed_from_neighborhood: vector length must equal n_k");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(t.n_nodes());
    for (std::size_t j = 0; j < nb.size(); ++j) {
        out(nb[j]) = v(static_cast<Eigen::Index>(j));
    }
    return out;
}

std::string to_adjacency_text(const Topology& t) {
    std::ostringstream os;
    for (int k = 0; k < t.n_nodes(); ++k) {
        os << k << ":";
        for (int l : t.neighbors(k)) {
            if (l != k) {
                os << " " << l;
            }
        }
        os << "\n";
    }
    return os.str();
}

Topology topology_from_adjacency_text(int n_nodes, const std::vector<std::string>& lines) {
    if (n_nodes < 1) {
        throw ConfigError("adjacency: n_nodes must be >= 1");
    }
    const std::size_t n = static_cast<std::size_t>(n_nodes);
    std::vector<std::uint8_t> adj(n * n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        adj[k * n + k] = 1;
    }
    for (const std::string& line : lines) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("adjacency: expected 'node: neighbors...' in \"" + line + "\"");
        }
        std::istringstream head(line.substr(0, colon));
        int k = -1;
        if (!(head >> k) || k < 0 || k >= n_nodes) {
            throw ConfigError("adjacency: bad node index in \"" + line + "\"");
        }
        std::istringstream rest(line.substr(colon + 1));
        int l = -1;
        while (rest >> l) {
            if (l < 0 || l >= n_nodes) {
                throw ConfigError("adjacency: neighbor index out of range in \"" + line + "\"");
            }
            adj[static_cast<std::size_t>(k) * n + l] = 1;
            adj[static_cast<std::size_t>(l) * n + k] = 1;
        }
        if (!rest.eof()) {
            throw ConfigError("adjacency: unparsable neighbor list in \"" + line + "\"");
        }
    }
    Topology t = Topology::from_adjacency(n_nodes, adj);
    if (!is_strongly_connected(t)) {
        throw ConfigError("adjacency: graph is not connected");
    }
    return t;
}

}  // namespace diffnet
