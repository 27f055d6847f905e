#include <doctest.h>

#include <Eigen/Dense>
#include <set>

#include "diffnet/errors.hpp"
#include "diffnet/rng.hpp"
#include "diffnet/topology.hpp"
#include "helpers.hpp"

using namespace diffnet;

TEST_CASE("ring of three gives every node degree three") {
    const Topology t = generate_topology(3, GraphModel::Ring, 1);
    for (int k = 0; k < 3; ++k) {
        CHECK(t.degree(k) == 3);  // both ring neighbors plus self
    }
    CHECK(is_strongly_connected(t));
}

TEST_CASE("complete graph neighborhoods contain every node") {
    const Topology t = generate_topology(4, GraphModel::Complete, 1);
    for (int k = 0; k < 4; ++k) {
        CHECK(t.degree(k) == 4);
        for (int l = 0; l < 4; ++l) {
            CHECK(t.linked(k, l));
        }
    }
}

TEST_CASE("random graph with edge probability one is the complete graph") {
    const Topology r = generate_topology(5, GraphModel::Random, 9, 1.0);
    const Topology c = generate_topology(5, GraphModel::Complete, 9);
    for (int k = 0; k < 5; ++k) {
        for (int l = 0; l < 5; ++l) {
            CHECK(r.linked(k, l) == c.linked(k, l));
        }
    }
}

TEST_CASE("self-loops are always present") {
    const Topology t = generate_topology(6, GraphModel::Random, 3, 0.4);
    for (int k = 0; k < 6; ++k) {
        CHECK(t.linked(k, k));
    }
}

TEST_CASE("connectivity check accepts a ring and rejects disjoint edges") {
    CHECK(is_strongly_connected(testutil::topo_from_edges(
        4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}})));
    CHECK_FALSE(is_strongly_connected(testutil::topo_from_edges(4, {{0, 1}, {2, 3}})));
}

TEST_CASE("asymmetric adjacency is rejected") {
    std::vector<std::uint8_t> adj = {1, 1, 0, 1};  // 2x2, (0,1) set but (1,0) clear
    adj[2] = 0;
    CHECK_THROWS_AS(Topology::from_adjacency(2, adj), ConfigError);
}

TEST_CASE("generated random graphs are reproducible per seed") {
    const Topology a = generate_topology(12, GraphModel::Random, 5, 0.3);
    const Topology b = generate_topology(12, GraphModel::Random, 5, 0.3);
    const Topology c = generate_topology(12, GraphModel::Random, 6, 0.3);
    bool same = true, differs = false;
    for (int k = 0; k < 12; ++k) {
        for (int l = 0; l < 12; ++l) {
            same = same && (a.linked(k, l) == b.linked(k, l));
            differs = differs || (a.linked(k, l) != c.linked(k, l));
        }
    }
    CHECK(same);
    CHECK(differs);
    CHECK(is_strongly_connected(a));
}

TEST_CASE("generator gives up when no connected draw is plausible") {
    CHECK_THROWS_AS(generate_topology(40, GraphModel::Random, 1, 1e-4, 50), SimulationError);
}

TEST_CASE("neighborhood restriction picks out the expected submatrix") {
    // Path 0-1-2; node 0 sees {0, 1}.
    const Topology t = testutil::path(3);
    Eigen::MatrixXd m(3, 3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            m(i, j) = static_cast<double>(i + j + 2);
        }
    }
    const Eigen::MatrixXd r = restrict_to_neighborhood(t, 0, m);
    REQUIRE(r.rows() == 2);
    REQUIRE(r.cols() == 2);
    CHECK(r(0, 0) == 2.0);
    CHECK(r(0, 1) == 3.0);
    CHECK(r(1, 0) == 3.0);
    CHECK(r(1, 1) == 4.0);
}

TEST_CASE("restriction with a full neighborhood leaves the matrix unchanged") {
    const Topology t = testutil::complete(4);
    Rng rng(21);
    const Eigen::MatrixXd m = testutil::random_matrix(4, 4, rng);
    CHECK((restrict_to_neighborhood(t, 2, m) - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("restriction of the identity is the identity") {
    const Topology t = generate_topology(7, GraphModel::Random, 11, 0.5);
    for (int k = 0; k < 7; ++k) {
        const Eigen::MatrixXd r =
            restrict_to_neighborhood(t, k, Eigen::MatrixXd::Identity(7, 7));
        CHECK((r - Eigen::MatrixXd::Identity(r.rows(), r.cols())).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("restriction preserves symmetry and positive semidefiniteness") {
    const Topology t = generate_topology(8, GraphModel::Random, 13, 0.45);
    Rng rng(31);
    const Eigen::MatrixXd psd = testutil::random_psd(8, 8, rng);
    for (int k = 0; k < 8; ++k) {
        const Eigen::MatrixXd r = restrict_to_neighborhood(t, k, psd);
        CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * (1.0 + psd.trace()));
    }
}

TEST_CASE("selection map columns are orthonormal and embedding inverts restriction") {
    const Topology t = generate_topology(9, GraphModel::Random, 17, 0.4);
    Rng rng(33);
    for (int k = 0; k < 9; ++k) {
        const SelectionMap sel = SelectionMap::of(t, k);
        const Eigen::MatrixXd p = sel.matrix(9);
        const Eigen::MatrixXd gram = p.transpose() * p;
        CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);

        const Eigen::VectorXd v =
            testutil::random_vector(static_cast<int>(sel.columns.size()), rng);
        const Eigen::VectorXd embedded = embed_from_neighborhood(t, k, v);
        // Entries outside the neighborhood stay zero.
        for (int l = 0; l < 9; ++l) {
            if (!t.linked(l, k)) {
                CHECK(embedded(l) == 0.0);
            }
        }
        // Reading the neighborhood back recovers v exactly.
        const Eigen::VectorXd back = p.transpose() * embedded;
        CHECK((back - v).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("adjacency text round-trips") {
    const Topology t = generate_topology(10, GraphModel::Random, 23, 0.35);
    const std::string text = to_adjacency_text(t);
    std::vector<std::string> lines;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);) {
        lines.push_back(line);
    }
    const Topology back = topology_from_adjacency_text(10, lines);
    for (int k = 0; k < 10; ++k) {
        for (int l = 0; l < 10; ++l) {
            CHECK(t.linked(k, l) == back.linked(k, l));
        }
    }
}

TEST_CASE("adjacency text rejects malformed and disconnected input") {
    CHECK_THROWS_AS(topology_from_adjacency_text(3, {"0 1 2"}), ConfigError);
    CHECK_THROWS_AS(topology_from_adjacency_text(3, {"0: 5"}), ConfigError);
    CHECK_THROWS_AS(topology_from_adjacency_text(3, {"0: x"}), ConfigError);
    // 0-1 only: node 2 unreachable.
    CHECK_THROWS_AS(topology_from_adjacency_text(3, {"0: 1"}), ConfigError);
}

TEST_CASE("max_degree reports the largest neighborhood") {
    const Topology t = testutil::topo_from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {3, 4}});
    CHECK(t.max_degree() == 4);  // node 0: self + three neighbors
}
