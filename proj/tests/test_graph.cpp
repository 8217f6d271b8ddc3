#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "arealmix/error.hpp"
#include "arealmix/graph.hpp"
#include "oracles.hpp"

using namespace arealmix;

TEST_CASE("edge list parsing") {
  SUBCASE("single edge") {
    const auto g = load_edge_list("n 2\n1 2\n");
    CHECK(g.size() == 2);
    CHECK(g.degrees() == std::vector<int>{1, 1});
  }
  SUBCASE("path and duplicate collapse") {
    const auto a = load_edge_list("n 3\n1 2\n2 3");
    const auto b = load_edge_list("n 3\n1 2\n2 1\n2 3");
    CHECK(a.degrees() == std::vector<int>{1, 2, 1});
    CHECK(a.edges() == b.edges());
    CHECK(b.degrees() == std::vector<int>{1, 2, 1});
  }
  SUBCASE("comments and blank lines") {
    const auto g = load_edge_list("# header\n\nn 3\n1 3  # trailing\n");
    CHECK(g.edges() == std::vector<Edge>{{0, 2}});
  }
  SUBCASE("errors name the line") {
    auto message = [](const char* text) {
      try {
        load_edge_list(text);
      } catch (const InputError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message("n 3\n1 1\n").find("line 2") != std::string::npos);
    CHECK(message("n 3\n1 4\n").find("line 2") != std::string::npos);
    CHECK(message("n 3\n1 2\nfoo bar\n").find("line 3") != std::string::npos);
    CHECK_THROWS_AS(load_edge_list("1 2\n"), InputError);
  }
}

TEST_CASE("laplacian") {
  SUBCASE("2-node path") {
    const Eigen::MatrixXd q = laplacian(load_edge_list("n 2\n1 2")).to_dense();
    CHECK(q(0, 0) == 1.0);
    CHECK(q(0, 1) == -1.0);
    CHECK(q(1, 0) == -1.0);
    CHECK(q(1, 1) == 1.0);
  }
  SUBCASE("3-node path") {
    const Eigen::MatrixXd q = laplacian(load_edge_list("n 3\n1 2\n2 3")).to_dense();
    CHECK(q.diagonal() == Eigen::Vector3d(1, 2, 1));
    CHECK(q(0, 1) == -1.0);
    CHECK(q(1, 2) == -1.0);
    CHECK(q(0, 2) == 0.0);
  }
  SUBCASE("lattice rows sum to zero and entries are sorted") {
    const auto sp = laplacian(lattice_graph(10, 10));
    CHECK(sp.symmetric);
    CHECK(sp.to_dense().rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::is_sorted(sp.entries.begin(), sp.entries.end(),
                         [](const auto& a, const auto& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); }));
  }
}

TEST_CASE("connected components") {
  CHECK(connected_components(load_edge_list("n 3\n1 2\n2 3")).count == 1);
  const auto two = connected_components(AdjacencyGraph(2, {}));
  CHECK(two.count == 2);
  CHECK(two.label[0] != two.label[1]);
  // A 4x4 block plus an island joined by a single bridge.
  std::vector<Edge> edges = lattice_graph(4, 4).edges();
  edges.emplace_back(15, 16);
  CHECK(connected_components(AdjacencyGraph(17, edges)).count == 1);
}

TEST_CASE("generalized inverse diagonal") {
  SUBCASE("2-node path") {
    const auto d = generalized_inverse_diag(laplacian(load_edge_list("n 2\n1 2")));
    CHECK(d[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(d[1] == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("3-node path") {
    const auto d = generalized_inverse_diag(laplacian(load_edge_list("n 3\n1 2\n2 3")));
    CHECK(d[0] == doctest::Approx(5.0 / 9).epsilon(1e-13));
    CHECK(d[1] == doctest::Approx(2.0 / 9).epsilon(1e-13));
    CHECK(d[2] == doctest::Approx(5.0 / 9).epsilon(1e-13));
  }
  SUBCASE("disconnected graph is rejected") {
    const AdjacencyGraph g(4, {{0, 1}, {2, 3}});
    CHECK_THROWS_AS(generalized_inverse_diag(laplacian(g)), DisconnectedGraphError);
    CHECK_THROWS_AS(scaling_factor(g), DisconnectedGraphError);
  }
  SUBCASE("random connected graphs against the dense SVD oracle") {
    std::mt19937_64 rng(314);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 2 + trial % 29;
      const auto g = oracle::random_connected_graph(n, 0.15, rng);
      const Eigen::VectorXd d = generalized_inverse_diag(laplacian(g));
      const Eigen::MatrixXd ref = oracle::pinv(oracle::dense_laplacian(g));
      for (int i = 0; i < n; ++i) {
        CHECK(d[i] > 0.0);
        CHECK(std::abs(d[i] - ref(i, i)) <= 1e-8 * ref(i, i));
      }
    }
  }
}

TEST_CASE("scaling factor") {
  CHECK(scaling_factor(load_edge_list("n 2\n1 2")) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(scaling_factor(load_edge_list("n 3\n1 2\n2 3")) == doctest::Approx(std::cbrt(50.0 / 729)).epsilon(1e-13));
  CHECK(scaling_factor(load_edge_list("n 3\n1 2\n2 3\n1 3")) == doctest::Approx(2.0 / 9).epsilon(1e-13));

  SUBCASE("invariant under relabelling") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 5 + trial;
      const auto g = oracle::random_connected_graph(n, 0.2, rng);
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<Edge> edges;
      for (auto [i, j] : g.edges()) edges.emplace_back(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(i)]);
      std::shuffle(edges.begin(), edges.end(), rng);
      CHECK(scaling_factor(AdjacencyGraph(n, edges)) == doctest::Approx(scaling_factor(g)).epsilon(1e-12));
    }
  }
}

TEST_CASE("one null eigenvalue per component") {
  std::mt19937_64 rng(5);
  for (int components = 1; components <= 4; ++components) {
    std::vector<Edge> edges;
    int offset = 0;
    for (int c = 0; c < components; ++c) {
      const auto part = oracle::random_connected_graph(6, 0.3, rng);
      for (auto [i, j] : part.edges()) edges.emplace_back(i + offset, j + offset);
      offset += 6;
    }
    const AdjacencyGraph g(offset, edges);
    CHECK(laplacian_spectrum(g).null_dimension == components);
    CHECK(connected_components(g).count == components);
  }
}

TEST_CASE("labels") {
  auto g = lattice_graph(2, 2);
  CHECK(g.label(0) == "1");
  g.set_labels({"a", "b", "c", "d"});
  CHECK(g.label(3) == "d");
  CHECK_THROWS_AS(g.set_labels({"a"}), InputError);
}
