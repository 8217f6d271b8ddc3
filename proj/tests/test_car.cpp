#include <cmath>
#include <random>

#include "doctest.h"

#include "arealmix/car.hpp"
#include "arealmix/error.hpp"
#include "arealmix/graph.hpp"
#include "arealmix/rng.hpp"
#include "oracles.hpp"

using namespace arealmix;

namespace {

std::span<const double> view(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Eigen::MatrixXd sample_covariance(const std::vector<Eigen::VectorXd>& draws) {
  const auto n = draws.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const auto& d : draws) mean += d;
  mean /= static_cast<double>(draws.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (const auto& d : draws) cov += (d - mean) * (d - mean).transpose();
  return cov / static_cast<double>(draws.size() - 1);
}

}  // namespace

TEST_CASE("icar kernel") {
  const auto path2 = load_edge_list("n 2\n1 2");
  CHECK(icar_kernel(view(Eigen::Vector2d(1, -1)), path2) == -2.0);
  const auto lat = lattice_graph(4, 5);
  CHECK(icar_kernel(view(Eigen::VectorXd::Constant(20, 3.7)), lat) == 0.0);
  CHECK_THROWS_AS(icar_kernel(view(Eigen::Vector3d(1, 2, 3)), lat), InputError);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = oracle::random_connected_graph(3 + trial % 18, 0.25, rng);
    Eigen::VectorXd u(g.size());
    for (auto& v : u) v = normal(rng);
    const double ref = -0.5 * u.dot(oracle::dense_laplacian(g) * u);
    const double k = icar_kernel(view(u), g);
    CHECK(k <= 0.0);
    CHECK(std::abs(k - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
    // Translation invariance.
    const Eigen::VectorXd shifted = u.array() + normal(rng);
    CHECK(icar_kernel(view(shifted), g) == doctest::Approx(k).epsilon(1e-12));
    CHECK((laplacian_times(g, u) - oracle::dense_laplacian(g) * u).norm() < 1e-12);
  }
}

TEST_CASE("scaled ICAR sampler") {
  SUBCASE("draws sum to zero") {
    const auto g = lattice_graph(6, 7);
    Rng rng = make_stream(1);
    const IcarSampler s(g);
    for (int k = 0; k < 50; ++k) CHECK(std::abs(s.sample(scaling_factor(g), rng).sum()) < 1e-10);
  }
  SUBCASE("covariance on a 3-node path") {
    const auto g = load_edge_list("n 3\n1 2\n2 3");
    const double h = scaling_factor(g);
    Rng rng = make_stream(2);
    std::vector<Eigen::VectorXd> draws;
    for (int k = 0; k < 10000; ++k) draws.push_back(sample_icar_scaled(g, h, rng));
    const Eigen::MatrixXd ref = oracle::pinv(oracle::dense_laplacian(g)) / h;
    const Eigen::MatrixXd cov = sample_covariance(draws);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::abs(cov(i, j) - ref(i, j)) <= 0.05 * std::sqrt(ref(i, i) * ref(j, j)));
  }
  SUBCASE("unit geometric-mean variance after scaling") {
    const auto g = lattice_graph(8, 8);
    const IcarSampler s(g);
    const double h = scaling_factor(s.spectrum());
    Rng rng = make_stream(3);
    std::vector<Eigen::VectorXd> draws;
    for (int k = 0; k < 10000; ++k) draws.push_back(s.sample(h, rng));
    const Eigen::VectorXd var = sample_covariance(draws).diagonal();
    const double geo = std::exp(var.array().log().mean());
    CHECK(geo == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("PCAR sampler") {
  SUBCASE("alpha = 0 gives independent components with variance sigma^2 / d") {
    const auto g = lattice_graph(3, 3);
    Rng rng = make_stream(4);
    std::vector<Eigen::VectorXd> draws;
    for (int k = 0; k < 10000; ++k) draws.push_back(sample_pcar(g, {0.0, 1.5}, rng));
    const Eigen::MatrixXd cov = sample_covariance(draws);
    for (int i = 0; i < 9; ++i) CHECK(cov(i, i) == doctest::Approx(2.25 / g.degree(i)).epsilon(0.05));
  }
  SUBCASE("covariance matches the dense inverse") {
    std::mt19937_64 grng(8);
    const auto g = oracle::random_connected_graph(8, 0.3, grng);
    const PcarParams p{0.7, std::sqrt(0.7)};
    Rng rng = make_stream(5);
    std::vector<Eigen::VectorXd> draws;
    for (int k = 0; k < 10000; ++k) draws.push_back(sample_pcar(g, p, rng));
    const Eigen::MatrixXd ref = 0.7 * pcar_precision(g, 0.7).inverse();
    const Eigen::MatrixXd cov = sample_covariance(draws);
    // Relative on the diagonal; off-diagonal entries scaled by the diagonal.
    for (int i = 0; i < 8; ++i) {
      CHECK(cov(i, i) == doctest::Approx(ref(i, i)).epsilon(0.05));
      for (int j = 0; j < i; ++j)
        CHECK(std::abs(cov(i, j) - ref(i, j)) <= 0.05 * std::sqrt(ref(i, i) * ref(j, j)));
    }
  }
  SUBCASE("160-node draw is finite") {
    Rng rng = make_stream(6);
    const Eigen::VectorXd b = sample_pcar(lattice_graph(16, 10), {0.7, std::sqrt(0.7)}, rng);
    CHECK(b.allFinite());
  }
  SUBCASE("invalid parameters") {
    Rng rng = make_stream(7);
    CHECK_THROWS_AS(sample_pcar(lattice_graph(2, 2), {1.0, 1.0}, rng), InputError);
    CHECK_THROWS_AS(sample_pcar(lattice_graph(2, 2), {0.5, 0.0}, rng), InputError);
  }
}

TEST_CASE("precision matrices") {
  const auto g = lattice_graph(3, 4);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.size());
  for (double lambda : {0.0, 0.3, 0.99}) {
    const Eigen::MatrixXd c = congdon_precision(g, lambda, view(ones));
    const Eigen::MatrixXd l = leroux_precision(g, lambda);
    CHECK((c - l).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::MatrixXd ref =
        (1 - lambda) * Eigen::MatrixXd::Identity(g.size(), g.size()) + lambda * oracle::dense_laplacian(g);
    CHECK((l - ref).cwiseAbs().maxCoeff() < 1e-15);
  }
  const Eigen::MatrixXd p = pcar_precision(g, 0.4);
  CHECK(p(0, 0) == 2.0);
  CHECK(p(0, 1) == doctest::Approx(-0.4));
}

TEST_CASE("Congdon validity bound") {
  const auto g = lattice_graph(4, 4);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(16);
  for (double lambda : {0.01, 0.5, 0.999}) CHECK(check_congdon_validity(lambda, view(ones), g).valid);

  // Node 0 has degree 1 on a path; a huge kappa next to it breaks the bound.
  const auto path = load_edge_list("n 3\n1 2\n2 3");
  const Eigen::Vector3d kappa(1.0, 100.0, 1.0);
  const auto chk = check_congdon_validity(0.99, view(kappa), path);
  CHECK_FALSE(chk.valid);
  CHECK(chk.bound == doctest::Approx(1.0 / 100.0));
  CHECK(check_congdon_validity(1e-9, view(kappa), path).valid);
}

TEST_CASE("mixture validity bound") {
  const auto g = lattice_graph(3, 3);
  const LaplacianSpectrum s = laplacian_spectrum(g);
  const Eigen::MatrixXd scaled = generalized_inverse(s) / scaling_factor(s);
  CHECK(check_mixture_validity(0.0, scaled).valid);
  const auto hi = check_mixture_validity(0.999, scaled);
  CHECK(std::isfinite(hi.bound));
  CHECK(hi.valid == (0.999 < hi.bound));
}
