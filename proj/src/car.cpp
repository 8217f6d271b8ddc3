#include "arealmix/car.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "arealmix/error.hpp"

namespace arealmix {

double icar_kernel(std::span<const double> u, const AdjacencyGraph& g) {
  if (static_cast<int>(u.size()) != g.size())
    throw InputError("icar_kernel: vector length " + std::to_string(u.size()) + " != n = " +
                     std::to_string(g.size()));
  double acc = 0.0;
  for (auto [i, j] : g.edges()) {
    const double d = u[static_cast<std::size_t>(i)] - u[static_cast<std::size_t>(j)];
    acc += d * d;
  }
  return -0.5 * acc;
}

Eigen::VectorXd laplacian_times(const AdjacencyGraph& g, const Eigen::VectorXd& u) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.size());
  for (auto [i, j] : g.edges()) {
    const double d = u[i] - u[j];
    out[i] += d;
    out[j] -= d;
  }
  return out;
}

IcarSampler::IcarSampler(const AdjacencyGraph& g) : IcarSampler(laplacian_spectrum(g)) {}

IcarSampler::IcarSampler(LaplacianSpectrum spectrum) : spectrum_(std::move(spectrum)) {
  if (spectrum_.null_dimension != 1)
    throw DisconnectedGraphError("ICAR sampling requires a connected graph");
}

Eigen::VectorXd IcarSampler::sample(double h, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index n = spectrum_.eigenvalues.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  // Column 0 is the constant null direction; it receives no weight.
  for (Eigen::Index k = 1; k < n; ++k) {
    const double sd = 1.0 / std::sqrt(h * spectrum_.eigenvalues[k]);
    out += (sd * normal(rng)) * spectrum_.eigenvectors.col(k);
  }
  return out;
}

Eigen::VectorXd sample_icar_scaled(const AdjacencyGraph& g, double h, Rng& rng) {
  return IcarSampler(g).sample(h, rng);
}

Eigen::MatrixXd pcar_precision(const AdjacencyGraph& g, double alpha) {
  const int n = g.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = g.degree(i);
  for (auto [i, j] : g.edges()) {
    m(i, j) = -alpha;
    m(j, i) = -alpha;
  }
  return m;
}

Eigen::VectorXd sample_pcar(const AdjacencyGraph& g, const PcarParams& p, Rng& rng) {
  if (!(p.alpha >= 0.0 && p.alpha < 1.0)) throw InputError("PCAR alpha must lie in [0, 1)");
  if (!(p.sigma_b > 0.0)) throw InputError("PCAR sigma_b must be positive");
  Eigen::LLT<Eigen::MatrixXd> llt(pcar_precision(g, p.alpha));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("PCAR precision is not positive definite (isolated node?)");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(g.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  // Cov(L^{-T} z) = (L L^T)^{-1}.
  Eigen::VectorXd b = llt.matrixU().solve(z);
  return p.sigma_b * b;
}

Eigen::MatrixXd leroux_precision(const AdjacencyGraph& g, double lambda) {
  Eigen::MatrixXd m = lambda * laplacian(g).to_dense();
  m.diagonal().array() += 1.0 - lambda;
  return m;
}

Eigen::MatrixXd congdon_precision(const AdjacencyGraph& g, double lambda, std::span<const double> kappa) {
  const int n = g.size();
  if (static_cast<int>(kappa.size()) != n) throw InputError("congdon_precision: kappa length mismatch");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = kappa[static_cast<std::size_t>(i)] * (1.0 - lambda + lambda * g.degree(i));
  for (auto [i, j] : g.edges()) {
    const double v = -lambda * kappa[static_cast<std::size_t>(i)] * kappa[static_cast<std::size_t>(j)];
    m(i, j) = v;
    m(j, i) = v;
  }
  return m;
}

namespace {

void take_min(ValidityCheck& out, int node, double bound) {
  if (bound < out.bound) {
    out.bound = bound;
    out.binding_node = node;
  }
}

void finish(ValidityCheck& out, double lambda) {
  out.margin = out.bound - lambda;
  out.valid = lambda < out.bound;
}

}  // namespace

ValidityCheck check_congdon_validity(double lambda, std::span<const double> kappa, const AdjacencyGraph& g) {
  if (static_cast<int>(kappa.size()) != g.size()) throw InputError("check_congdon_validity: kappa length mismatch");
  ValidityCheck out;
  for (int i = 0; i < g.size(); ++i) {
    double s = 1.0 - g.degree(i);
    for (int j : g.neighbours(i)) s += kappa[static_cast<std::size_t>(j)];
    // A non-positive denominator places no restriction on lambda.
    if (s > 0.0) take_min(out, i, 1.0 / s);
  }
  finish(out, lambda);
  return out;
}

ValidityCheck check_mixture_validity(double lambda, const Eigen::MatrixXd& scaled_pinv) {
  ValidityCheck out;
  for (Eigen::Index i = 0; i < scaled_pinv.rows(); ++i) {
    double s = 1.0 - scaled_pinv(i, i) + scaled_pinv.row(i).cwiseAbs().sum() - std::abs(scaled_pinv(i, i));
    if (s > 0.0) take_min(out, static_cast<int>(i), 1.0 / s);
  }
  finish(out, lambda);
  return out;
}

}  // namespace arealmix
