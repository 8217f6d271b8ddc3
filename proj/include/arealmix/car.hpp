#pragma once

#include <limits>
#include <span>

#include <Eigen/Dense>

#include "arealmix/graph.hpp"
#include "arealmix/rng.hpp"

namespace arealmix {

/// Proper CAR: b ~ N(0, sigma_b^2 (D - alpha W)^{-1}).
struct PcarParams {
  double alpha = 0.7;
  double sigma_b = 1.0;
};

/// -(1/2) sum over edges of (u_i - u_j)^2, the intrinsic CAR log-kernel with
/// unit conditional scale. Throws InputError on a length mismatch.
double icar_kernel(std::span<const double> u, const AdjacencyGraph& g);

/// (Q u)_i computed from the edge list.
Eigen::VectorXd laplacian_times(const AdjacencyGraph& g, const Eigen::VectorXd& u);

/// Exact sampler for the scaled intrinsic CAR N(0, (hQ)^-) by spectral
/// decomposition. The decomposition is computed once; draws are cheap.
class IcarSampler {
 public:
  explicit IcarSampler(const AdjacencyGraph& g);
  explicit IcarSampler(LaplacianSpectrum spectrum);

  Eigen::VectorXd sample(double h, Rng& rng) const;
  const LaplacianSpectrum& spectrum() const { return spectrum_; }

 private:
  LaplacianSpectrum spectrum_;
};

Eigen::VectorXd sample_icar_scaled(const AdjacencyGraph& g, double h, Rng& rng);

/// Exact PCAR draw through a Cholesky factor of D - alpha W.
Eigen::VectorXd sample_pcar(const AdjacencyGraph& g, const PcarParams& p, Rng& rng);

/// Dense D - alpha W.
Eigen::MatrixXd pcar_precision(const AdjacencyGraph& g, double alpha);

/// Leroux precision (1 - lambda) I + lambda Q.
Eigen::MatrixXd leroux_precision(const AdjacencyGraph& g, double lambda);

/// Congdon joint precision: diagonal kappa_i (1 - lambda + lambda d_i),
/// off-diagonal -lambda w_ij kappa_i kappa_j.
Eigen::MatrixXd congdon_precision(const AdjacencyGraph& g, double lambda, std::span<const double> kappa);

struct ValidityCheck {
  bool valid = true;
  int binding_node = -1;  // node with the smallest bound, -1 when no node binds
  double bound = std::numeric_limits<double>::infinity();
  double margin = std::numeric_limits<double>::infinity();  // bound - lambda at the binding node
};

/// Diagonal-dominance bound for Congdon's precision:
/// lambda < min_i 1 / (1 - d_i + sum_{j~i} kappa_j). Sufficient, not necessary.
ValidityCheck check_congdon_validity(double lambda, std::span<const double> kappa, const AdjacencyGraph& g);

/// Diagonal-dominance bound on lambda for the scale-mixture BYM2 covariance,
/// lambda < min_i 1 / (1 - P_ii + sum_{j != i} |P_ij|) with P the generalized
/// inverse of hQ. Diagnostic only; fitting never enforces it.
ValidityCheck check_mixture_validity(double lambda, const Eigen::MatrixXd& scaled_pinv);

}  // namespace arealmix
