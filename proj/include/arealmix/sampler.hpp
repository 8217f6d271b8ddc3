#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arealmix/density.hpp"

namespace arealmix {

/// How independent work units (chains, replicates, observations) are run.
/// Both policies produce bit-identical results.
enum class Execution { serial, parallel };

struct SamplerConfig {
  int chains = 2;
  int iterations = 20000;  // including warmup
  int warmup = 10000;
  int thin = 10;
  double target_accept = 0.8;
  int max_leapfrog = 1024;
  double integration_time = 2.0;  // leapfrog count is drawn from [1, ceil(integration_time / step)]
  std::uint64_t seed = 20152016;
  Execution execution = Execution::parallel;

  /// Throws InputError on an inconsistent configuration.
  void validate() const;
  int kept_draws() const { return (iterations - warmup) / thin; }
};

struct ChainStats {
  double mean_accept = 0.0;    // mean acceptance statistic after warmup
  int divergences = 0;         // divergent transitions after warmup
  int warmup_divergences = 0;
  double step_size = 0.0;
  double mean_leapfrog = 0.0;  // mean leapfrog steps per iteration after warmup
  Eigen::VectorXd inverse_metric;
};

/// Kept draws of every chain, stored chain-major: value(c, d, k).
struct PosteriorDraws {
  std::vector<std::string> names;
  int chains = 0;
  int draws = 0;  // kept draws per chain
  std::vector<double> values;
  std::size_t pointwise = 0;    // log-likelihood terms per draw
  std::vector<double> loglik;   // row (c * draws + d), pointwise columns
  std::vector<ChainStats> stats;

  std::size_t dim() const { return names.size(); }
  double value(int c, int d, std::size_t k) const {
    return values[(static_cast<std::size_t>(c) * static_cast<std::size_t>(draws) + static_cast<std::size_t>(d)) * dim() + k];
  }
  /// All draws of one output, chain after chain.
  std::vector<double> column(std::size_t k) const;
  /// Draws of one output split by chain.
  std::vector<std::vector<double>> chains_of(std::size_t k) const;
  /// Row-per-draw matrix of the pointwise log-likelihood.
  Eigen::MatrixXd loglik_matrix() const;
  /// Index of a named output; throws std::out_of_range when absent.
  std::size_t index_of(const std::string& name) const;
  int total_divergences() const;
};

/// Hamiltonian Monte Carlo with jittered trajectory length, dual-averaging
/// step size and a diagonal metric estimated in warmup windows. Chain c uses
/// the stream make_stream(seed, {c}). Without init each chain starts from a
/// uniform(-2, 2) point, retried up to 100 times until the density is finite.
PosteriorDraws hmc_run(const DifferentiableDensity& target, const SamplerConfig& config,
                       const std::optional<Eigen::VectorXd>& init = std::nullopt);

/// A convergence diagnostic, or NaN with the reason it is undefined.
struct ConvergenceStat {
  double value = 0.0;
  std::string issue;
  bool ok() const { return issue.empty(); }
};

/// Split R-hat: the largest of the rank-normalized bulk, folded tail and
/// untransformed statistics.
ConvergenceStat split_rhat(const std::vector<std::vector<double>>& chains);
ConvergenceStat split_rhat(const PosteriorDraws& draws, std::size_t parameter);

/// Rank-normalized bulk effective sample size over split chains.
ConvergenceStat ess(const std::vector<std::vector<double>>& chains);
ConvergenceStat ess(const PosteriorDraws& draws, std::size_t parameter);

}  // namespace arealmix
