#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arealmix/models.hpp"
#include "arealmix/sampler.hpp"

namespace arealmix {

struct WaicResult {
  double waic = 0.0;
  double p_w = 0.0;
  double lppd = 0.0;
};

/// WAIC from a draws x observations log-likelihood matrix. The parallel
/// policy splits observations across threads; results match the serial path.
WaicResult waic(const Eigen::MatrixXd& loglik, Execution execution = Execution::parallel);

/// Type-7 empirical quantile (linear interpolation of order statistics).
double quantile(std::vector<double> values, double prob);

struct PosteriorSummary {
  double mean = 0.0;
  double lower = 0.0;  // 2.5%
  double upper = 0.0;  // 97.5%
};

inline constexpr std::size_t kMinSummaryDraws = 40;

/// Mean and central 95% interval; throws InputError with fewer than 40 draws.
PosteriorSummary posterior_summary(std::span<const double> draws);

struct OutlierFlags {
  std::vector<bool> flagged;
  Eigen::VectorXd kappa_upper;
};

/// Flags node i when the 97.5% quantile of column i is strictly below 1.
OutlierFlags detect_outliers(const Eigen::MatrixXd& kappa_draws);

Eigen::VectorXd smr(std::span<const int> y, const Eigen::VectorXd& expected);

/// E_i = P_i * sum(y) / sum(P). Throws InputError when sum(y) is zero.
Eigen::VectorXd offsets_from_population(const Eigen::VectorXd& population, std::span<const int> y);

struct SummaryRow {
  std::string name;
  PosteriorSummary summary;
  double rhat = 0.0;
  double ess = 0.0;
  std::string issue;  // why rhat/ess are undefined, if they are
};

struct OutlierRow {
  std::string id;
  double kappa_upper = 0.0;
  bool flagged = false;
};

struct FitReport {
  std::string model;
  std::vector<SummaryRow> rows;         // every recorded output
  WaicResult waic;
  std::vector<OutlierRow> outliers;     // empty for models without kappa
  std::vector<std::string> area_ids;
  Eigen::VectorXd latent_mean;          // posterior mean of b per area
  int divergences = 0;
  double max_rhat = 0.0;                // NaN-free maximum over defined values

  bool has_outliers() const { return !outliers.empty(); }
  const SummaryRow& row(const std::string& name) const;
};

/// Summaries, WAIC, convergence table, outlier flags and latent means of a fit.
FitReport build_fit_report(const Model& model, const PosteriorDraws& draws,
                           Execution execution = Execution::parallel);

/// Draws x n matrix of the columns [first, first + n) of a draw set.
Eigen::MatrixXd output_block(const PosteriorDraws& draws, int first, int n);

}  // namespace arealmix
