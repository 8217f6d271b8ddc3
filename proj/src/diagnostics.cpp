#include "arealmix/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "arealmix/error.hpp"

namespace arealmix {

namespace {

// log(mean(exp(v))) and the S-1 sample variance of one observation's column.
std::pair<double, double> column_terms(const Eigen::MatrixXd& loglik, Eigen::Index i) {
  const auto col = loglik.col(i);
  const double s = static_cast<double>(col.size());
  const double top = col.maxCoeff();
  const double lme = top + std::log((col.array() - top).exp().sum() / s);
  const double mean = col.mean();
  const double var = (col.array() - mean).square().sum() / (s - 1.0);
  return {lme, var};
}

}  // namespace

WaicResult waic(const Eigen::MatrixXd& loglik, Execution execution) {
  if (loglik.rows() < 2) throw InputError("WAIC needs at least 2 draws");
  if (!loglik.allFinite()) throw InputError("WAIC input contains non-finite log-likelihood values");
  const Eigen::Index n = loglik.cols();
  std::vector<double> lme(static_cast<std::size_t>(n)), var(static_cast<std::size_t>(n));
  if (execution == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      std::tie(lme[static_cast<std::size_t>(i)], var[static_cast<std::size_t>(i)]) = column_terms(loglik, i);
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::tie(lme[static_cast<std::size_t>(i)], var[static_cast<std::size_t>(i)]) = column_terms(loglik, i);
    }
  }
  // Reduced in index order so both policies agree to the bit.
  WaicResult r;
  r.lppd = std::accumulate(lme.begin(), lme.end(), 0.0);
  r.p_w = std::accumulate(var.begin(), var.end(), 0.0);
  r.waic = -2.0 * (r.lppd - r.p_w);
  return r;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw InputError("quantile probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PosteriorSummary posterior_summary(std::span<const double> draws) {
  if (draws.size() < kMinSummaryDraws)
    throw InputError("posterior summary needs at least " + std::to_string(kMinSummaryDraws) + " draws");
  std::vector<double> v(draws.begin(), draws.end());
  PosteriorSummary s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.lower = quantile(v, 0.025);
  s.upper = quantile(std::move(v), 0.975);
  return s;
}

OutlierFlags detect_outliers(const Eigen::MatrixXd& kappa_draws) {
  OutlierFlags out;
  const Eigen::Index n = kappa_draws.cols();
  out.kappa_upper.resize(n);
  out.flagged.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto col = kappa_draws.col(i);
    out.kappa_upper[i] = quantile(std::vector<double>(col.begin(), col.end()), 0.975);
    out.flagged[static_cast<std::size_t>(i)] = out.kappa_upper[i] < 1.0;
  }
  return out;
}

Eigen::VectorXd smr(std::span<const int> y, const Eigen::VectorXd& expected) {
  if (static_cast<Eigen::Index>(y.size()) != expected.size()) throw InputError("smr: y and E differ in length");
  Eigen::VectorXd out(expected.size());
  for (Eigen::Index i = 0; i < expected.size(); ++i) {
    if (!(expected[i] > 0.0)) throw InputError("smr: expected counts must be positive");
    out[i] = y[static_cast<std::size_t>(i)] / expected[i];
  }
  return out;
}

Eigen::VectorXd offsets_from_population(const Eigen::VectorXd& population, std::span<const int> y) {
  if (static_cast<Eigen::Index>(y.size()) != population.size())
    throw InputError("population and counts differ in length");
  if (population.size() == 0 || !(population.array() > 0.0).all())
    throw InputError("population sizes must be positive");
  long long total = 0;
  for (int v : y) {
    if (v < 0) throw InputError("counts must be nonnegative");
    total += v;
  }
  if (total == 0) throw InputError("all counts are zero; offsets are undefined");
  return population * (static_cast<double>(total) / population.sum());
}

const SummaryRow& FitReport::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw std::out_of_range("no summary row named " + name);
}

Eigen::MatrixXd output_block(const PosteriorDraws& draws, int first, int n) {
  const Eigen::Index rows = static_cast<Eigen::Index>(draws.chains) * draws.draws;
  Eigen::MatrixXd m(rows, n);
  for (int c = 0; c < draws.chains; ++c)
    for (int d = 0; d < draws.draws; ++d)
      for (int i = 0; i < n; ++i)
        m(static_cast<Eigen::Index>(c) * draws.draws + d, i) = draws.value(c, d, static_cast<std::size_t>(first + i));
  return m;
}

FitReport build_fit_report(const Model& model, const PosteriorDraws& draws, Execution execution) {
  FitReport rep;
  rep.model = std::string(model_name(model.spec().kind));
  const int n = model.areas();
  const auto& g = model.data().graph;
  for (int i = 0; i < n; ++i) rep.area_ids.push_back(g.label(i));

  const std::size_t dim = draws.dim();
  rep.rows.resize(dim);
  auto fill = [&](std::size_t k) {
    SummaryRow& row = rep.rows[k];
    row.name = draws.names[k];
    const auto col = draws.column(k);
    row.summary = posterior_summary(col);
    const auto per_chain = draws.chains_of(k);
    const ConvergenceStat r = split_rhat(per_chain);
    const ConvergenceStat e = ess(per_chain);
    row.rhat = r.value;
    row.ess = e.value;
    row.issue = r.issue;
  };
  if (execution == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t k = 0; k < dim; ++k) fill(k);
  } else {
    for (std::size_t k = 0; k < dim; ++k) fill(k);
  }
  rep.max_rhat = 0.0;
  for (const auto& r : rep.rows)
    if (std::isfinite(r.rhat)) rep.max_rhat = std::max(rep.max_rhat, r.rhat);

  rep.waic = waic(draws.loglik_matrix(), execution);
  rep.divergences = draws.total_divergences();

  const Model::OutputLayout layout = model.output_layout();
  rep.latent_mean = output_block(draws, layout.latent, n).colwise().mean().transpose();
  if (layout.kappa >= 0) {
    const OutlierFlags flags = detect_outliers(output_block(draws, layout.kappa, n));
    for (int i = 0; i < n; ++i)
      rep.outliers.push_back({rep.area_ids[static_cast<std::size_t>(i)], flags.kappa_upper[i],
                              flags.flagged[static_cast<std::size_t>(i)]});
  }
  return rep;
}

}  // namespace arealmix
