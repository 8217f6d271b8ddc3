#include "arealmix/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "arealmix/error.hpp"
#include "arealmix/rng.hpp"

namespace arealmix {

std::vector<std::string> DifferentiableDensity::output_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < dimension(); ++i) names.push_back("x[" + std::to_string(i + 1) + "]");
  return names;
}

void DifferentiableDensity::write_outputs(std::span<const double> x, std::span<double> out) const {
  std::copy(x.begin(), x.end(), out.begin());
}

void SamplerConfig::validate() const {
  if (chains < 1) throw InputError("chains must be at least 1");
  if (warmup < 0 || iterations <= warmup) throw InputError("warmup must be nonnegative and below iterations");
  if (thin < 1) throw InputError("thin must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw InputError("target_accept must lie in (0, 1)");
  if (max_leapfrog < 1) throw InputError("max_leapfrog must be at least 1");
  if (!(integration_time > 0.0)) throw InputError("integration_time must be positive");
  if (kept_draws() < 1) throw InputError("configuration keeps no draws");
}

std::vector<double> PosteriorDraws::column(std::size_t k) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(chains) * static_cast<std::size_t>(draws));
  for (int c = 0; c < chains; ++c)
    for (int d = 0; d < draws; ++d) out.push_back(value(c, d, k));
  return out;
}

std::vector<std::vector<double>> PosteriorDraws::chains_of(std::size_t k) const {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(chains));
  for (int c = 0; c < chains; ++c)
    for (int d = 0; d < draws; ++d) out[static_cast<std::size_t>(c)].push_back(value(c, d, k));
  return out;
}

Eigen::MatrixXd PosteriorDraws::loglik_matrix() const {
  const Eigen::Index rows = static_cast<Eigen::Index>(chains) * draws;
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(pointwise));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index i = 0; i < m.cols(); ++i)
      m(r, i) = loglik[static_cast<std::size_t>(r) * pointwise + static_cast<std::size_t>(i)];
  return m;
}

std::size_t PosteriorDraws::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no output named " + name);
  return static_cast<std::size_t>(it - names.begin());
}

int PosteriorDraws::total_divergences() const {
  int total = 0;
  for (const auto& s : stats) total += s.divergences;
  return total;
}

namespace {

constexpr double kDivergenceThreshold = 1000.0;

struct DualAveraging {
  double mu = 0.0, h_bar = 0.0, log_step_bar = 0.0, log_step = 0.0;
  double delta;
  int t = 0;
  static constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;

  DualAveraging(double step, double target) : delta(target) { restart(step); }

  void restart(double step) {
    mu = std::log(10.0 * step);
    h_bar = 0.0;
    log_step_bar = 0.0;
    log_step = std::log(step);
    t = 0;
  }

  double update(double accept_stat) {
    ++t;
    const double w = 1.0 / (t + t0);
    h_bar = (1.0 - w) * h_bar + w * (delta - accept_stat);
    log_step = mu - std::sqrt(static_cast<double>(t)) / gamma * h_bar;
    const double eta = std::pow(static_cast<double>(t), -kappa);
    log_step_bar = eta * log_step + (1.0 - eta) * log_step_bar;
    return std::exp(log_step);
  }

  double final_step() const { return std::exp(log_step_bar); }
};

struct Welford {
  int count = 0;
  Eigen::VectorXd mean, m2;
  explicit Welford(Eigen::Index d) : mean(Eigen::VectorXd::Zero(d)), m2(Eigen::VectorXd::Zero(d)) {}
  void add(const Eigen::VectorXd& x) {
    ++count;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / count;
    m2 += delta.cwiseProduct(x - mean);
  }
  // Variance shrunk toward 1e-3, as in Stan's diagonal adaptation.
  Eigen::VectorXd regularized_variance() const {
    const double n = count;
    Eigen::VectorXd var = m2 / (n - 1.0);
    return (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
  }
};

class Chain {
 public:
  Chain(const DifferentiableDensity& target, const SamplerConfig& cfg, int index)
      : target_(target),
        cfg_(cfg),
        rng_(make_stream(cfg.seed, {static_cast<std::uint64_t>(index)})),
        dim_(static_cast<Eigen::Index>(target.dimension())),
        x_(dim_),
        grad_(dim_),
        inv_metric_(Eigen::VectorXd::Ones(dim_)) {}

  void initialize(const std::optional<Eigen::VectorXd>& init) {
    if (init) {
      if (init->size() != dim_) throw InputError("initial point has the wrong dimension");
      x_ = *init;
      logp_ = eval(x_, grad_);
      if (!finite_state(logp_, grad_)) throw SamplerError("log density is not finite at the supplied initial point");
      return;
    }
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (Eigen::Index i = 0; i < dim_; ++i) x_[i] = unif(rng_);
      logp_ = eval(x_, grad_);
      if (finite_state(logp_, grad_)) return;
    }
    throw SamplerError("no finite initial point after 100 random attempts");
  }

  void run(std::span<double> values, std::span<double> loglik, ChainStats& stats) {
    const int warmup = cfg_.warmup;
    const std::size_t out_dim = target_.output_names().size();
    const std::size_t pw = target_.pointwise_size();

    step_ = reasonable_step(1.0);
    DualAveraging adapt(step_, cfg_.target_accept);

    // Metric windows: [15%, 50%) and [50%, 90%) of warmup; the second sets the final metric.
    const int w1 = static_cast<int>(0.15 * warmup);
    const int w2 = static_cast<int>(0.5 * warmup);
    const int w3 = static_cast<int>(0.9 * warmup);
    const bool adapt_metric = warmup >= 20;
    Welford window(dim_);

    std::vector<double> out_buf(out_dim);
    double accept_sum = 0.0, leapfrog_sum = 0.0;
    int kept = 0, sampling_iters = 0;

    for (int it = 0; it < cfg_.iterations; ++it) {
      const bool in_warmup = it < warmup;
      auto [accept_stat, divergent, steps] = transition();

      if (in_warmup) {
        if (divergent) ++stats.warmup_divergences;
        step_ = adapt.update(accept_stat);
        if (adapt_metric && it >= w1 && it < w3) {
          window.add(x_);
          if (it + 1 == w2 || it + 1 == w3) {
            inv_metric_ = window.regularized_variance();
            window = Welford(dim_);
            step_ = reasonable_step(step_);
            adapt.restart(step_);
          }
        }
        if (it + 1 == warmup) step_ = adapt.final_step();
        continue;
      }

      ++sampling_iters;
      accept_sum += accept_stat;
      leapfrog_sum += steps;
      if (divergent) ++stats.divergences;
      if ((it - warmup + 1) % cfg_.thin == 0 && kept < cfg_.kept_draws()) {
        target_.write_outputs(span_of(x_), out_buf);
        std::copy(out_buf.begin(), out_buf.end(), values.begin() + static_cast<std::ptrdiff_t>(kept * out_dim));
        if (pw > 0)
          target_.pointwise_log_likelihood(span_of(x_), loglik.subspan(static_cast<std::size_t>(kept) * pw, pw));
        ++kept;
      }
    }
    stats.mean_accept = sampling_iters > 0 ? accept_sum / sampling_iters : 0.0;
    stats.mean_leapfrog = sampling_iters > 0 ? leapfrog_sum / sampling_iters : 0.0;
    stats.step_size = step_;
    stats.inverse_metric = inv_metric_;
  }

 private:
  struct Transition {
    double accept_stat;
    bool divergent;
    int steps;
  };

  static std::span<const double> span_of(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
  }

  double eval(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    return target_.log_density_gradient(span_of(x), std::span<double>(grad.data(), static_cast<std::size_t>(grad.size())));
  }

  static bool finite_state(double logp, const Eigen::VectorXd& grad) {
    return std::isfinite(logp) && grad.allFinite();
  }

  Eigen::VectorXd draw_momentum() {
    Eigen::VectorXd p(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
    return p;
  }

  double kinetic(const Eigen::VectorXd& p) const { return 0.5 * p.cwiseProduct(inv_metric_).dot(p); }

  // Runs `steps` leapfrog steps in place; false if the trajectory left the finite region.
  bool leapfrog(Eigen::VectorXd& x, Eigen::VectorXd& p, Eigen::VectorXd& grad, double& logp, double step, int steps) const {
    for (int s = 0; s < steps; ++s) {
      p += 0.5 * step * grad;
      x += step * inv_metric_.cwiseProduct(p);
      logp = eval(x, grad);
      if (!finite_state(logp, grad)) return false;
      p += 0.5 * step * grad;
    }
    return true;
  }

  Transition transition() {
    const int max_steps =
        std::clamp(static_cast<int>(std::ceil(cfg_.integration_time / step_)), 1, cfg_.max_leapfrog);
    std::uniform_int_distribution<int> jitter(1, max_steps);
    const int steps = jitter(rng_);
    Eigen::VectorXd p = draw_momentum();
    const double h0 = -logp_ + kinetic(p);

    Eigen::VectorXd x = x_, grad = grad_;
    double logp = logp_;
    const bool finite = leapfrog(x, p, grad, logp, step_, steps);
    const double h1 = finite ? -logp + kinetic(p) : std::numeric_limits<double>::infinity();
    const double delta_h = h1 - h0;
    const bool divergent = !std::isfinite(h1) || delta_h > kDivergenceThreshold;
    const double accept_stat = divergent ? 0.0 : std::min(1.0, std::exp(-delta_h));
    // Draw the uniform on every iteration so the stream does not depend on divergences.
    const double u = uniform_(rng_);
    if (!divergent && u < accept_stat) {
      x_ = std::move(x);
      grad_ = std::move(grad);
      logp_ = logp;
    }
    return {accept_stat, divergent, steps};
  }

  // Doubles or halves the step until the one-step acceptance crosses 0.8.
  double reasonable_step(double step) {
    auto accept_log = [&](double eps) {
      Eigen::VectorXd p = draw_momentum();
      const double h0 = -logp_ + kinetic(p);
      Eigen::VectorXd x = x_, grad = grad_;
      double logp = logp_;
      if (!leapfrog(x, p, grad, logp, eps, 1)) return -std::numeric_limits<double>::infinity();
      const double h1 = -logp + kinetic(p);
      return std::isfinite(h1) ? h0 - h1 : -std::numeric_limits<double>::infinity();
    };
    const double threshold = std::log(0.8);
    const int direction = accept_log(step) > threshold ? 1 : -1;
    for (int i = 0; i < 100; ++i) {
      const double next = direction > 0 ? 2.0 * step : 0.5 * step;
      const double a = accept_log(next);
      if (direction > 0 && !(a > threshold)) break;
      step = next;
      if (direction < 0 && a > threshold) break;
    }
    return step;
  }

  const DifferentiableDensity& target_;
  const SamplerConfig& cfg_;
  Rng rng_;
  Eigen::Index dim_;
  Eigen::VectorXd x_, grad_, inv_metric_;
  double logp_ = 0.0;
  double step_ = 1.0;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace

PosteriorDraws hmc_run(const DifferentiableDensity& target, const SamplerConfig& config,
                       const std::optional<Eigen::VectorXd>& init) {
  config.validate();
  PosteriorDraws out;
  out.names = target.output_names();
  out.chains = config.chains;
  out.draws = config.kept_draws();
  out.pointwise = target.pointwise_size();
  const std::size_t per_chain_values = static_cast<std::size_t>(out.draws) * out.dim();
  const std::size_t per_chain_loglik = static_cast<std::size_t>(out.draws) * out.pointwise;
  out.values.assign(per_chain_values * static_cast<std::size_t>(config.chains), 0.0);
  out.loglik.assign(per_chain_loglik * static_cast<std::size_t>(config.chains), 0.0);
  out.stats.resize(static_cast<std::size_t>(config.chains));

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.chains));
  auto run_one = [&](int c) {
    try {
      Chain chain(target, config, c);
      chain.initialize(init);
      auto values = std::span<double>(out.values).subspan(static_cast<std::size_t>(c) * per_chain_values, per_chain_values);
      auto loglik = std::span<double>(out.loglik).subspan(static_cast<std::size_t>(c) * per_chain_loglik, per_chain_loglik);
      chain.run(values, loglik, out.stats[static_cast<std::size_t>(c)]);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };

  if (config.execution == Execution::parallel && config.chains > 1) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int c = 0; c < config.chains; ++c) run_one(c);
  } else {
    for (int c = 0; c < config.chains; ++c) run_one(c);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace {

// Each chain split into first and second halves; the middle draw of an odd chain is dropped.
std::vector<std::vector<double>> split_chains(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

// Replaces values by normal scores of their pooled average ranks.
std::vector<std::vector<double>> rank_normalize(const std::vector<std::vector<double>>& chains) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (std::size_t m = 0; m < chains.size(); ++m)
    for (std::size_t i = 0; i < chains[m].size(); ++i) pooled.emplace_back(chains[m][i], pooled.size());
  const std::size_t total = pooled.size();
  std::vector<double> ranks(total);
  std::sort(pooled.begin(), pooled.end());
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    while (j + 1 < total && pooled[j + 1].first == pooled[i].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[pooled[k].second] = avg;
    i = j + 1;
  }
  std::vector<std::vector<double>> out(chains.size());
  std::size_t pos = 0;
  const double s = static_cast<double>(total);
  for (std::size_t m = 0; m < chains.size(); ++m) {
    out[m].resize(chains[m].size());
    for (std::size_t i = 0; i < chains[m].size(); ++i) {
      const double p = (ranks[pos++] - 0.375) / (s + 0.25);
      out[m][i] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0);
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double e : v) acc += (e - m) * (e - m);
  return acc / static_cast<double>(v.size() - 1);
}

std::string precondition_issue(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) return "needs at least 2 chains";
  for (const auto& c : chains)
    if (c.size() < 4 || c.size() != chains.front().size()) return "needs at least 4 draws per chain, equal lengths";
  for (const auto& c : chains)
    if (variance_of(c) == 0.0) return "zero within-chain variance (constant chain)";
  return {};
}

ConvergenceStat undefined(std::string why) { return {std::numeric_limits<double>::quiet_NaN(), std::move(why)}; }

}  // namespace

namespace {

double potential_scale_reduction(const std::vector<std::vector<double>>& z) {
  const double n = static_cast<double>(z.front().size());
  std::vector<double> means, vars;
  for (const auto& c : z) {
    means.push_back(mean_of(c));
    vars.push_back(variance_of(c));
  }
  const double w = mean_of(vars);
  const double b_over_n = variance_of(means);
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

// Absolute deviations from the pooled median.
std::vector<std::vector<double>> fold(std::vector<std::vector<double>> chains) {
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  std::sort(pooled.begin(), pooled.end());
  const std::size_t k = pooled.size();
  const double median = k % 2 ? pooled[k / 2] : 0.5 * (pooled[k / 2 - 1] + pooled[k / 2]);
  for (auto& c : chains)
    for (auto& v : c) v = std::abs(v - median);
  return chains;
}

}  // namespace

// Largest of the bulk (rank-normalized), tail (rank-normalized folded) and
// untransformed split statistics. Ranks cap the bulk value near 1.83 for two
// fully separated chains; the untransformed one keeps growing with the gap.
ConvergenceStat split_rhat(const std::vector<std::vector<double>>& chains) {
  if (auto issue = precondition_issue(chains); !issue.empty()) return undefined(issue);
  const auto halves = split_chains(chains);
  const double bulk = potential_scale_reduction(rank_normalize(halves));
  const double tail = potential_scale_reduction(rank_normalize(fold(halves)));
  const double raw = potential_scale_reduction(halves);
  return {std::max({bulk, tail, raw}), {}};
}

ConvergenceStat ess(const std::vector<std::vector<double>>& chains) {
  if (auto issue = precondition_issue(chains); !issue.empty()) return undefined(issue);
  const auto z = rank_normalize(split_chains(chains));
  const std::size_t m = z.size();
  const std::size_t n = z.front().size();
  std::vector<double> means(m), chain_vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = mean_of(z[j]);
    chain_vars[j] = variance_of(z[j]);
  }
  const double mean_var = mean_of(chain_vars);
  const double var_plus = mean_var * (static_cast<double>(n) - 1.0) / static_cast<double>(n) + variance_of(means);

  // Autocovariance (divisor n) averaged over chains, computed lag by lag.
  auto mean_acov = [&](std::size_t lag) {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) acc += (z[j][i] - means[j]) * (z[j][i + lag] - means[j]);
      total += acc / static_cast<double>(n);
    }
    return total / static_cast<double>(m);
  };
  auto rho = [&](std::size_t lag) { return 1.0 - (mean_var - mean_acov(lag)) / var_plus; };

  // Geyer's initial positive sequence with the monotone correction.
  std::vector<double> r(n + 3, 0.0);
  r[0] = 1.0;
  r[1] = rho(1);
  double even = r[0], odd = r[1];
  std::size_t t = 1;
  while (t + 5 < n && even + odd > 0.0) {
    even = rho(t + 1);
    odd = rho(t + 2);
    if (even + odd >= 0.0) {
      r[t + 1] = even;
      r[t + 2] = odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (even > 0.0) r[max_t + 1] = even;
  for (std::size_t k = 1; k + 3 <= max_t; k += 2) {
    if (r[k + 1] + r[k + 2] > r[k - 1] + r[k]) {
      r[k + 1] = 0.5 * (r[k - 1] + r[k]);
      r[k + 2] = r[k + 1];
    }
  }
  double tau = -1.0 + r[max_t + 1];
  for (std::size_t k = 0; k <= max_t; ++k) tau += 2.0 * r[k];
  const double total = static_cast<double>(m * n);
  tau = std::max(tau, 1.0 / std::log10(total));
  return {total / tau, {}};
}

ConvergenceStat split_rhat(const PosteriorDraws& draws, std::size_t parameter) {
  return split_rhat(draws.chains_of(parameter));
}

ConvergenceStat ess(const PosteriorDraws& draws, std::size_t parameter) { return ess(draws.chains_of(parameter)); }

}  // namespace arealmix
