#include "arealmix/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "arealmix/car.hpp"
#include "arealmix/error.hpp"

namespace arealmix {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 log(2 pi)

}  // namespace

namespace detail {

ParameterLayout parameter_layout(const ModelSpec& spec, int n) {
  ParameterLayout l;
  int next = 1 + spec.p;
  l.log_sigma = next++;
  l.logit_lambda = next++;
  switch (spec.kind) {
    case ModelKind::bym2:
    case ModelKind::bym2_gamma:
    case ModelKind::bym2_logcar:
      l.theta = next;
      next += n;
      l.u_star = next;
      next += n;
      if (spec.kind == ModelKind::bym2_gamma) {
        l.log_kappa = next;
        next += n;
        l.log_nu = next++;
      } else if (spec.kind == ModelKind::bym2_logcar) {
        l.z = next;
        next += n;
        l.log_nu = next++;
      }
      break;
    case ModelKind::leroux:
      l.latent = next;
      next += n;
      break;
    case ModelKind::congdon:
      l.latent = next;
      next += n;
      l.log_kappa = next;
      next += n;
      l.log_nu = next++;
      break;
  }
  l.dim = next;
  return l;
}

}  // namespace detail

namespace {

// Numerically stable log(lambda) and log(1 - lambda) for lambda = logistic(x).
struct Logistic {
  double value, log_value, log_complement;
  explicit Logistic(double x) {
    if (x > 0) {
      log_value = -std::log1p(std::exp(-x));
      log_complement = -x + log_value;
    } else {
      log_complement = -std::log1p(std::exp(x));
      log_value = x + log_complement;
    }
    value = std::exp(log_value);
  }
};

double normal_logpdf(double x, double sd) { return -kHalfLog2Pi - std::log(sd) - 0.5 * (x / sd) * (x / sd); }

Eigen::Map<const Eigen::VectorXd> segment(std::span<const double> x, int start, int len) {
  return Eigen::Map<const Eigen::VectorXd>(x.data() + start, len);
}

std::string indexed(const char* name, int i) { return std::string(name) + "[" + std::to_string(i + 1) + "]"; }

void append_indexed(std::vector<std::string>& out, const char* name, int n) {
  for (int i = 0; i < n; ++i) out.push_back(indexed(name, i));
}

// Errors become NaN/inf so that an extreme state is a divergence, not an exception.
using QuietPolicy = boost::math::policies::policy<
    boost::math::policies::domain_error<boost::math::policies::ignore_error>,
    boost::math::policies::pole_error<boost::math::policies::ignore_error>,
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::evaluation_error<boost::math::policies::ignore_error>>;

double lgamma_safe(double v) { return boost::math::lgamma(v, QuietPolicy()); }
double digamma_safe(double v) { return boost::math::digamma(v, QuietPolicy()); }

}  // namespace

std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::bym2: return "bym2";
    case ModelKind::leroux: return "leroux";
    case ModelKind::congdon: return "congdon";
    case ModelKind::bym2_gamma: return "bym2-gamma";
    case ModelKind::bym2_logcar: return "bym2-logcar";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : kAllModelKinds)
    if (model_name(k) == name) return k;
  throw InputError("unknown model \"" + std::string(name) +
                   "\"; expected one of bym2, leroux, congdon, bym2-gamma, bym2-logcar");
}

bool has_scale_mixture(ModelKind kind) {
  return kind == ModelKind::congdon || kind == ModelKind::bym2_gamma || kind == ModelKind::bym2_logcar;
}

bool is_bym2_family(ModelKind kind) {
  return kind == ModelKind::bym2 || kind == ModelKind::bym2_gamma || kind == ModelKind::bym2_logcar;
}

ModelSpec default_model_spec(ModelKind kind, int p) {
  ModelSpec s;
  s.kind = kind;
  s.p = p;
  s.mu_nu = kind == ModelKind::bym2_logcar ? 0.3 : 4.0;
  return s;
}

ObservedData make_observed_data(AdjacencyGraph graph, std::vector<int> y, Eigen::VectorXd offset,
                                Eigen::MatrixXd covariates) {
  const int n = graph.size();
  if (static_cast<int>(y.size()) != n) throw InputError("count vector length does not match graph size");
  if (offset.size() != n) throw InputError("offset vector length does not match graph size");
  for (int v : y)
    if (v < 0) throw InputError("counts must be nonnegative");
  for (Eigen::Index i = 0; i < offset.size(); ++i)
    if (!(offset[i] > 0.0) || !std::isfinite(offset[i])) throw InputError("offsets must be positive and finite");
  if (covariates.size() == 0) covariates.resize(n, 0);
  if (covariates.rows() != n) throw InputError("covariate matrix row count does not match graph size");
  ObservedData d;
  d.h = scaling_factor(graph);
  d.graph = std::move(graph);
  d.y = std::move(y);
  d.offset = std::move(offset);
  d.covariates = std::move(covariates);
  return d;
}

Model::Model(ModelSpec spec, ObservedData data) : spec_(spec), data_(std::move(data)) {
  if (!(spec_.mu_nu > 0.0)) throw InputError("mu_nu must be positive");
  if (!(spec_.beta_prior_sd > 0.0) || !(spec_.sigma_prior_sd > 0.0) || !(spec_.soft_constraint_sd_factor > 0.0))
    throw InputError("prior scales must be positive");
  if (spec_.p != data_.covariates.cols())
    throw InputError("model expects " + std::to_string(spec_.p) + " covariates, data has " +
                     std::to_string(data_.covariates.cols()));
  const int n = areas();
  if (static_cast<int>(data_.y.size()) != n || data_.offset.size() != n)
    throw InputError("observed data lengths do not match the graph");
  layout_ = detail::parameter_layout(spec_, n);
  log_offset_ = data_.offset.array().log();
  y_.resize(n);
  log_y_factorial_.resize(n);
  for (int i = 0; i < n; ++i) {
    y_[i] = data_.y[static_cast<std::size_t>(i)];
    log_y_factorial_[i] = lgamma_safe(y_[i] + 1.0);
  }
  if (spec_.kind == ModelKind::leroux) laplacian_eigenvalues_ = laplacian_spectrum(data_.graph).eigenvalues;
}

double Model::log_density(std::span<const double> x) const { return evaluate(x, nullptr, nullptr); }

double Model::log_density_gradient(std::span<const double> x, std::span<double> grad) const {
  return evaluate(x, nullptr, grad.data());
}

LogPosteriorTerms Model::terms(std::span<const double> x) const {
  LogPosteriorTerms t;
  evaluate(x, &t, nullptr);
  return t;
}

double Model::evaluate(std::span<const double> x, LogPosteriorTerms* out_terms, double* grad) const {
  const auto& l = layout_;
  const auto& g = data_.graph;
  const int n = areas();
  const int p = spec_.p;
  const double h = data_.h;
  LogPosteriorTerms t;
  Eigen::Map<Eigen::VectorXd> gr(grad, grad ? l.dim : 0);
  if (grad) gr.setZero();

  const double beta0 = x[static_cast<std::size_t>(l.beta0)];
  const auto beta = segment(x, l.beta, p);
  const double log_sigma = x[static_cast<std::size_t>(l.log_sigma)];
  const double sigma = std::exp(log_sigma);
  const Logistic lam(x[static_cast<std::size_t>(l.logit_lambda)]);
  const double lambda = lam.value;
  const double one_minus_lambda = std::exp(lam.log_complement);

  // Latent effects and the pieces needed for their derivatives.
  Eigen::VectorXd b(n);
  Eigen::VectorXd scale(n);     // sigma / sqrt(kappa_i), BYM2 family
  Eigen::VectorXd log_kappa;    // scale-mixture models
  Eigen::VectorXd kappa;
  const double sd_soft = spec_.soft_constraint_sd_factor * n;
  double nu = 0.0;
  if (l.log_nu >= 0) nu = std::exp(x[static_cast<std::size_t>(l.log_nu)]);

  if (l.log_kappa >= 0) {
    log_kappa = segment(x, l.log_kappa, n);
  } else if (l.z >= 0) {
    log_kappa = -0.5 * nu * Eigen::VectorXd::Ones(n) + std::sqrt(nu) * segment(x, l.z, n);
  }
  if (log_kappa.size() > 0) kappa = log_kappa.array().exp();

  const double a = std::exp(0.5 * lam.log_complement);  // sqrt(1 - lambda)
  const double c = std::exp(0.5 * lam.log_value);       // sqrt(lambda)
  if (is_bym2_family(spec_.kind)) {
    const auto theta = segment(x, l.theta, n);
    const auto u = segment(x, l.u_star, n);
    if (log_kappa.size() > 0)
      scale = sigma * (-0.5 * log_kappa.array()).exp();
    else
      scale.setConstant(sigma);
    b = scale.cwiseProduct(a * theta + c * u);
  } else {
    b = segment(x, l.latent, n);
  }

  // Poisson likelihood.
  Eigen::VectorXd eta = log_offset_.array() + beta0 + b.array();
  if (p > 0) eta += data_.covariates * beta;
  const Eigen::VectorXd mean = eta.array().exp();
  t.likelihood = (y_.cwiseProduct(eta) - mean - log_y_factorial_).sum();
  const Eigen::VectorXd resid = y_ - mean;  // d loglik / d eta

  // Fixed effects.
  const double sd_beta = spec_.beta_prior_sd;
  t.fixed_effects = normal_logpdf(beta0, sd_beta);
  for (int j = 0; j < p; ++j) t.fixed_effects += normal_logpdf(beta[j], sd_beta);
  if (grad) {
    gr[l.beta0] = resid.sum() - beta0 / (sd_beta * sd_beta);
    if (p > 0) gr.segment(l.beta, p) = data_.covariates.transpose() * resid - beta / (sd_beta * sd_beta);
  }

  // sigma ~ half-normal; log transform.
  const double sd_sigma = spec_.sigma_prior_sd;
  t.scale = std::log(2.0) + normal_logpdf(sigma, sd_sigma);
  t.jacobian += log_sigma;
  // lambda ~ U(0, 1); logit transform.
  t.mixing_weight = 0.0;
  t.jacobian += lam.log_value + lam.log_complement;
  if (grad) {
    gr[l.log_sigma] = -(sigma * sigma) / (sd_sigma * sd_sigma) + 1.0;
    gr[l.logit_lambda] = 1.0 - 2.0 * lambda;
  }

  // Gamma(nu/2, nu/2) on kappa with nu ~ Exp(mean mu_nu); shared by gamma-mixing models.
  auto gamma_mixing = [&](void) {
    const double shape = 0.5 * nu;
    t.scale_mixture = n * (shape * std::log(shape) - lgamma_safe(shape)) +
                      ((shape - 1.0) * log_kappa.array() - shape * kappa.array()).sum();
    t.jacobian += log_kappa.sum();
    if (grad) {
      gr.segment(l.log_kappa, n).array() += shape - shape * kappa.array();
      const double d_nu = 0.5 * n * (std::log(shape) + 1.0 - digamma_safe(shape)) +
                          0.5 * (log_kappa - kappa).sum() - 1.0 / spec_.mu_nu;
      gr[l.log_nu] += nu * d_nu;
    }
  };
  auto nu_prior = [&](void) {
    t.hyper = -std::log(spec_.mu_nu) - nu / spec_.mu_nu;
    t.jacobian += std::log(nu);
    if (grad && spec_.kind == ModelKind::bym2_logcar) gr[l.log_nu] += -nu / spec_.mu_nu;
    if (grad) gr[l.log_nu] += 1.0;
  };

  if (is_bym2_family(spec_.kind)) {
    const auto theta = segment(x, l.theta, n);
    const auto u = segment(x, l.u_star, n);
    t.latent = -n * kHalfLog2Pi - 0.5 * theta.squaredNorm();
    t.latent += h * icar_kernel(std::span<const double>(u.data(), static_cast<std::size_t>(n)), g);
    const double sum_u = u.sum();
    t.soft_constraint = normal_logpdf(sum_u, sd_soft);

    if (grad) {
      const Eigen::VectorXd rs = resid.cwiseProduct(scale);
      gr.segment(l.theta, n) = a * rs - theta;
      gr.segment(l.u_star, n) = c * rs - h * laplacian_times(g, u);
      gr.segment(l.u_star, n).array() -= sum_u / (sd_soft * sd_soft);
      gr[l.log_sigma] += resid.dot(b);
      // d w / d logit(lambda) with w = a theta + c u.
      const Eigen::VectorXd dw = -0.5 * lambda * a * theta + 0.5 * one_minus_lambda * c * u;
      gr[l.logit_lambda] += rs.dot(dw);
    }

    if (spec_.kind == ModelKind::bym2_gamma) {
      if (grad) gr.segment(l.log_kappa, n) = -0.5 * resid.cwiseProduct(b);
      gamma_mixing();
      nu_prior();
    } else if (spec_.kind == ModelKind::bym2_logcar) {
      const auto z = segment(x, l.z, n);
      t.scale_mixture = h * icar_kernel(std::span<const double>(z.data(), static_cast<std::size_t>(n)), g);
      const double sum_z = z.sum();
      t.soft_constraint += normal_logpdf(sum_z, sd_soft);
      if (grad) {
        const Eigen::VectorXd d_log_kappa = -0.5 * resid.cwiseProduct(b);
        const double root_nu = std::sqrt(nu);
        gr.segment(l.z, n) = root_nu * d_log_kappa - h * laplacian_times(g, z);
        gr.segment(l.z, n).array() -= sum_z / (sd_soft * sd_soft);
        gr[l.log_nu] += d_log_kappa.dot(-0.5 * nu * Eigen::VectorXd::Ones(n) + 0.5 * root_nu * z);
      }
      nu_prior();
    }
  } else if (spec_.kind == ModelKind::leroux) {
    // b ~ N(0, sigma^2 [(1 - lambda) I + lambda Q]^{-1}); log det from the Laplacian spectrum.
    const Eigen::VectorXd qb = laplacian_times(g, b);
    const double bqb = b.dot(qb);
    const double btb = b.squaredNorm();
    const double quad = one_minus_lambda * btb + lambda * bqb;
    const Eigen::ArrayXd eig = one_minus_lambda + lambda * laplacian_eigenvalues_.array();
    const double logdet = eig.log().sum();
    const double s2 = sigma * sigma;
    t.latent = -n * kHalfLog2Pi - n * log_sigma + 0.5 * logdet - 0.5 * quad / s2;
    if (grad) {
      gr.segment(l.latent, n) = resid - (one_minus_lambda * b + lambda * qb) / s2;
      gr[l.log_sigma] += -n + quad / s2;
      const double d_logdet = ((laplacian_eigenvalues_.array() - 1.0) / eig).sum();
      gr[l.logit_lambda] += lambda * one_minus_lambda * (0.5 * d_logdet - 0.5 * (bqb - btb) / s2);
    }
  } else {  // congdon
    const Eigen::MatrixXd qc =
        congdon_precision(g, lambda, std::span<const double>(kappa.data(), static_cast<std::size_t>(n)));
    Eigen::LLT<Eigen::MatrixXd> llt(qc);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd diag_l = llt.matrixLLT().diagonal();
    if ((diag_l.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
    const double logdet = 2.0 * diag_l.array().log().sum();
    const Eigen::VectorXd qb = qc * b;
    const double quad = b.dot(qb);
    const double s2 = sigma * sigma;
    t.latent = -n * kHalfLog2Pi - n * log_sigma + 0.5 * logdet - 0.5 * quad / s2;
    if (grad) {
      const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
      gr.segment(l.latent, n) = resid - qb / s2;
      gr[l.log_sigma] += -n + quad / s2;
      double tr_lambda = 0.0, dq_lambda = 0.0;
      Eigen::VectorXd tr_kappa(n), dq_kappa(n);
      for (int i = 0; i < n; ++i) {
        const double di = g.degree(i);
        tr_lambda += cov(i, i) * kappa[i] * (di - 1.0);
        dq_lambda += kappa[i] * (di - 1.0) * b[i] * b[i];
        const double diag_coef = one_minus_lambda + lambda * di;
        double cross_cov = 0.0, cross_b = 0.0;
        for (int j : g.neighbours(i)) {
          cross_cov += cov(i, j) * kappa[j];
          cross_b += kappa[j] * b[j];
        }
        tr_kappa[i] = cov(i, i) * diag_coef - 2.0 * lambda * cross_cov;
        dq_kappa[i] = diag_coef * b[i] * b[i] - 2.0 * lambda * b[i] * cross_b;
      }
      for (auto [i, j] : g.edges()) {
        tr_lambda -= 2.0 * cov(i, j) * kappa[i] * kappa[j];
        dq_lambda -= 2.0 * kappa[i] * kappa[j] * b[i] * b[j];
      }
      gr[l.logit_lambda] += lambda * one_minus_lambda * (0.5 * tr_lambda - 0.5 * dq_lambda / s2);
      gr.segment(l.log_kappa, n) = kappa.cwiseProduct(0.5 * tr_kappa - 0.5 * dq_kappa / s2);
    }
    gamma_mixing();
    nu_prior();
  }

  const double total = t.total();
  if (out_terms) *out_terms = t;
  if (!std::isfinite(total)) return -std::numeric_limits<double>::infinity();
  return total;
}

void Model::pointwise_log_likelihood(std::span<const double> x, std::span<double> out) const {
  const ParameterState s = to_state(x);
  const int n = areas();
  for (int i = 0; i < n; ++i) {
    double eta = log_offset_[i] + s.beta0 + s.b[i];
    if (spec_.p > 0) eta += data_.covariates.row(i).dot(s.beta);
    out[static_cast<std::size_t>(i)] = y_[i] * eta - std::exp(eta) - log_y_factorial_[i];
  }
}

std::vector<std::string> Model::parameter_names() const {
  const int n = areas();
  std::vector<std::string> names{"beta0"};
  append_indexed(names, "beta", spec_.p);
  names.push_back("sigma");
  names.push_back("lambda");
  switch (spec_.kind) {
    case ModelKind::bym2:
      append_indexed(names, "theta", n);
      append_indexed(names, "u_star", n);
      break;
    case ModelKind::bym2_gamma:
      append_indexed(names, "theta", n);
      append_indexed(names, "u_star", n);
      append_indexed(names, "kappa", n);
      names.push_back("nu");
      break;
    case ModelKind::bym2_logcar:
      append_indexed(names, "theta", n);
      append_indexed(names, "u_star", n);
      append_indexed(names, "z", n);
      names.push_back("nu");
      break;
    case ModelKind::leroux:
      append_indexed(names, "b", n);
      break;
    case ModelKind::congdon:
      append_indexed(names, "b", n);
      append_indexed(names, "kappa", n);
      names.push_back("nu");
      break;
  }
  return names;
}

std::vector<std::string> Model::output_names() const {
  auto names = parameter_names();
  if (spec_.kind == ModelKind::bym2_logcar) append_indexed(names, "kappa", areas());
  if (is_bym2_family(spec_.kind)) append_indexed(names, "b", areas());
  return names;
}

void Model::write_outputs(std::span<const double> x, std::span<double> out) const {
  const ParameterState s = to_state(x);
  std::size_t k = 0;
  auto put = [&](double v) { out[k++] = v; };
  auto put_vec = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put(v[i]);
  };
  put(s.beta0);
  put_vec(s.beta);
  put(s.sigma);
  put(s.lambda);
  switch (spec_.kind) {
    case ModelKind::bym2:
      put_vec(s.theta);
      put_vec(s.u_star);
      break;
    case ModelKind::bym2_gamma:
      put_vec(s.theta);
      put_vec(s.u_star);
      put_vec(s.kappa);
      put(s.nu);
      break;
    case ModelKind::bym2_logcar:
      put_vec(s.theta);
      put_vec(s.u_star);
      put_vec(s.z);
      put(s.nu);
      put_vec(s.kappa);
      break;
    case ModelKind::leroux:
      put_vec(s.b);
      break;
    case ModelKind::congdon:
      put_vec(s.b);
      put_vec(s.kappa);
      put(s.nu);
      break;
  }
  if (is_bym2_family(spec_.kind)) put_vec(s.b);
}

Model::OutputLayout Model::output_layout() const {
  const int n = areas();
  const int p = spec_.p;
  OutputLayout o;
  o.sigma = 1 + p;
  o.lambda = 2 + p;
  const int base = 3 + p;
  switch (spec_.kind) {
    case ModelKind::bym2:
      o.latent = base + 2 * n;
      break;
    case ModelKind::bym2_gamma:
      o.kappa = base + 2 * n;
      o.nu = base + 3 * n;
      o.latent = base + 3 * n + 1;
      break;
    case ModelKind::bym2_logcar:
      o.nu = base + 3 * n;
      o.kappa = base + 3 * n + 1;
      o.latent = base + 4 * n + 1;
      break;
    case ModelKind::leroux:
      o.latent = base;
      break;
    case ModelKind::congdon:
      o.latent = base;
      o.kappa = base + n;
      o.nu = base + 2 * n;
      break;
  }
  return o;
}

ParameterState Model::to_state(std::span<const double> x) const {
  return transform_from_unconstrained(x, spec_, areas());
}

Eigen::VectorXd Model::to_unconstrained(const ParameterState& state) const {
  return transform_to_unconstrained(state, spec_, areas());
}

ParameterState transform_from_unconstrained(std::span<const double> x, const ModelSpec& spec, int n) {
  const detail::ParameterLayout l = detail::parameter_layout(spec, n);
  if (static_cast<int>(x.size()) != l.dim)
    throw InputError("unconstrained vector has length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(l.dim));
  for (double v : x)
    if (!std::isfinite(v)) throw InputError("unconstrained vector contains a non-finite value");
  ParameterState s;
  s.beta0 = x[0];
  s.beta = segment(x, l.beta, spec.p);
  s.sigma = std::exp(x[static_cast<std::size_t>(l.log_sigma)]);
  s.lambda = Logistic(x[static_cast<std::size_t>(l.logit_lambda)]).value;
  if (l.theta >= 0) s.theta = segment(x, l.theta, n);
  if (l.u_star >= 0) s.u_star = segment(x, l.u_star, n);
  if (l.latent >= 0) s.b = segment(x, l.latent, n);
  if (l.log_kappa >= 0) s.kappa = segment(x, l.log_kappa, n).array().exp();
  if (l.log_nu >= 0) s.nu = std::exp(x[static_cast<std::size_t>(l.log_nu)]);
  if (l.z >= 0) {
    s.z = segment(x, l.z, n);
    s.kappa = logcar_kappa(s.z, s.nu);
  }
  if (is_bym2_family(spec.kind)) s.b = latent_effects(s, spec);
  return s;
}

Eigen::VectorXd transform_to_unconstrained(const ParameterState& s, const ModelSpec& spec, int n) {
  const detail::ParameterLayout l = detail::parameter_layout(spec, n);
  auto need = [&](const Eigen::VectorXd& v, const char* what) {
    if (v.size() != n) throw InputError(std::string("state field ") + what + " has the wrong length");
  };
  Eigen::VectorXd x(l.dim);
  x[0] = s.beta0;
  if (s.beta.size() != spec.p) throw InputError("state field beta has the wrong length");
  if (spec.p > 0) x.segment(l.beta, spec.p) = s.beta;
  x[l.log_sigma] = std::log(s.sigma);
  x[l.logit_lambda] = std::log(s.lambda) - std::log1p(-s.lambda);
  if (l.theta >= 0) {
    need(s.theta, "theta");
    x.segment(l.theta, n) = s.theta;
  }
  if (l.u_star >= 0) {
    need(s.u_star, "u_star");
    x.segment(l.u_star, n) = s.u_star;
  }
  if (l.latent >= 0) {
    need(s.b, "b");
    x.segment(l.latent, n) = s.b;
  }
  if (l.log_kappa >= 0) {
    need(s.kappa, "kappa");
    x.segment(l.log_kappa, n) = s.kappa.array().log();
  }
  if (l.z >= 0) {
    need(s.z, "z");
    x.segment(l.z, n) = s.z;
  }
  if (l.log_nu >= 0) x[l.log_nu] = std::log(s.nu);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw InputError("state maps to a non-finite unconstrained value");
  return x;
}

Eigen::VectorXd latent_effects(const ParameterState& s, const ModelSpec& spec) {
  if (!is_bym2_family(spec.kind)) return s.b;
  Eigen::VectorXd w = std::sqrt(1.0 - s.lambda) * s.theta + std::sqrt(s.lambda) * s.u_star;
  Eigen::VectorXd b = s.sigma * w;
  if (spec.kind != ModelKind::bym2) b.array() /= s.kappa.array().sqrt();
  return b;
}

double log_posterior(const ParameterState& state, const ModelSpec& spec, const ObservedData& data) {
  Model m(spec, data);
  const Eigen::VectorXd x = m.to_unconstrained(state);
  return m.log_density(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Eigen::VectorXd grad_log_posterior(const ParameterState& state, const ModelSpec& spec, const ObservedData& data) {
  Model m(spec, data);
  const Eigen::VectorXd x = m.to_unconstrained(state);
  Eigen::VectorXd grad(x.size());
  m.log_density_gradient(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                         std::span<double>(grad.data(), static_cast<std::size_t>(grad.size())));
  return grad;
}

double soft_sum_to_zero_logterm(std::span<const double> v, int n, double factor) {
  double sum = 0.0;
  for (double e : v) sum += e;
  return normal_logpdf(sum, factor * n);
}

Eigen::VectorXd logcar_kappa(const Eigen::VectorXd& z, double nu_kappa) {
  return (-0.5 * nu_kappa + std::sqrt(nu_kappa) * z.array()).exp();
}

std::pair<double, double> exponential_prior_interval(double mean, double level) {
  const double tail = 0.5 * (1.0 - level);
  return {-mean * std::log1p(-tail), -mean * std::log(tail)};
}

}  // namespace arealmix
