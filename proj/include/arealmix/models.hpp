#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "arealmix/density.hpp"
#include "arealmix/graph.hpp"

namespace arealmix {

enum class ModelKind { bym2, leroux, congdon, bym2_gamma, bym2_logcar };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::bym2, ModelKind::leroux, ModelKind::congdon,
                                               ModelKind::bym2_gamma, ModelKind::bym2_logcar};

/// CLI spelling: bym2, leroux, congdon, bym2-gamma, bym2-logcar.
std::string_view model_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// True for models carrying per-area scale-mixture parameters kappa.
bool has_scale_mixture(ModelKind kind);
/// True for the BYM2 family (theta / u_star split).
bool is_bym2_family(ModelKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::bym2;
  int p = 0;                                 // covariate count
  double mu_nu = 4.0;                        // prior mean of nu (or nu_kappa for bym2-logcar)
  double beta_prior_sd = 10.0;
  double sigma_prior_sd = 1.0;
  double soft_constraint_sd_factor = 0.001;  // sd of the soft sum-to-zero is factor * n
};

/// Default priors for a kind: mu_nu = 4 for gamma mixing, 0.3 for log-CAR.
ModelSpec default_model_spec(ModelKind kind, int p = 0);

struct ObservedData {
  std::vector<int> y;
  Eigen::VectorXd offset;      // E_i > 0
  Eigen::MatrixXd covariates;  // n x p
  AdjacencyGraph graph;
  double h = 1.0;              // scaling factor of the graph
};

/// Validates lengths and offsets and computes the scaling factor.
ObservedData make_observed_data(AdjacencyGraph graph, std::vector<int> y, Eigen::VectorXd offset,
                                Eigen::MatrixXd covariates = {});

/// One point of parameter space on the constrained scale. Fields not used by
/// the model kind stay empty (or zero for scalars).
struct ParameterState {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  double sigma = 1.0;
  double lambda = 0.5;
  Eigen::VectorXd theta;   // unstructured, BYM2 family
  Eigen::VectorXd u_star;  // scaled structured, BYM2 family
  Eigen::VectorXd kappa;   // scale mixture; derived from z for bym2-logcar
  double nu = 1.0;         // nu, or nu_kappa for bym2-logcar
  Eigen::VectorXd z;       // standardized log-CAR innovations
  Eigen::VectorXd b;       // latent effects; free for leroux/congdon, derived otherwise
};

/// Additive pieces of the log posterior (unconstrained coordinates).
struct LogPosteriorTerms {
  double likelihood = 0.0;
  double fixed_effects = 0.0;    // beta0, beta
  double scale = 0.0;            // sigma
  double mixing_weight = 0.0;    // lambda, uniform
  double latent = 0.0;           // theta + u_star, or the leroux/congdon joint density of b
  double scale_mixture = 0.0;    // kappa gamma prior, or log-CAR kernel on z
  double hyper = 0.0;            // nu exponential prior
  double soft_constraint = 0.0;
  double jacobian = 0.0;

  double total() const {
    return likelihood + fixed_effects + scale + mixing_weight + latent + scale_mixture + hyper +
           soft_constraint + jacobian;
  }
};

namespace detail {

// Offsets of each parameter block in the unconstrained vector; -1 when absent.
struct ParameterLayout {
  int beta0 = 0, beta = 1, log_sigma = -1, logit_lambda = -1;
  int theta = -1, u_star = -1, latent = -1, log_kappa = -1, z = -1, log_nu = -1;
  int dim = 0;
};

ParameterLayout parameter_layout(const ModelSpec& spec, int n);

}  // namespace detail

/// Unnormalized log posterior of one of the five models over an
/// unconstrained vector: log for sigma, kappa and nu, logit for lambda,
/// identity otherwise.
class Model final : public DifferentiableDensity {
 public:
  Model(ModelSpec spec, ObservedData data);

  const ModelSpec& spec() const { return spec_; }
  const ObservedData& data() const { return data_; }
  int areas() const { return data_.graph.size(); }

  std::size_t dimension() const override { return static_cast<std::size_t>(layout_.dim); }
  double log_density_gradient(std::span<const double> x, std::span<double> grad) const override;
  double log_density(std::span<const double> x) const;
  LogPosteriorTerms terms(std::span<const double> x) const;

  /// Names of the free parameters on the constrained scale, in vector order.
  std::vector<std::string> parameter_names() const;

  std::vector<std::string> output_names() const override;
  void write_outputs(std::span<const double> x, std::span<double> out) const override;
  std::size_t pointwise_size() const override { return static_cast<std::size_t>(areas()); }
  void pointwise_log_likelihood(std::span<const double> x, std::span<double> out) const override;

  ParameterState to_state(std::span<const double> x) const;
  Eigen::VectorXd to_unconstrained(const ParameterState& state) const;

  /// Output-column index ranges for summaries; -1 when absent.
  struct OutputLayout {
    int beta0 = 0, beta = 1, sigma = -1, lambda = -1, nu = -1;
    int kappa = -1, latent = -1;
  };
  OutputLayout output_layout() const;

 private:
  double evaluate(std::span<const double> x, LogPosteriorTerms* terms, double* grad) const;

  ModelSpec spec_;
  ObservedData data_;
  detail::ParameterLayout layout_;
  Eigen::VectorXd log_offset_;
  Eigen::VectorXd y_;
  Eigen::VectorXd log_y_factorial_;
  Eigen::VectorXd laplacian_eigenvalues_;
};

/// b from the free parameters: sigma (sqrt(1-lambda) theta + sqrt(lambda) u*)
/// divided elementwise by sqrt(kappa) for the scale-mixture BYM2 models;
/// the stored b for leroux/congdon.
Eigen::VectorXd latent_effects(const ParameterState& state, const ModelSpec& spec);

double log_posterior(const ParameterState& state, const ModelSpec& spec, const ObservedData& data);
Eigen::VectorXd grad_log_posterior(const ParameterState& state, const ModelSpec& spec, const ObservedData& data);

Eigen::VectorXd transform_to_unconstrained(const ParameterState& state, const ModelSpec& spec, int n);
ParameterState transform_from_unconstrained(std::span<const double> x, const ModelSpec& spec, int n);

/// Normal log-density of sum(v) at zero with sd factor * n.
double soft_sum_to_zero_logterm(std::span<const double> v, int n, double factor);

/// log-CAR mixing: kappa_i = exp(-nu/2 + sqrt(nu) z_i).
Eigen::VectorXd logcar_kappa(const Eigen::VectorXd& z, double nu_kappa);

/// Central interval of an exponential prior with the given mean.
std::pair<double, double> exponential_prior_interval(double mean, double level = 0.95);

}  // namespace arealmix
