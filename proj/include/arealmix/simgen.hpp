#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "arealmix/diagnostics.hpp"
#include "arealmix/graph.hpp"
#include "arealmix/models.hpp"
#include "arealmix/rng.hpp"
#include "arealmix/sampler.hpp"

namespace arealmix {

enum class Protocol { contaminated_pcar, from_bym2_gamma, from_bym2_logcar, no_outliers };

/// Config spelling: CONTAMINATED_PCAR, FROM_BYM2_GAMMA, FROM_BYM2_LOGCAR, NO_OUTLIERS.
std::string_view protocol_name(Protocol p);
Protocol parse_protocol(std::string_view name);

struct GeneratorParams {
  double alpha = 0.7;
  double sigma_b = 0.0;  // set per protocol
  double beta0 = -0.1;
  std::vector<double> beta;
  double nu = 4.0;
  double nu_kappa = 0.3;
  double lambda = 0.8;
  double sigma = 0.3;
};

struct ContaminationSpec {
  std::vector<std::string> nodes;  // area labels; "1".."n" when the graph is unlabelled
  double low = 1.0;
  double high = 2.0;
  int sign = 1;
};

struct StudyConfig {
  Protocol protocol = Protocol::contaminated_pcar;
  int replicates = 100;
  std::uint64_t seed = 20152016;

  std::string graph_file;  // empty: lattice_rows x lattice_cols lattice
  std::string labels_file;
  int lattice_rows = 10;
  int lattice_cols = 10;

  GeneratorParams generator;
  ContaminationSpec contamination;

  std::string design_file;  // optional CSV with E and x1..xp columns
  double offset_low = 50.0;
  double offset_high = 500.0;
  double covariate_low = 0.3;
  double covariate_high = 0.8;

  std::vector<ModelKind> models;
  SamplerConfig sampler;

  /// Throws InputError naming the offending field.
  void validate() const;
  /// Fully resolved configuration in the same INI layout that parse_study_config reads.
  std::string to_ini() const;
};

/// Defaults for a protocol: generator values, covariate use and fitted models.
StudyConfig default_study_config(Protocol protocol);

/// Reads an INI study file over the protocol defaults. Unknown sections or
/// keys are rejected by name.
StudyConfig parse_study_config(std::string_view text);
StudyConfig load_study_config(const std::string& path);

struct StudyDesign {
  Eigen::VectorXd offset;
  Eigen::MatrixXd covariates;  // n x p
};

/// E ~ U(low, high) rounded to an integer, x ~ U(low, high), p columns.
StudyDesign synthetic_design(int n, int p, const StudyConfig& cfg, Rng& rng);

struct SimulatedTruth {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd b;          // latent effects used for every replicate
  Eigen::VectorXd b_initial;  // before contamination
  Eigen::VectorXd theta, u_star, z, kappa;
  double lambda = 0.0, sigma = 0.0, nu = 0.0;  // nu_kappa for the log-CAR protocol
  std::vector<int> contaminated;               // node indices
};

struct SimulatedStudy {
  Protocol protocol = Protocol::contaminated_pcar;
  AdjacencyGraph graph;
  StudyDesign design;
  SimulatedTruth truth;
  std::vector<std::vector<int>> y;  // one count vector per replicate
  std::vector<std::string> warnings;
};

/// Replicate r draws its counts from make_stream(seed, {2, r}); the shared
/// effects come from make_stream(seed, {1}), so any replicate can be rebuilt alone.
std::vector<int> poisson_counts(const StudyDesign& design, double beta0, const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& b, Rng& rng);

SimulatedStudy generate_contaminated_study(const StudyConfig& cfg, const AdjacencyGraph& g, const StudyDesign& design);
SimulatedStudy generate_from_bym2_gamma(const StudyConfig& cfg, const AdjacencyGraph& g, const StudyDesign& design);
SimulatedStudy generate_from_bym2_logcar(const StudyConfig& cfg, const AdjacencyGraph& g, const StudyDesign& design);
/// Dispatches on cfg.protocol; NO_OUTLIERS is the contaminated protocol with no nodes.
SimulatedStudy generate_study(const StudyConfig& cfg, const AdjacencyGraph& g, const StudyDesign& design);

/// Graph and design named by the config: files when given, else lattice and synthetic values.
AdjacencyGraph study_graph(const StudyConfig& cfg);
StudyDesign study_design(const StudyConfig& cfg, int n);

struct StudyFit {
  int replicate = 0;
  ModelKind model = ModelKind::bym2;
  bool ok = false;
  std::string error;
  WaicResult waic;
  int divergences = 0;
  double max_rhat = 0.0;
  std::vector<bool> flagged;  // empty when the model has no kappa
};

struct CoverageRow {
  int replicate = 0;
  ModelKind model = ModelKind::bym2;
  std::string parameter;
  double truth = 0.0;
  PosteriorSummary summary;
  bool covered = false;
};

struct StudyReport {
  StudyConfig config;
  std::vector<std::string> area_ids;
  std::vector<int> contaminated;
  std::vector<StudyFit> fits;  // replicate-major, models in config order
  std::vector<CoverageRow> coverage;
  std::vector<std::string> warnings;

  /// Fraction of successful fits of `model` flagging each node; empty if the model has no kappa.
  std::vector<double> detection_frequency(ModelKind model) const;
  int successful_fits(ModelKind model) const;
};

/// Seed of the sampler for one (replicate, model) fit.
std::uint64_t fit_seed(std::uint64_t study_seed, int replicate, int model_index);

/// Fits every configured model to every replicate. Replicate-model fits run
/// in parallel under Execution::parallel; chains within a fit run serially.
/// A failed fit is recorded with its message and skipped.
StudyReport run_study(const StudyConfig& cfg, Execution execution = Execution::parallel);

}  // namespace arealmix
