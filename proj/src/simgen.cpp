#include "arealmix/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "arealmix/car.hpp"
#include "arealmix/error.hpp"
#include "arealmix/io.hpp"
#include "arealmix/rng.hpp"

namespace arealmix {

namespace {

constexpr std::uint64_t kDesignStream = 0;
constexpr std::uint64_t kLatentStream = 1;
constexpr std::uint64_t kCountStream = 2;
constexpr std::uint64_t kFitStream = 3;

struct ProtocolEntry {
  Protocol protocol;
  std::string_view name;
};

constexpr ProtocolEntry kProtocols[] = {
    {Protocol::contaminated_pcar, "CONTAMINATED_PCAR"},
    {Protocol::from_bym2_gamma, "FROM_BYM2_GAMMA"},
    {Protocol::from_bym2_logcar, "FROM_BYM2_LOGCAR"},
    {Protocol::no_outliers, "NO_OUTLIERS"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os.str();
}

Eigen::VectorXd bym2_mixture(const Eigen::VectorXd& theta, const Eigen::VectorXd& u_star, const Eigen::VectorXd& kappa,
                             double lambda, double sigma) {
  return (std::sqrt(1.0 - lambda) * theta + std::sqrt(lambda) * u_star).cwiseQuotient(kappa.cwiseSqrt()) * sigma;
}

Eigen::VectorXd standard_normal_vector(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

void draw_replicates(const StudyConfig& cfg, SimulatedStudy& study) {
  study.y.resize(static_cast<std::size_t>(cfg.replicates));
  for (int r = 0; r < cfg.replicates; ++r) {
    Rng rng = make_stream(cfg.seed, {kCountStream, static_cast<std::uint64_t>(r)});
    study.y[static_cast<std::size_t>(r)] =
        poisson_counts(study.design, study.truth.beta0, study.truth.beta, study.truth.b, rng);
  }
}

Eigen::VectorXd beta_vector(const GeneratorParams& g) {
  return Eigen::Map<const Eigen::VectorXd>(g.beta.data(), static_cast<Eigen::Index>(g.beta.size()));
}

std::vector<int> resolve_nodes(const std::vector<std::string>& names, const AdjacencyGraph& g) {
  std::map<std::string, int> index;
  for (int i = 0; i < g.size(); ++i) index.emplace(g.label(i), i);
  std::vector<int> out;
  for (const auto& name : names) {
    auto it = index.find(name);
    if (it == index.end()) throw InputError("contamination.nodes: unknown area '" + name + "'");
    out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// The model whose parameters the protocol generated from, if any.
std::optional<ModelKind> generating_model(Protocol p) {
  switch (p) {
    case Protocol::from_bym2_gamma: return ModelKind::bym2_gamma;
    case Protocol::from_bym2_logcar: return ModelKind::bym2_logcar;
    default: return std::nullopt;
  }
}

}  // namespace

std::string_view protocol_name(Protocol p) {
  for (const auto& e : kProtocols)
    if (e.protocol == p) return e.name;
  return "?";
}

Protocol parse_protocol(std::string_view name) {
  for (const auto& e : kProtocols)
    if (e.name == name) return e.protocol;
  throw InputError("study.protocol: unknown protocol '" + std::string(name) + "'");
}

StudyConfig default_study_config(Protocol protocol) {
  StudyConfig cfg;
  cfg.protocol = protocol;
  auto& g = cfg.generator;
  switch (protocol) {
    case Protocol::contaminated_pcar:
      g.sigma_b = std::sqrt(0.7);
      g.beta = {-4.0};
      cfg.models = {ModelKind::bym2, ModelKind::congdon, ModelKind::bym2_gamma, ModelKind::bym2_logcar};
      break;
    case Protocol::no_outliers:
      g.sigma_b = std::sqrt(0.2);
      cfg.models = {ModelKind::congdon, ModelKind::bym2_gamma, ModelKind::bym2_logcar};
      break;
    case Protocol::from_bym2_gamma:
      g.sigma_b = std::sqrt(0.7);
      cfg.models = {ModelKind::bym2_gamma, ModelKind::congdon};
      break;
    case Protocol::from_bym2_logcar:
      g.sigma_b = std::sqrt(0.7);
      cfg.models = {ModelKind::bym2_logcar, ModelKind::congdon};
      break;
  }
  return cfg;
}

void StudyConfig::validate() const {
  if (replicates < 1) throw InputError("study.replicates: must be at least 1");
  if (models.empty()) throw InputError("study.models: at least one model is required");
  if (graph_file.empty() && (lattice_rows < 1 || lattice_cols < 1 || lattice_rows * lattice_cols < 2))
    throw InputError("graph.lattice_rows/lattice_cols: lattice needs at least 2 nodes");
  const auto& g = generator;
  if (!(g.alpha >= 0.0 && g.alpha < 1.0)) throw InputError("generator.alpha: must lie in [0, 1)");
  if (!(g.sigma_b > 0.0)) throw InputError("generator.sigma_b: must be positive");
  if (!(g.nu > 0.0)) throw InputError("generator.nu: must be positive");
  if (!(g.nu_kappa >= 0.0)) throw InputError("generator.nu_kappa: must be nonnegative");
  if (!(g.lambda >= 0.0 && g.lambda <= 1.0)) throw InputError("generator.lambda: must lie in [0, 1]");
  if (!(g.sigma > 0.0)) throw InputError("generator.sigma: must be positive");
  if (!(contamination.low <= contamination.high)) throw InputError("contamination.low: must not exceed contamination.high");
  if (contamination.sign != 1 && contamination.sign != -1) throw InputError("contamination.sign: must be +1 or -1");
  if (protocol == Protocol::no_outliers && !contamination.nodes.empty())
    throw InputError("contamination.nodes: NO_OUTLIERS takes no contaminated nodes");
  if (design_file.empty()) {
    if (!(offset_low >= 1.0 && offset_low <= offset_high)) throw InputError("design.offset_low/offset_high: need 1 <= low <= high");
    if (!(covariate_low <= covariate_high)) throw InputError("design.covariate_low: must not exceed covariate_high");
  }
  try {
    sampler.validate();
  } catch (const InputError& e) {
    throw InputError(std::string("sampler: ") + e.what());
  }
}

std::string StudyConfig::to_ini() const {
  std::ostringstream os;
  std::vector<std::string> model_names;
  for (auto m : models) model_names.emplace_back(model_name(m));
  os << "[study]\n"
     << "protocol = " << protocol_name(protocol) << "\n"
     << "replicates = " << replicates << "\n"
     << "seed = " << seed << "\n"
     << "models = " << join(model_names) << "\n\n";
  os << "[graph]\n";
  os << "file = " << graph_file << "\n"
     << "labels = " << labels_file << "\n"
     << "lattice_rows = " << lattice_rows << "\n"
     << "lattice_cols = " << lattice_cols << "\n\n";
  std::vector<std::string> betas;
  for (double b : generator.beta) betas.push_back(format_double(b));
  os << "[generator]\n"
     << "alpha = " << format_double(generator.alpha) << "\n"
     << "sigma_b = " << format_double(generator.sigma_b) << "\n"
     << "beta0 = " << format_double(generator.beta0) << "\n"
     << "beta = " << join(betas) << "\n"
     << "nu = " << format_double(generator.nu) << "\n"
     << "nu_kappa = " << format_double(generator.nu_kappa) << "\n"
     << "lambda = " << format_double(generator.lambda) << "\n"
     << "sigma = " << format_double(generator.sigma) << "\n\n";
  os << "[contamination]\n"
     << "nodes = " << join(contamination.nodes) << "\n"
     << "low = " << format_double(contamination.low) << "\n"
     << "high = " << format_double(contamination.high) << "\n"
     << "sign = " << contamination.sign << "\n\n";
  os << "[design]\n"
     << "file = " << design_file << "\n"
     << "offset_low = " << format_double(offset_low) << "\n"
     << "offset_high = " << format_double(offset_high) << "\n"
     << "covariate_low = " << format_double(covariate_low) << "\n"
     << "covariate_high = " << format_double(covariate_high) << "\n\n";
  os << "[sampler]\n"
     << "chains = " << sampler.chains << "\n"
     << "iterations = " << sampler.iterations << "\n"
     << "warmup = " << sampler.warmup << "\n"
     << "thin = " << sampler.thin << "\n"
     << "target_accept = " << format_double(sampler.target_accept) << "\n"
     << "max_leapfrog = " << sampler.max_leapfrog << "\n"
     << "integration_time = " << format_double(sampler.integration_time) << "\n";
  return os.str();
}

StudyConfig parse_study_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(std::string("study config: ") + e.what());
  }

  static const std::map<std::string, std::set<std::string>> allowed = {
      {"study", {"protocol", "replicates", "seed", "models"}},
      {"graph", {"file", "labels", "lattice_rows", "lattice_cols"}},
      {"generator", {"alpha", "sigma_b", "beta0", "beta", "nu", "nu_kappa", "lambda", "sigma"}},
      {"contamination", {"nodes", "low", "high", "sign"}},
      {"design", {"file", "offset_low", "offset_high", "covariate_low", "covariate_high"}},
      {"sampler", {"chains", "iterations", "warmup", "thin", "target_accept", "max_leapfrog", "integration_time"}},
  };
  for (const auto& [section, body] : tree) {
    auto it = allowed.find(section);
    if (it == allowed.end()) throw InputError("study config: unknown section [" + section + "]");
    for (const auto& kv : body)
      if (!it->second.count(kv.first)) throw InputError("study config: unknown key " + section + "." + kv.first);
  }

  const auto protocol_text = tree.get_optional<std::string>("study.protocol");
  if (!protocol_text) throw InputError("study.protocol: required");
  StudyConfig cfg = default_study_config(parse_protocol(trim(*protocol_text)));

  auto get = [&]<class T>(const std::string& key, T& target) {
    if (auto v = tree.get_optional<std::string>(key)) {
      std::istringstream is(trim(*v));
      T parsed{};
      if (!(is >> parsed) || !(is >> std::ws).eof()) throw InputError(key + ": cannot parse '" + *v + "'");
      target = parsed;
    }
  };
  auto get_string = [&](const std::string& key, std::string& target) {
    if (auto v = tree.get_optional<std::string>(key)) target = trim(*v);
  };

  get("study.replicates", cfg.replicates);
  get("study.seed", cfg.seed);
  if (auto v = tree.get_optional<std::string>("study.models")) {
    cfg.models.clear();
    for (const auto& name : split_list(*v)) {
      try {
        cfg.models.push_back(parse_model_kind(name));
      } catch (const InputError& e) {
        throw InputError(std::string("study.models: ") + e.what());
      }
    }
  }
  get_string("graph.file", cfg.graph_file);
  get_string("graph.labels", cfg.labels_file);
  get("graph.lattice_rows", cfg.lattice_rows);
  get("graph.lattice_cols", cfg.lattice_cols);
  get("generator.alpha", cfg.generator.alpha);
  get("generator.sigma_b", cfg.generator.sigma_b);
  get("generator.beta0", cfg.generator.beta0);
  if (auto v = tree.get_optional<std::string>("generator.beta")) {
    cfg.generator.beta.clear();
    for (const auto& piece : split_list(*v)) {
      try {
        std::size_t used = 0;
        cfg.generator.beta.push_back(std::stod(piece, &used));
        if (used != piece.size()) throw std::invalid_argument(piece);
      } catch (const std::exception&) {
        throw InputError("generator.beta: cannot parse '" + piece + "'");
      }
    }
  }
  get("generator.nu", cfg.generator.nu);
  get("generator.nu_kappa", cfg.generator.nu_kappa);
  get("generator.lambda", cfg.generator.lambda);
  get("generator.sigma", cfg.generator.sigma);
  if (auto v = tree.get_optional<std::string>("contamination.nodes")) cfg.contamination.nodes = split_list(*v);
  get("contamination.low", cfg.contamination.low);
  get("contamination.high", cfg.contamination.high);
  get("contamination.sign", cfg.contamination.sign);
  get_string("design.file", cfg.design_file);
  get("design.offset_low", cfg.offset_low);
  get("design.offset_high", cfg.offset_high);
  get("design.covariate_low", cfg.covariate_low);
  get("design.covariate_high", cfg.covariate_high);
  get("sampler.chains", cfg.sampler.chains);
  get("sampler.iterations", cfg.sampler.iterations);
  get("sampler.warmup", cfg.sampler.warmup);
  get("sampler.thin", cfg.sampler.thin);
  get("sampler.target_accept", cfg.sampler.target_accept);
  get("sampler.max_leapfrog", cfg.sampler.max_leapfrog);
  get("sampler.integration_time", cfg.sampler.integration_time);
  cfg.sampler.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

StudyConfig load_study_config(const std::string& path) { return parse_study_config(read_text_file(path)); }

StudyDesign synthetic_design(int n, int p, const StudyConfig& cfg, Rng& rng) {
  StudyDesign d;
  std::uniform_real_distribution<double> offset(cfg.offset_low, cfg.offset_high);
  std::uniform_real_distribution<double> covariate(cfg.covariate_low, cfg.covariate_high);
  d.offset.resize(n);
  for (int i = 0; i < n; ++i) d.offset[i] = std::round(offset(rng));
  d.covariates.resize(n, p);
  for (int k = 0; k < p; ++k)
    for (int i = 0; i < n; ++i) d.covariates(i, k) = covariate(rng);
  return d;
}

std::vector<int> poisson_counts(const StudyDesign& design, double beta0, const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& b, Rng& rng) {
  const Eigen::Index n = design.offset.size();
  if (b.size() != n || design.covariates.cols() != beta.size())
    throw InputError("poisson_counts: design, coefficients and effects disagree in size");
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, beta0) + b;
  if (beta.size() > 0) eta += design.covariates * beta;
  std::vector<int> y(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = design.offset[i] * std::exp(eta[i]);
    if (!std::isfinite(mean) || mean > 1e9)
      throw InputError("poisson_counts: expected count " + std::to_string(mean) + " at node " +
                       std::to_string(i + 1) + " is too large");
    std::poisson_distribution<int> pois(mean);
    y[static_cast<std::size_t>(i)] = pois(rng);
  }
  return y;
}

SimulatedStudy generate_contaminated_study(const StudyConfig& cfg, const AdjacencyGraph& g, const StudyDesign& design) {
  SimulatedStudy study;
  study.protocol = cfg.protocol;
  study.graph = g;
  study.design = design;
  auto& t = study.truth;
  t.beta0 = cfg.generator.beta0;
  t.beta = beta_vector(cfg.generator);

  Rng rng = make_stream(cfg.seed, {kLatentStream});
  t.b_initial = sample_pcar(g, PcarParams{cfg.generator.alpha, cfg.generator.sigma_b}, rng);
  t.b = t.b_initial;
  t.contaminated = resolve_nodes(cfg.contamination.nodes, g);
  if (cfg.protocol == Protocol::contaminated_pcar && t.contaminated.empty())
    study.warnings.push_back("CONTAMINATED_PCAR with no contaminated nodes; data match NO_OUTLIERS");
  std::uniform_real_distribution<double> shift(cfg.contamination.low, cfg.contamination.high);
  for (int i : t.contaminated) t.b[i] += cfg.contamination.sign * shift(rng);
  draw_replicates(cfg, study);
  return study;
}

SimulatedStudy generate_from_bym2_gamma(const StudyConfig& cfg, const AdjacencyGraph& g, const StudyDesign& design) {
  SimulatedStudy study;
  study.protocol = cfg.protocol;
  study.graph = g;
  study.design = design;
  auto& t = study.truth;
  const auto& p = cfg.generator;
  const int n = g.size();
  t.beta0 = p.beta0;
  t.beta = beta_vector(p);
  t.lambda = p.lambda;
  t.sigma = p.sigma;
  t.nu = p.nu;

  Rng rng = make_stream(cfg.seed, {kLatentStream});
  const IcarSampler icar(g);
  const double h = scaling_factor(icar.spectrum());
  t.theta = standard_normal_vector(n, rng);
  t.u_star = icar.sample(h, rng);
  std::gamma_distribution<double> gamma(p.nu / 2.0, 2.0 / p.nu);
  t.kappa.resize(n);
  for (int i = 0; i < n; ++i) t.kappa[i] = gamma(rng);
  t.b = bym2_mixture(t.theta, t.u_star, t.kappa, p.lambda, p.sigma);
  t.b_initial = t.b;
  draw_replicates(cfg, study);
  return study;
}

SimulatedStudy generate_from_bym2_logcar(const StudyConfig& cfg, const AdjacencyGraph& g, const StudyDesign& design) {
  SimulatedStudy study;
  study.protocol = cfg.protocol;
  study.graph = g;
  study.design = design;
  auto& t = study.truth;
  const auto& p = cfg.generator;
  const int n = g.size();
  t.beta0 = p.beta0;
  t.beta = beta_vector(p);
  t.lambda = p.lambda;
  t.sigma = p.sigma;
  t.nu = p.nu_kappa;

  Rng rng = make_stream(cfg.seed, {kLatentStream});
  const IcarSampler icar(g);
  const double h = scaling_factor(icar.spectrum());
  t.theta = standard_normal_vector(n, rng);
  t.u_star = icar.sample(h, rng);
  t.z = icar.sample(h, rng);
  t.kappa = logcar_kappa(t.z, p.nu_kappa);
  t.b = bym2_mixture(t.theta, t.u_star, t.kappa, p.lambda, p.sigma);
  t.b_initial = t.b;
  draw_replicates(cfg, study);
  return study;
}

SimulatedStudy generate_study(const StudyConfig& cfg, const AdjacencyGraph& g, const StudyDesign& design) {
  switch (cfg.protocol) {
    case Protocol::from_bym2_gamma: return generate_from_bym2_gamma(cfg, g, design);
    case Protocol::from_bym2_logcar: return generate_from_bym2_logcar(cfg, g, design);
    case Protocol::contaminated_pcar:
    case Protocol::no_outliers: break;
  }
  return generate_contaminated_study(cfg, g, design);
}

AdjacencyGraph study_graph(const StudyConfig& cfg) {
  AdjacencyGraph g = cfg.graph_file.empty() ? lattice_graph(cfg.lattice_rows, cfg.lattice_cols)
                                            : load_edge_list_file(cfg.graph_file);
  if (!cfg.labels_file.empty()) g.set_labels(load_labels_file(cfg.labels_file, g.size()));
  return g;
}

StudyDesign study_design(const StudyConfig& cfg, int n) {
  StudyDesign d;
  if (!cfg.design_file.empty()) {
    d = parse_design(read_text_file(cfg.design_file), n);
  } else {
    Rng rng = make_stream(cfg.seed, {kDesignStream});
    d = synthetic_design(n, static_cast<int>(cfg.generator.beta.size()), cfg, rng);
  }
  if (d.covariates.cols() != static_cast<Eigen::Index>(cfg.generator.beta.size()))
    throw InputError("generator.beta: " + std::to_string(cfg.generator.beta.size()) + " coefficients but the design has " +
                     std::to_string(d.covariates.cols()) + " covariates");
  return d;
}

std::uint64_t fit_seed(std::uint64_t study_seed, int replicate, int model_index) {
  Rng rng = make_stream(study_seed, {kFitStream, static_cast<std::uint64_t>(replicate), static_cast<std::uint64_t>(model_index)});
  return rng();
}

std::vector<double> StudyReport::detection_frequency(ModelKind model) const {
  if (!has_scale_mixture(model)) return {};
  std::vector<double> freq(area_ids.size(), 0.0);
  int fits_ok = 0;
  for (const auto& f : fits) {
    if (f.model != model || !f.ok) continue;
    ++fits_ok;
    for (std::size_t i = 0; i < f.flagged.size(); ++i) freq[i] += f.flagged[i] ? 1.0 : 0.0;
  }
  if (fits_ok > 0)
    for (auto& v : freq) v /= fits_ok;
  return freq;
}

int StudyReport::successful_fits(ModelKind model) const {
  return static_cast<int>(std::count_if(fits.begin(), fits.end(), [&](const StudyFit& f) { return f.model == model && f.ok; }));
}

StudyReport run_study(const StudyConfig& cfg, Execution execution) {
  cfg.validate();
  const AdjacencyGraph g = study_graph(cfg);
  const StudyDesign design = study_design(cfg, g.size());
  const SimulatedStudy study = generate_study(cfg, g, design);
  const int p = static_cast<int>(design.covariates.cols());
  const int models = static_cast<int>(cfg.models.size());
  const int tasks = cfg.replicates * models;

  StudyReport report;
  report.config = cfg;
  for (int i = 0; i < g.size(); ++i) report.area_ids.push_back(g.label(i));
  report.contaminated = study.truth.contaminated;
  report.warnings = study.warnings;
  report.fits.resize(static_cast<std::size_t>(tasks));
  std::vector<std::vector<CoverageRow>> coverage(static_cast<std::size_t>(tasks));

  const auto truth_model = generating_model(cfg.protocol);
  auto run_task = [&](int task) {
    const int r = task / models;
    const int m = task % models;
    const ModelKind kind = cfg.models[static_cast<std::size_t>(m)];
    StudyFit& fit = report.fits[static_cast<std::size_t>(task)];
    fit.replicate = r;
    fit.model = kind;
    try {
      Model model(default_model_spec(kind, p),
                  make_observed_data(g, study.y[static_cast<std::size_t>(r)], design.offset, design.covariates));
      SamplerConfig sc = cfg.sampler;
      sc.seed = fit_seed(cfg.seed, r, m);
      sc.execution = Execution::serial;
      const PosteriorDraws draws = hmc_run(model, sc);
      const FitReport rep = build_fit_report(model, draws, Execution::serial);
      fit.waic = rep.waic;
      fit.divergences = rep.divergences;
      fit.max_rhat = rep.max_rhat;
      for (const auto& o : rep.outliers) fit.flagged.push_back(o.flagged);

      auto cover = [&](const std::string& name, double truth) {
        const PosteriorSummary s = rep.row(name).summary;
        coverage[static_cast<std::size_t>(task)].push_back(
            {r, kind, name, truth, s, s.lower <= truth && truth <= s.upper});
      };
      cover("beta0", study.truth.beta0);
      for (Eigen::Index k = 0; k < study.truth.beta.size(); ++k)
        cover("beta[" + std::to_string(k + 1) + "]", study.truth.beta[k]);
      if (truth_model && *truth_model == kind) {
        cover("lambda", study.truth.lambda);
        cover("sigma", study.truth.sigma);
        cover("nu", study.truth.nu);
      }
      fit.ok = true;
    } catch (const std::exception& e) {
      fit.ok = false;
      fit.error = e.what();
      coverage[static_cast<std::size_t>(task)].clear();
    }
  };

  if (execution == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int task = 0; task < tasks; ++task) run_task(task);
  } else {
    for (int task = 0; task < tasks; ++task) run_task(task);
  }
  for (const auto& rows : coverage) report.coverage.insert(report.coverage.end(), rows.begin(), rows.end());
  for (const auto& f : report.fits)
    if (!f.ok)
      report.warnings.push_back("replicate " + std::to_string(f.replicate + 1) + ", " +
                                std::string(model_name(f.model)) + ": " + f.error);
  return report;
}

}  // namespace arealmix
