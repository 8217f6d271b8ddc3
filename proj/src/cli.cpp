#include "arealmix/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "arealmix/diagnostics.hpp"
#include "arealmix/error.hpp"
#include "arealmix/graph.hpp"
#include "arealmix/io.hpp"
#include "arealmix/models.hpp"
#include "arealmix/render.hpp"
#include "arealmix/sampler.hpp"
#include "arealmix/simgen.hpp"

namespace arealmix {

namespace {

struct FitOptions {
  std::string model;
  std::string graph;
  std::string data;
  std::string labels;
  std::string out_dir = "fit-out";
  SamplerConfig sampler;
  bool serial = false;
};

struct StudyOptions {
  std::string config;
  std::string out_dir = "study-out";
  bool serial = false;
};

struct ScalingOptions {
  std::string graph;
  std::string diag_out;
};

struct RenderCliOptions {
  std::string values;
  std::string polygons;
  std::string out;
  std::string value_column = "value";
  std::string id_column = "id";
  std::string flag_column;
  std::optional<double> midpoint;
  std::string title;
};

std::string path_join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::string twelve_digits(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fit_config_text(const FitOptions& o, const ModelSpec& spec, double h) {
  std::ostringstream os;
  const SamplerConfig& s = o.sampler;
  os << "model = " << model_name(spec.kind) << '\n'
     << "graph = " << o.graph << '\n'
     << "data = " << o.data << '\n'
     << "labels = " << o.labels << '\n'
     << "scaling_factor = " << format_double(h) << '\n'
     << "chains = " << s.chains << '\n'
     << "iterations = " << s.iterations << '\n'
     << "warmup = " << s.warmup << '\n'
     << "thin = " << s.thin << '\n'
     << "target_accept = " << format_double(s.target_accept) << '\n'
     << "max_leapfrog = " << s.max_leapfrog << '\n'
     << "integration_time = " << format_double(s.integration_time) << '\n'
     << "seed = " << s.seed << '\n'
     << "prior.beta = normal(0, " << format_double(spec.beta_prior_sd) << ")\n"
     << "prior.sigma = half-normal(0, " << format_double(spec.sigma_prior_sd) << ")\n"
     << "prior.lambda = uniform(0, 1)\n";
  switch (spec.kind) {
    case ModelKind::bym2:
    case ModelKind::bym2_gamma:
    case ModelKind::bym2_logcar:
      os << "prior.theta = normal(0, 1)\n"
         << "prior.u_star = icar(h)\n"
         << "soft_constraint_sd = " << format_double(spec.soft_constraint_sd_factor) << " * n\n";
      break;
    case ModelKind::leroux:
    case ModelKind::congdon: break;
  }
  if (spec.kind == ModelKind::bym2_gamma || spec.kind == ModelKind::congdon)
    os << "prior.kappa = gamma(nu/2, nu/2)\n"
       << "prior.nu = exponential(mean " << format_double(spec.mu_nu) << ")\n";
  if (spec.kind == ModelKind::bym2_logcar)
    os << "prior.z = icar(h)\n"
       << "kappa = exp(-nu/2 + sqrt(nu) z)\n"
       << "prior.nu = exponential(mean " << format_double(spec.mu_nu) << ")\n";
  return os.str();
}

int cmd_scaling_factor(const ScalingOptions& o, std::ostream& out) {
  const AdjacencyGraph g = load_edge_list_file(o.graph);
  const LaplacianSpectrum spectrum = laplacian_spectrum(g);
  const double h = scaling_factor(spectrum);
  out << twelve_digits(h) << '\n';
  if (!o.diag_out.empty()) {
    const Eigen::VectorXd d = generalized_inverse_diag(spectrum);
    std::ostringstream csv;
    csv << "node,pinv_diag\n";
    for (int i = 0; i < g.size(); ++i) csv << g.label(i) << ',' << format_double(d[i]) << '\n';
    write_file_atomic(o.diag_out, csv.str());
  }
  return kExitOk;
}

int cmd_fit(FitOptions o, std::ostream& out, std::ostream& err) {
  o.sampler.execution = o.serial ? Execution::serial : Execution::parallel;
  o.sampler.validate();
  AdjacencyGraph g = load_edge_list_file(o.graph);
  if (!o.labels.empty()) g.set_labels(load_labels_file(o.labels, g.size()));
  const Dataset ds = parse_dataset(read_text_file(o.data), g);
  if (!g.has_labels()) g.set_labels(ds.ids);
  const ModelSpec spec = default_model_spec(parse_model_kind(o.model), static_cast<int>(ds.covariates.cols()));
  const Model model(spec, make_observed_data(g, ds.y, ds.offset, ds.covariates));
  const std::string config = fit_config_text(o, spec, model.data().h);

  PosteriorDraws draws;
  try {
    draws = hmc_run(model, o.sampler);
  } catch (const SamplerError& e) {
    err << "sampler failure: " << e.what() << '\n';
    return kExitSamplerFailure;
  }
  const FitReport report = build_fit_report(model, draws, o.sampler.execution);

  write_file_atomic(path_join(o.out_dir, "draws.csv"), draws_csv(draws));
  write_file_atomic(path_join(o.out_dir, "loglik.csv"), loglik_csv(draws));
  write_file_atomic(path_join(o.out_dir, "summary.csv"), summary_csv(report));
  write_file_atomic(path_join(o.out_dir, "latent.csv"), latent_csv(report));
  if (report.has_outliers()) write_file_atomic(path_join(o.out_dir, "outliers.csv"), outliers_csv(report));
  write_file_atomic(path_join(o.out_dir, "report.txt"), fit_report_text(report, config));

  out << "model " << report.model << ": WAIC " << format_double(report.waic.waic) << ", p_W "
      << format_double(report.waic.p_w) << ", max R-hat " << format_double(report.max_rhat) << ", divergences "
      << report.divergences << '\n';
  if (report.has_outliers()) {
    int flagged = 0;
    for (const auto& r : report.outliers) flagged += r.flagged ? 1 : 0;
    out << flagged << " area(s) flagged as outliers\n";
  }
  out << "outputs written to " << o.out_dir << '\n';
  if (report.max_rhat > kRhatThreshold) {
    err << "warning: R-hat above " << kRhatThreshold << " (max " << format_double(report.max_rhat) << ")\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_study(const StudyOptions& o, std::ostream& out, std::ostream& err) {
  const StudyConfig cfg = load_study_config(o.config);
  const StudyReport report = run_study(cfg, o.serial ? Execution::serial : Execution::parallel);
  write_file_atomic(path_join(o.out_dir, "study_waic.csv"), study_waic_csv(report));
  bool has_kappa = false;
  for (auto m : cfg.models) has_kappa = has_kappa || has_scale_mixture(m);
  if (has_kappa) write_file_atomic(path_join(o.out_dir, "study_detection.csv"), study_detection_csv(report));
  write_file_atomic(path_join(o.out_dir, "study_coverage.csv"), study_coverage_csv(report));
  write_file_atomic(path_join(o.out_dir, "study_report.txt"), study_report_text(report));
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  int ok = 0;
  for (const auto& f : report.fits) ok += f.ok ? 1 : 0;
  out << "study " << protocol_name(cfg.protocol) << ": " << ok << '/' << report.fits.size() << " fits succeeded; outputs written to "
      << o.out_dir << '\n';
  return ok == 0 ? kExitSamplerFailure : kExitOk;
}

int cmd_render(const RenderCliOptions& o, std::ostream& out) {
  const CsvTable t = parse_csv(read_text_file(o.values));
  const int c_id = t.column(o.id_column), c_v = t.column(o.value_column);
  if (c_id < 0) throw InputError("values file: missing column '" + o.id_column + "'");
  if (c_v < 0) throw InputError("values file: missing column '" + o.value_column + "'");
  int c_flag = -1;
  if (!o.flag_column.empty()) {
    c_flag = t.column(o.flag_column);
    if (c_flag < 0) throw InputError("values file: missing column '" + o.flag_column + "'");
  }
  std::vector<ChoroplethValue> values;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    ChoroplethValue v;
    v.id = row[static_cast<std::size_t>(c_id)];
    try {
      v.value = std::stod(row[static_cast<std::size_t>(c_v)]);
    } catch (const std::exception&) {
      throw InputError("values file line " + std::to_string(r + 2) + ": cannot parse value");
    }
    if (c_flag >= 0) {
      const auto& f = row[static_cast<std::size_t>(c_flag)];
      v.flagged = f == "1" || f == "true" || f == "TRUE" || f == "yes";
    }
    values.push_back(v);
  }
  RenderOptions ro;
  ro.midpoint = o.midpoint;
  ro.title = o.title;
  write_file_atomic(o.out, render_choropleth(values, parse_polygons(read_text_file(o.polygons)), ro));
  out << "wrote " << o.out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian disease mapping with heavy-tailed spatial latent effects"};
  app.require_subcommand(1);

  ScalingOptions scaling;
  auto* sc = app.add_subcommand("scaling-factor", "Print the BYM2 scaling factor of a graph");
  sc->add_option("--graph", scaling.graph, "Edge-list file")->required();
  sc->add_option("--diag-out", scaling.diag_out, "Write the generalized-inverse diagonal as CSV");

  FitOptions fit;
  auto* fc = app.add_subcommand("fit", "Fit one model to a dataset");
  fc->add_option("--model", fit.model, "bym2, leroux, congdon, bym2-gamma or bym2-logcar")->required();
  fc->add_option("--graph", fit.graph, "Edge-list file")->required();
  fc->add_option("--data", fit.data, "Dataset CSV (id, y, E or pop, x1..xp)")->required();
  fc->add_option("--labels", fit.labels, "Area labels, one per line, in node order");
  fc->add_option("--chains", fit.sampler.chains, "Number of chains")->capture_default_str();
  fc->add_option("--iters", fit.sampler.iterations, "Iterations per chain, warmup included")->capture_default_str();
  fc->add_option("--warmup", fit.sampler.warmup, "Warmup iterations")->capture_default_str();
  fc->add_option("--thin", fit.sampler.thin, "Keep every thin-th draw")->capture_default_str();
  fc->add_option("--seed", fit.sampler.seed, "Random seed")->capture_default_str();
  fc->add_option("--target-accept", fit.sampler.target_accept, "Step-size adaptation target")->capture_default_str();
  fc->add_option("--max-leapfrog", fit.sampler.max_leapfrog, "Cap on leapfrog steps per iteration")->capture_default_str();
  fc->add_option("--integration-time", fit.sampler.integration_time, "Upper trajectory length")->capture_default_str();
  fc->add_option("--out-dir", fit.out_dir, "Output directory")->capture_default_str();
  fc->add_flag("--serial", fit.serial, "Run chains one after another");

  StudyOptions study;
  auto* stc = app.add_subcommand("study", "Run a simulation study");
  stc->add_option("--config", study.config, "Study INI file")->required();
  stc->add_option("--out-dir", study.out_dir, "Output directory")->capture_default_str();
  stc->add_flag("--serial", study.serial, "Fit replicates one after another");

  RenderCliOptions render;
  auto* rc = app.add_subcommand("render", "Draw an SVG choropleth");
  rc->add_option("--values", render.values, "CSV with id and value columns")->required();
  rc->add_option("--polygons", render.polygons, "JSON polygons keyed by id")->required();
  rc->add_option("--out", render.out, "SVG output path")->required();
  rc->add_option("--value-column", render.value_column)->capture_default_str();
  rc->add_option("--id-column", render.id_column)->capture_default_str();
  rc->add_option("--flag-column", render.flag_column, "Column of 0/1 flags drawn as stars");
  rc->add_option("--midpoint", render.midpoint, "Diverging ramp centred here");
  rc->add_option("--title", render.title);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitInputError;
  }

  try {
    if (*sc) return cmd_scaling_factor(scaling, out);
    if (*fc) return cmd_fit(fit, out, err);
    if (*stc) return cmd_study(study, out, err);
    if (*rc) return cmd_render(render, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const SamplerError& e) {
    err << "sampler failure: " << e.what() << '\n';
    return kExitSamplerFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "sampler failure: " << e.what() << '\n';
    return kExitSamplerFailure;
  }
  return kExitInputError;
}

}  // namespace arealmix
