#include "arealmix/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "arealmix/error.hpp"

namespace arealmix {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double parse_real(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) throw InputError(where + ": cannot parse '" + s + "' as a number");
  return v;
}

long long parse_integer(const std::string& s, const std::string& where) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) throw InputError(where + ": cannot parse '" + s + "' as an integer");
  return v;
}

// x1..xp in order; gaps are an error.
std::vector<int> covariate_columns(const CsvTable& t) {
  std::vector<int> cols;
  for (int k = 1;; ++k) {
    const int c = t.column("x" + std::to_string(k));
    if (c < 0) break;
    cols.push_back(c);
  }
  for (const auto& h : t.header) {
    if (h.size() > 1 && h[0] == 'x' && h.find_first_not_of("0123456789", 1) == std::string::npos) {
      const auto k = std::stoul(h.substr(1));
      if (k == 0 || k > cols.size()) throw InputError("covariate columns must be x1..xp without gaps; found " + h);
    }
  }
  return cols;
}

std::string cell_where(int line, const std::string& column) {
  return "row " + std::to_string(line) + ", column " + column;
}

}  // namespace

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(unquote(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start))));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (t.header.empty()) {
      t.header = std::move(fields);
      std::set<std::string> seen;
      for (const auto& h : t.header)
        if (!seen.insert(h).second) throw InputError("CSV header repeats column '" + h + "'");
    } else {
      if (fields.size() != t.header.size())
        throw InputError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                         " fields, found " + std::to_string(fields.size()));
      t.rows.push_back(std::move(fields));
    }
  }
  if (t.header.empty()) throw InputError("CSV input is empty");
  return t;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Dataset parse_dataset(std::string_view text, const AdjacencyGraph& g) {
  const CsvTable t = parse_csv(text);
  const int c_id = t.column("id"), c_y = t.column("y"), c_e = t.column("E"), c_pop = t.column("pop");
  if (c_id < 0) throw InputError("dataset: missing column 'id'");
  if (c_y < 0) throw InputError("dataset: missing column 'y'");
  if ((c_e < 0) == (c_pop < 0)) throw InputError("dataset: exactly one of 'E' or 'pop' is required");
  const int n = g.size();
  if (static_cast<int>(t.rows.size()) != n)
    throw InputError("dataset: " + std::to_string(t.rows.size()) + " rows but the graph has " + std::to_string(n) + " areas");

  const auto xcols = covariate_columns(t);
  Dataset d;
  d.y.resize(static_cast<std::size_t>(n));
  Eigen::VectorXd base(n);
  d.covariates.resize(n, static_cast<Eigen::Index>(xcols.size()));
  std::set<std::string> seen;
  for (int i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    const int line = i + 2;
    const std::string& id = row[static_cast<std::size_t>(c_id)];
    if (!seen.insert(id).second) throw InputError("dataset: duplicate id '" + id + "'");
    if (g.has_labels() && id != g.label(i))
      throw InputError("dataset: row " + std::to_string(line) + " has id '" + id + "' but the label file expects '" +
                       g.label(i) + "'");
    d.ids.push_back(id);
    const long long y = parse_integer(row[static_cast<std::size_t>(c_y)], cell_where(line, "y"));
    if (y < 0) throw InputError("dataset: " + cell_where(line, "y") + " is negative");
    d.y[static_cast<std::size_t>(i)] = static_cast<int>(y);
    const int c_base = c_e >= 0 ? c_e : c_pop;
    const std::string base_name = c_e >= 0 ? "E" : "pop";
    base[i] = parse_real(row[static_cast<std::size_t>(c_base)], cell_where(line, base_name));
    if (!(base[i] > 0.0) || !std::isfinite(base[i]))
      throw InputError("dataset: " + cell_where(line, base_name) + " must be positive");
    for (std::size_t k = 0; k < xcols.size(); ++k) {
      const double x = parse_real(row[static_cast<std::size_t>(xcols[k])], cell_where(line, "x" + std::to_string(k + 1)));
      if (!std::isfinite(x)) throw InputError("dataset: non-finite covariate at " + cell_where(line, "x" + std::to_string(k + 1)));
      d.covariates(i, static_cast<Eigen::Index>(k)) = x;
    }
  }
  d.offsets_from_population = c_pop >= 0;
  d.offset = d.offsets_from_population ? offsets_from_population(base, d.y) : base;
  return d;
}

StudyDesign parse_design(std::string_view text, int n) {
  const CsvTable t = parse_csv(text);
  const int c_e = t.column("E");
  if (c_e < 0) throw InputError("design file: missing column 'E'");
  if (static_cast<int>(t.rows.size()) != n)
    throw InputError("design file: " + std::to_string(t.rows.size()) + " rows but the graph has " + std::to_string(n) + " areas");
  const auto xcols = covariate_columns(t);
  StudyDesign d;
  d.offset.resize(n);
  d.covariates.resize(n, static_cast<Eigen::Index>(xcols.size()));
  for (int i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    d.offset[i] = parse_real(row[static_cast<std::size_t>(c_e)], cell_where(i + 2, "E"));
    if (!(d.offset[i] > 0.0)) throw InputError("design file: " + cell_where(i + 2, "E") + " must be positive");
    for (std::size_t k = 0; k < xcols.size(); ++k)
      d.covariates(i, static_cast<Eigen::Index>(k)) =
          parse_real(row[static_cast<std::size_t>(xcols[k])], cell_where(i + 2, "x" + std::to_string(k + 1)));
  }
  return d;
}

std::string draws_csv(const PosteriorDraws& draws) {
  std::ostringstream os;
  os << "chain,draw";
  for (const auto& n : draws.names) os << ',' << n;
  os << '\n';
  for (int c = 0; c < draws.chains; ++c) {
    for (int d = 0; d < draws.draws; ++d) {
      os << c + 1 << ',' << d + 1;
      for (std::size_t k = 0; k < draws.dim(); ++k) os << ',' << format_double(draws.value(c, d, k));
      os << '\n';
    }
  }
  return os.str();
}

std::string loglik_csv(const PosteriorDraws& draws) {
  std::ostringstream os;
  os << "chain,draw";
  for (std::size_t i = 0; i < draws.pointwise; ++i) os << ",ll[" << i + 1 << ']';
  os << '\n';
  for (int c = 0; c < draws.chains; ++c) {
    for (int d = 0; d < draws.draws; ++d) {
      os << c + 1 << ',' << d + 1;
      const std::size_t row = static_cast<std::size_t>(c) * static_cast<std::size_t>(draws.draws) + static_cast<std::size_t>(d);
      for (std::size_t i = 0; i < draws.pointwise; ++i) os << ',' << format_double(draws.loglik[row * draws.pointwise + i]);
      os << '\n';
    }
  }
  return os.str();
}

Eigen::MatrixXd parse_loglik_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  if (t.header.size() < 3 || t.header[0] != "chain" || t.header[1] != "draw")
    throw InputError("log-likelihood CSV must start with chain,draw and at least one column");
  const Eigen::Index cols = static_cast<Eigen::Index>(t.header.size()) - 2;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), cols);
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (Eigen::Index i = 0; i < cols; ++i)
      m(static_cast<Eigen::Index>(r), i) =
          parse_real(t.rows[r][static_cast<std::size_t>(i) + 2], "log-likelihood CSV line " + std::to_string(r + 2));
  return m;
}

std::string summary_csv(const FitReport& report) {
  std::ostringstream os;
  os << "parameter,mean,q2.5,q97.5,rhat,ess\n";
  for (const auto& r : report.rows)
    os << r.name << ',' << format_double(r.summary.mean) << ',' << format_double(r.summary.lower) << ','
       << format_double(r.summary.upper) << ',' << format_double(r.rhat) << ',' << format_double(r.ess) << '\n';
  return os.str();
}

std::string outliers_csv(const FitReport& report) {
  std::ostringstream os;
  os << "id,kappa_upper,outlier\n";
  for (const auto& o : report.outliers) os << o.id << ',' << format_double(o.kappa_upper) << ',' << (o.flagged ? 1 : 0) << '\n';
  return os.str();
}

std::string latent_csv(const FitReport& report) {
  std::ostringstream os;
  os << "id,b_mean\n";
  for (std::size_t i = 0; i < report.area_ids.size(); ++i)
    os << report.area_ids[i] << ',' << format_double(report.latent_mean[static_cast<Eigen::Index>(i)]) << '\n';
  return os.str();
}

std::string fit_report_text(const FitReport& report, std::string_view resolved_config) {
  std::ostringstream os;
  os << "# fit report\n\n[config]\n" << resolved_config << "\n[result]\n";
  os << "model = " << report.model << '\n'
     << "waic = " << format_double(report.waic.waic) << '\n'
     << "p_w = " << format_double(report.waic.p_w) << '\n'
     << "lppd = " << format_double(report.waic.lppd) << '\n'
     << "divergences = " << report.divergences << '\n'
     << "max_rhat = " << format_double(report.max_rhat) << '\n'
     << "converged = " << (report.max_rhat <= 1.05 ? "yes" : "no (some R-hat > 1.05)") << '\n';
  if (report.has_outliers()) {
    os << "outliers =";
    bool any = false;
    for (const auto& o : report.outliers)
      if (o.flagged) {
        os << ' ' << o.id;
        any = true;
      }
    os << (any ? "" : " none") << '\n';
  }
  os << "\n[summary]\n";
  os << std::left << std::setw(16) << "parameter" << std::right << std::setw(12) << "mean" << std::setw(12) << "q2.5"
     << std::setw(12) << "q97.5" << std::setw(10) << "rhat" << std::setw(10) << "ess" << '\n';
  os << std::fixed;
  for (const auto& r : report.rows) {
    os << std::left << std::setw(16) << r.name << std::right << std::setprecision(4) << std::setw(12) << r.summary.mean
       << std::setw(12) << r.summary.lower << std::setw(12) << r.summary.upper << std::setprecision(3) << std::setw(10)
       << r.rhat << std::setprecision(0) << std::setw(10) << r.ess;
    if (!r.issue.empty()) os << "  (" << r.issue << ')';
    os << '\n';
  }
  return os.str();
}

std::string study_waic_csv(const StudyReport& report) {
  std::ostringstream os;
  os << "replicate,model,ok,waic,p_w,lppd,divergences,max_rhat,error\n";
  for (const auto& f : report.fits) {
    os << f.replicate + 1 << ',' << model_name(f.model) << ',' << (f.ok ? 1 : 0) << ',';
    if (f.ok)
      os << format_double(f.waic.waic) << ',' << format_double(f.waic.p_w) << ',' << format_double(f.waic.lppd) << ','
         << f.divergences << ',' << format_double(f.max_rhat) << ',';
    else
      os << ",,,,,\"" << f.error << '"';
    os << '\n';
  }
  return os.str();
}

std::string study_detection_csv(const StudyReport& report) {
  std::vector<ModelKind> kinds;
  for (auto m : report.config.models)
    if (has_scale_mixture(m)) kinds.push_back(m);
  std::ostringstream os;
  os << "id,contaminated";
  for (auto m : kinds) os << ',' << model_name(m);
  os << '\n';
  std::vector<std::vector<double>> freq;
  for (auto m : kinds) freq.push_back(report.detection_frequency(m));
  std::set<int> contaminated(report.contaminated.begin(), report.contaminated.end());
  for (std::size_t i = 0; i < report.area_ids.size(); ++i) {
    os << report.area_ids[i] << ',' << (contaminated.count(static_cast<int>(i)) ? 1 : 0);
    for (const auto& f : freq) os << ',' << format_double(f[i]);
    os << '\n';
  }
  return os.str();
}

std::string study_coverage_csv(const StudyReport& report) {
  std::ostringstream os;
  os << "replicate,model,parameter,truth,mean,q2.5,q97.5,covered\n";
  for (const auto& c : report.coverage)
    os << c.replicate + 1 << ',' << model_name(c.model) << ',' << c.parameter << ',' << format_double(c.truth) << ','
       << format_double(c.summary.mean) << ',' << format_double(c.summary.lower) << ',' << format_double(c.summary.upper)
       << ',' << (c.covered ? 1 : 0) << '\n';
  return os.str();
}

std::string study_report_text(const StudyReport& report) {
  std::ostringstream os;
  os << "# study report\n\n[config]\n" << report.config.to_ini() << "\n[result]\n";
  for (std::size_t m = 0; m < report.config.models.size(); ++m) {
    const ModelKind kind = report.config.models[m];
    double sum = 0.0;
    int ok = 0;
    for (const auto& f : report.fits)
      if (f.model == kind && f.ok) {
        sum += f.waic.waic;
        ++ok;
      }
    os << model_name(kind) << ".fits = " << ok << '/' << report.config.replicates << '\n';
    if (ok > 0) os << model_name(kind) << ".mean_waic = " << format_double(sum / ok) << '\n';
  }
  std::map<std::pair<std::string, std::string>, std::pair<int, int>> cov;
  for (const auto& c : report.coverage) {
    auto& e = cov[{std::string(model_name(c.model)), c.parameter}];
    e.first += c.covered ? 1 : 0;
    ++e.second;
  }
  for (const auto& [key, e] : cov)
    os << key.first << ".coverage." << key.second << " = " << e.first << '/' << e.second << '\n';
  for (const auto& w : report.warnings) os << "warning = " << w << '\n';
  return os.str();
}

}  // namespace arealmix
