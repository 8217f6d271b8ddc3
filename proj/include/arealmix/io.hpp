#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "arealmix/diagnostics.hpp"
#include "arealmix/graph.hpp"
#include "arealmix/sampler.hpp"
#include "arealmix/simgen.hpp"

namespace arealmix {

/// Comma-separated table with a header row. Fields are trimmed; surrounding
/// double quotes are removed. Blank lines are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index, or -1 when absent.
  int column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

std::string read_text_file(const std::string& path);
/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, std::string_view content);

/// Shortest round-trip text for a double.
std::string format_double(double v);

struct Dataset {
  std::vector<std::string> ids;
  std::vector<int> y;
  Eigen::VectorXd offset;      // E, given or derived from pop
  Eigen::MatrixXd covariates;  // x1..xp
  bool offsets_from_population = false;
};

/// Parses the dataset CSV (id, y, E or pop, x1..xp) against the graph. Rows
/// must match the graph size; with labels present, ids must follow their order.
Dataset parse_dataset(std::string_view text, const AdjacencyGraph& g);

/// Offsets and covariates for a study from a CSV with E and optional x1..xp.
StudyDesign parse_design(std::string_view text, int n);

/// `chain,draw,<names>` with one row per kept draw.
std::string draws_csv(const PosteriorDraws& draws);
/// `chain,draw,ll[1..n]`.
std::string loglik_csv(const PosteriorDraws& draws);
/// Rows of a loglik CSV as a draws x n matrix.
Eigen::MatrixXd parse_loglik_csv(std::string_view text);

std::string summary_csv(const FitReport& report);
std::string outliers_csv(const FitReport& report);
std::string latent_csv(const FitReport& report);
/// Key-value report followed by the summary and convergence tables.
std::string fit_report_text(const FitReport& report, std::string_view resolved_config);

std::string study_waic_csv(const StudyReport& report);
std::string study_detection_csv(const StudyReport& report);
std::string study_coverage_csv(const StudyReport& report);
std::string study_report_text(const StudyReport& report);

}  // namespace arealmix
