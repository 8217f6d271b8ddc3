#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace arealmix {

using Edge = std::pair<int, int>;

/// Undirected 0/1 contiguity graph over n areas.
///
/// Edges are stored 0-based as (i, j) with i < j, sorted and unique. The
/// neighbour lists and degrees are derived at construction and never change.
class AdjacencyGraph {
 public:
  AdjacencyGraph() = default;

  /// Builds a graph from 0-based pairs. Duplicates and reversed duplicates
  /// collapse; self-loops and out-of-range indices throw InputError.
  AdjacencyGraph(int n, const std::vector<Edge>& edges, std::vector<std::string> labels = {});

  int size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& degrees() const { return degrees_; }
  int degree(int i) const { return degrees_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& neighbours(int i) const { return adjacency_[static_cast<std::size_t>(i)]; }
  const std::vector<std::string>& labels() const { return labels_; }
  bool has_labels() const { return !labels_.empty(); }

  /// Label of node i, or its 1-based index when the graph is unlabelled.
  std::string label(int i) const;

  void set_labels(std::vector<std::string> labels);

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> degrees_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<std::string> labels_;
};

/// Symmetric sparse matrix in coordinate form, both triangles stored,
/// entries sorted by (row, col).
struct SparsePrecision {
  struct Entry {
    int row;
    int col;
    double value;
  };

  int n = 0;
  std::vector<Entry> entries;
  bool symmetric = true;

  Eigen::MatrixXd to_dense() const;
};

/// Parses the edge-list text format:
///
///     # comment
///     n 3
///     1 2
///     2 3
///
/// Indices are 1-based. Errors carry the offending line number.
AdjacencyGraph load_edge_list(std::string_view text);
AdjacencyGraph load_edge_list_file(const std::string& path);

/// One label per non-empty line; the count must equal the graph size.
std::vector<std::string> load_labels_file(const std::string& path, int expected);

/// Rook-adjacency rows x cols grid; node r*cols + c.
AdjacencyGraph lattice_graph(int rows, int cols);

/// Q = D - W.
SparsePrecision laplacian(const AdjacencyGraph& g);

struct ComponentLabels {
  std::vector<int> label;  // component id per node, ids in order of first appearance
  int count = 0;
};

ComponentLabels connected_components(const AdjacencyGraph& g);

/// Eigendecomposition of the Laplacian with eigenvalues ascending.
struct LaplacianSpectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  int null_dimension = 0;  // eigenvalues below kNullEigenvalueRelTol * max
};

inline constexpr double kNullEigenvalueRelTol = 1e-10;

LaplacianSpectrum laplacian_spectrum(const AdjacencyGraph& g);

/// Diagonal of the Moore-Penrose pseudo-inverse of Q. Throws
/// DisconnectedGraphError unless exactly one eigenvalue is null.
Eigen::VectorXd generalized_inverse_diag(const SparsePrecision& q);
Eigen::VectorXd generalized_inverse_diag(const LaplacianSpectrum& spectrum);

/// Full pseudo-inverse from a connected spectrum.
Eigen::MatrixXd generalized_inverse(const LaplacianSpectrum& spectrum);

/// Geometric mean of the generalized-inverse diagonal; the factor h with
/// Q* = h Q giving structured effects of roughly unit marginal variance.
double scaling_factor(const AdjacencyGraph& g);
double scaling_factor(const LaplacianSpectrum& spectrum);

}  // namespace arealmix
