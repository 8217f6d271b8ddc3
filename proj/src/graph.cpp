#include "arealmix/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "arealmix/error.hpp"

namespace arealmix {

namespace {

std::string line_error(std::size_t line_no, const std::string& what) {
  return "edge list line " + std::to_string(line_no) + ": " + what;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

AdjacencyGraph::AdjacencyGraph(int n, const std::vector<Edge>& edges, std::vector<std::string> labels)
    : n_(n) {
  if (n <= 0) throw InputError("graph must have at least one node");
  edges_.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw InputError("edge (" + std::to_string(a + 1) + ", " + std::to_string(b + 1) + ") out of range");
    if (a == b) throw InputError("self-loop on node " + std::to_string(a + 1));
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  degrees_.assign(static_cast<std::size_t>(n), 0);
  adjacency_.assign(static_cast<std::size_t>(n), {});
  for (auto [a, b] : edges_) {
    ++degrees_[static_cast<std::size_t>(a)];
    ++degrees_[static_cast<std::size_t>(b)];
    adjacency_[static_cast<std::size_t>(a)].push_back(b);
    adjacency_[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
  set_labels(std::move(labels));
}

std::string AdjacencyGraph::label(int i) const {
  if (labels_.empty()) return std::to_string(i + 1);
  return labels_[static_cast<std::size_t>(i)];
}

void AdjacencyGraph::set_labels(std::vector<std::string> labels) {
  if (!labels.empty() && static_cast<int>(labels.size()) != n_)
    throw InputError("label count " + std::to_string(labels.size()) + " does not match n = " +
                     std::to_string(n_));
  labels_ = std::move(labels);
}

Eigen::MatrixXd SparsePrecision::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : entries) m(e.row, e.col) += e.value;
  return m;
}

AdjacencyGraph load_edge_list(std::string_view text) {
  int n = -1;
  std::vector<Edge> edges;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto raw = text.substr(pos, end - pos);
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    auto line = trim(raw);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    std::istringstream in{std::string(line)};
    if (line.front() == 'n') {
      std::string tag;
      long long count = 0;
      std::string rest;
      if (!(in >> tag >> count) || tag != "n" || (in >> rest))
        throw InputError(line_error(line_no, "malformed header, expected \"n <count>\""));
      if (n != -1) throw InputError(line_error(line_no, "duplicate header"));
      if (count <= 0) throw InputError(line_error(line_no, "node count must be positive"));
      n = static_cast<int>(count);
      continue;
    }
    if (n == -1) throw InputError(line_error(line_no, "edge before \"n <count>\" header"));
    long long a = 0, b = 0;
    std::string rest;
    if (!(in >> a >> b) || (in >> rest)) throw InputError(line_error(line_no, "expected \"i j\""));
    if (a < 1 || b < 1 || a > n || b > n)
      throw InputError(line_error(line_no, "index out of range 1.." + std::to_string(n)));
    if (a == b) throw InputError(line_error(line_no, "self-loop on node " + std::to_string(a)));
    edges.emplace_back(static_cast<int>(a - 1), static_cast<int>(b - 1));
  }
  if (n == -1) throw InputError("edge list has no \"n <count>\" header");
  return AdjacencyGraph(n, edges);
}

AdjacencyGraph load_edge_list_file(const std::string& path) { return load_edge_list(read_file(path)); }

std::vector<std::string> load_labels_file(const std::string& path, int expected) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (!t.empty()) labels.emplace_back(t);
  }
  if (static_cast<int>(labels.size()) != expected)
    throw InputError(path + ": expected " + std::to_string(expected) + " labels, found " +
                     std::to_string(labels.size()));
  return labels;
}

AdjacencyGraph lattice_graph(int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw InputError("lattice dimensions must be positive");
  std::vector<Edge> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int i = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(i, i + 1);
      if (r + 1 < rows) edges.emplace_back(i, i + cols);
    }
  }
  return AdjacencyGraph(rows * cols, edges);
}

SparsePrecision laplacian(const AdjacencyGraph& g) {
  SparsePrecision q;
  q.n = g.size();
  q.entries.reserve(static_cast<std::size_t>(g.size()) + 2 * g.edges().size());
  for (int i = 0; i < g.size(); ++i) {
    bool diag_done = false;
    for (int j : g.neighbours(i)) {
      if (!diag_done && j > i) {
        q.entries.push_back({i, i, static_cast<double>(g.degree(i))});
        diag_done = true;
      }
      q.entries.push_back({i, j, -1.0});
    }
    if (!diag_done) q.entries.push_back({i, i, static_cast<double>(g.degree(i))});
  }
  return q;
}

ComponentLabels connected_components(const AdjacencyGraph& g) {
  ComponentLabels out;
  out.label.assign(static_cast<std::size_t>(g.size()), -1);
  std::queue<int> frontier;
  for (int s = 0; s < g.size(); ++s) {
    if (out.label[static_cast<std::size_t>(s)] != -1) continue;
    out.label[static_cast<std::size_t>(s)] = out.count;
    frontier.push(s);
    while (!frontier.empty()) {
      int v = frontier.front();
      frontier.pop();
      for (int w : g.neighbours(v)) {
        if (out.label[static_cast<std::size_t>(w)] == -1) {
          out.label[static_cast<std::size_t>(w)] = out.count;
          frontier.push(w);
        }
      }
    }
    ++out.count;
  }
  return out;
}

namespace {

LaplacianSpectrum spectrum_of(const Eigen::MatrixXd& q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(q);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  LaplacianSpectrum s;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  const double cutoff = kNullEigenvalueRelTol * std::max(s.eigenvalues.maxCoeff(), 0.0);
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k)
    if (s.eigenvalues[k] < cutoff) ++s.null_dimension;
  // A single isolated node has Q = 0; its one eigenvalue is null.
  if (s.eigenvalues.maxCoeff() <= 0.0) s.null_dimension = static_cast<int>(s.eigenvalues.size());
  return s;
}

void require_connected(const LaplacianSpectrum& s) {
  if (s.eigenvalues.size() < 2) throw InputError("generalized inverse needs at least two nodes");
  if (s.null_dimension != 1)
    throw DisconnectedGraphError(
        "graph Laplacian has " + std::to_string(s.null_dimension) +
        " null eigenvalues; the graph is disconnected. Split it into connected components and "
        "handle each component separately");
}

}  // namespace

LaplacianSpectrum laplacian_spectrum(const AdjacencyGraph& g) { return spectrum_of(laplacian(g).to_dense()); }

Eigen::VectorXd generalized_inverse_diag(const LaplacianSpectrum& s) {
  require_connected(s);
  const Eigen::Index n = s.eigenvalues.size();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 1; k < n; ++k)
    diag += s.eigenvectors.col(k).cwiseAbs2() / s.eigenvalues[k];
  return diag;
}

Eigen::VectorXd generalized_inverse_diag(const SparsePrecision& q) {
  return generalized_inverse_diag(spectrum_of(q.to_dense()));
}

Eigen::MatrixXd generalized_inverse(const LaplacianSpectrum& s) {
  require_connected(s);
  const Eigen::Index n = s.eigenvalues.size();
  auto v = s.eigenvectors.rightCols(n - 1);
  Eigen::VectorXd inv = s.eigenvalues.tail(n - 1).cwiseInverse();
  return v * inv.asDiagonal() * v.transpose();
}

double scaling_factor(const LaplacianSpectrum& s) {
  Eigen::VectorXd diag = generalized_inverse_diag(s);
  return std::exp(diag.array().log().mean());
}

double scaling_factor(const AdjacencyGraph& g) { return scaling_factor(laplacian_spectrum(g)); }

}  // namespace arealmix
