#pragma once

// Directed interaction graphs: Laplacians, reachability and spectral
// structure, and switching schedules of graphs.
//
// Convention: adjacency(i, j) = a_ij > 0 iff agent i receives information
// from agent j, i.e. the edge runs j -> i.

#include "elc/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace elc {

template <typename Scalar>
class DirectedGraph {
 public:
  using Matrix = MatX<Scalar>;

  DirectedGraph() = default;

  /// Validates the adjacency matrix and derives the Laplacian.
  explicit DirectedGraph(Matrix adjacency) : adjacency_(std::move(adjacency)) {
    if (adjacency_.rows() != adjacency_.cols()) throw InvalidInput("adjacency must be square");
    const Eigen::Index n = adjacency_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const Scalar a = adjacency_(i, j);
        if (!std::isfinite(static_cast<double>(a))) throw InvalidInput("adjacency entries must be finite");
        if (a < Scalar(0)) throw InvalidInput("adjacency entries must be nonnegative");
        if (i == j && a != Scalar(0)) throw InvalidInput("self edges are not allowed (nonzero diagonal)");
      }
    }
    laplacian_ = -adjacency_;
    laplacian_.diagonal() = adjacency_.rowwise().sum();
  }

  Eigen::Index size() const { return adjacency_.rows(); }
  const Matrix& adjacency() const { return adjacency_; }
  const Matrix& laplacian() const { return laplacian_; }

  /// Weight of the edge from -> to (0 when absent).
  Scalar weight(Eigen::Index from, Eigen::Index to) const { return adjacency_(to, from); }
  bool has_edge(Eigen::Index from, Eigen::Index to) const { return adjacency_(to, from) > Scalar(0); }

  bool operator==(const DirectedGraph& other) const { return adjacency_ == other.adjacency_; }

 private:
  Matrix adjacency_;
  Matrix laplacian_;
};

template <typename Scalar>
DirectedGraph<Scalar> build_laplacian(const MatX<Scalar>& adjacency) {
  return DirectedGraph<Scalar>(adjacency);
}

/// Graph whose edge set is the union of both inputs; shared edges keep the larger weight.
template <typename Scalar>
DirectedGraph<Scalar> edge_union(const DirectedGraph<Scalar>& a, const DirectedGraph<Scalar>& b) {
  if (a.size() != b.size()) throw InvalidInput("edge_union: graphs differ in size");
  return DirectedGraph<Scalar>(a.adjacency().cwiseMax(b.adjacency()));
}

/// Subgraph induced by `nodes` (in the given order).
template <typename Scalar>
DirectedGraph<Scalar> induced_subgraph(const DirectedGraph<Scalar>& g, const std::vector<Eigen::Index>& nodes) {
  MatX<Scalar> sub(nodes.size(), nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r)
    for (std::size_t c = 0; c < nodes.size(); ++c) sub(r, c) = g.adjacency()(nodes[r], nodes[c]);
  return DirectedGraph<Scalar>(sub);
}

namespace detail {

/// Threshold for "positive real part" decisions on a dense matrix.
template <typename Derived>
typename Derived::RealScalar eig_tolerance(const Eigen::MatrixBase<Derived>& m) {
  return typename Derived::RealScalar(1e-9) * m.norm();
}

template <typename Derived>
Eigen::Matrix<std::complex<typename Derived::RealScalar>, Eigen::Dynamic, 1> eigenvalues(
    const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Derived::RealScalar;
  Eigen::EigenSolver<MatX<Real>> solver(m.template cast<Real>().eval(), false);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigenvalue computation did not converge");
  return solver.eigenvalues();
}

template <typename Derived>
typename Derived::RealScalar min_real_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() == 0) return std::numeric_limits<typename Derived::RealScalar>::infinity();
  return eigenvalues(m).real().minCoeff();
}

}  // namespace detail

/// Strongly connected components, numbered in reverse topological order of the
/// condensation (Tarjan).
struct SccDecomposition {
  std::vector<int> component;  // component id per node
  int count = 0;
};

template <typename Scalar>
SccDecomposition strongly_connected_components(const DirectedGraph<Scalar>& g) {
  const int n = static_cast<int>(g.size());
  std::vector<std::vector<int>> out(n);
  for (int to = 0; to < n; ++to)
    for (int from = 0; from < n; ++from)
      if (g.has_edge(from, to)) out[from].push_back(to);

  SccDecomposition result;
  result.component.assign(n, -1);
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<char> on_stack(n, 0);
  int next_index = 0;

  // Iterative DFS; each frame is (node, next out-edge position).
  std::vector<std::pair<int, std::size_t>> frames;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      if (pos < out[v].size()) {
        const int w = out[v][pos++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const int done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
      if (low[done] == index[done]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          result.component[w] = result.count;
        } while (w != done);
        ++result.count;
      }
    }
  }
  return result;
}

/// Components of the condensation with no incoming edges from other components.
template <typename Scalar>
std::vector<int> source_components(const DirectedGraph<Scalar>& g, const SccDecomposition& scc) {
  std::vector<char> has_incoming(scc.count, 0);
  const Eigen::Index n = g.size();
  for (Eigen::Index to = 0; to < n; ++to)
    for (Eigen::Index from = 0; from < n; ++from)
      if (g.has_edge(from, to) && scc.component[from] != scc.component[to]) has_incoming[scc.component[to]] = 1;
  std::vector<int> sources;
  for (int c = 0; c < scc.count; ++c)
    if (!has_incoming[c]) sources.push_back(c);
  return sources;
}

template <typename Scalar>
bool is_strongly_connected(const DirectedGraph<Scalar>& g) {
  if (g.size() == 0) return false;
  return strongly_connected_components(g).count == 1;
}

/// Reachability test: exactly one source component in the condensation.
template <typename Scalar>
bool contains_spanning_tree(const DirectedGraph<Scalar>& g) {
  if (g.size() == 0) return false;
  return source_components(g, strongly_connected_components(g)).size() == 1;
}

/// Spectral test: simple zero Laplacian eigenvalue, all others in the open right half plane.
template <typename Scalar>
bool contains_spanning_tree_spectral(const DirectedGraph<Scalar>& g) {
  if (g.size() == 0) return false;
  if (g.size() == 1) return true;
  const auto tol = detail::eig_tolerance(g.laplacian());
  int zeros = 0;
  for (const auto& lambda : detail::eigenvalues(g.laplacian())) {
    if (std::abs(lambda) <= tol) {
      ++zeros;
    } else if (lambda.real() <= tol) {
      return false;
    }
  }
  return zeros == 1;
}

/// Nodes of the unique root component, ascending. Throws when no spanning tree exists.
template <typename Scalar>
std::vector<Eigen::Index> root_nodes(const DirectedGraph<Scalar>& g) {
  const auto scc = strongly_connected_components(g);
  const auto sources = source_components(g, scc);
  if (g.size() == 0 || sources.size() != 1)
    throw GraphError("graph has no directed spanning tree (root component is not unique)");
  std::vector<Eigen::Index> roots;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (scc.component[i] == sources.front()) roots.push_back(i);
  return roots;
}

template <typename Scalar>
struct LeftNullVector {
  VecX<Scalar> xi;
};

/// Normalized nonnegative xi with xi^T L = 0. Non-root entries are exactly zero.
template <typename Scalar>
LeftNullVector<Scalar> left_null_vector(const DirectedGraph<Scalar>& g) {
  if (!contains_spanning_tree(g))
    throw GraphError("left_null_vector: no directed spanning tree, null vector is not unique");
  const Eigen::Index n = g.size();
  const MatX<Scalar> lt = g.laplacian().transpose();
  Eigen::JacobiSVD<MatX<Scalar>> svd(lt, Eigen::ComputeFullV);
  VecX<Scalar> xi = svd.matrixV().col(n - 1);
  xi /= xi.sum();

  std::vector<char> is_root(n, 0);
  for (auto r : root_nodes(g)) is_root[r] = 1;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!is_root[i] || xi(i) < Scalar(0)) xi(i) = Scalar(0);
  xi /= xi.sum();
  return {std::move(xi)};
}

/// Orthonormal complement of the consensus direction: Q 1 = 0, Q Q^T = I.
template <typename Scalar>
struct QTransform {
  Eigen::Index n = 0;
  MatX<Scalar> q;
};

template <typename Scalar>
QTransform<Scalar> q_transform(Eigen::Index n) {
  using std::sqrt;
  if (n < 2) throw InvalidInput("q_transform: n must be at least 2");
  const Scalar nn = Scalar(n);
  const Scalar v = (nn - sqrt(nn)) / (nn * (nn - Scalar(1)));
  MatX<Scalar> q = MatX<Scalar>::Constant(n - 1, n, -v);
  q.col(0).setConstant(Scalar(-1) + (nn - Scalar(1)) * v);
  for (Eigen::Index r = 0; r < n - 1; ++r) q(r, r + 1) = Scalar(1) - v;
  return {n, std::move(q)};
}

/// True iff every eigenvalue of Q diag(alpha) L Q^T has positive real part.
template <typename Scalar>
bool q_spectrum_check(const DirectedGraph<Scalar>& g, const VecX<Scalar>& alpha) {
  const Eigen::Index n = g.size();
  if (alpha.size() != n) throw InvalidInput("q_spectrum_check: alpha has wrong length");
  if ((alpha.array() <= Scalar(0)).any()) throw InvalidInput("q_spectrum_check: alpha must be positive");
  if (n == 1) return true;
  const auto q = q_transform<Scalar>(n).q;
  const MatX<Scalar> reduced = q * alpha.asDiagonal() * g.laplacian() * q.transpose();
  return detail::min_real_eigenvalue(reduced) > detail::eig_tolerance(reduced);
}

/// a(B) = min { x^T B x : x^T varsigma = 0, |x| = 1 } with B = Xi L + L^T Xi.
/// Evaluated as the smallest eigenvalue of B restricted to the complement of varsigma.
template <typename Scalar>
Scalar connectivity_measure(const DirectedGraph<Scalar>& g, const VecX<Scalar>& varsigma) {
  const Eigen::Index n = g.size();
  if (varsigma.size() != n) throw InvalidInput("connectivity_measure: varsigma has wrong length");
  if ((varsigma.array() <= Scalar(0)).any()) throw InvalidInput("connectivity_measure: varsigma must be positive");
  if (n < 2) throw InvalidInput("connectivity_measure: needs at least two agents");
  if (!is_strongly_connected(g)) throw GraphError("connectivity_measure: graph is not strongly connected");

  const auto xi = left_null_vector(g).xi;
  const MatX<Scalar> lap = g.laplacian();
  const MatX<Scalar> b = xi.asDiagonal() * lap + lap.transpose() * xi.asDiagonal();

  const MatX<Scalar> column = varsigma;
  Eigen::HouseholderQR<MatX<Scalar>> qr(column);
  const MatX<Scalar> basis = MatX<Scalar>(qr.householderQ()).rightCols(n - 1);
  const MatX<Scalar> projected = basis.transpose() * b * basis;
  Eigen::SelfAdjointEigenSolver<MatX<Scalar>> solver(projected, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

class NotZMatrixError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class SingularMMatrixError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Smallest eigenvalue of diag(w) A + A^T diag(w).
template <typename Scalar>
Scalar m_matrix_certificate(const MatX<Scalar>& a, const VecX<Scalar>& w) {
  const MatX<Scalar> b = w.asDiagonal() * a + a.transpose() * w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatX<Scalar>> solver(b, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// Positive diagonal weights w with diag(w) A + A^T diag(w) positive definite,
/// for a nonsingular M-matrix A. Candidate w_i = y_i / x_i with A x = 1, A^T y = 1;
/// the result is only returned after its certificate passes.
template <typename Scalar>
VecX<Scalar> m_matrix_weights(const MatX<Scalar>& a) {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) throw InvalidInput("m_matrix_weights: matrix must be square and nonempty");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && a(i, j) > Scalar(0)) throw NotZMatrixError("m_matrix_weights: positive off-diagonal entry");
  const Scalar tol = detail::eig_tolerance(a);
  if (!(detail::min_real_eigenvalue(a) > tol))
    throw SingularMMatrixError("m_matrix_weights: not a nonsingular M-matrix (eigenvalue with nonpositive real part)");

  Eigen::PartialPivLU<MatX<Scalar>> lu(a);
  const VecX<Scalar> ones = VecX<Scalar>::Ones(n);
  const VecX<Scalar> x = lu.solve(ones);
  const VecX<Scalar> y = lu.transpose().solve(ones);

  auto certified = [&](const VecX<Scalar>& w) {
    return (w.array() > Scalar(0)).all() && m_matrix_certificate(a, w) > tol;
  };
  VecX<Scalar> w = y.cwiseQuotient(x);
  if (certified(w)) return w;

  // Fallback: shift the numerator until the certificate holds.
  const Scalar scale = y.cwiseAbs().mean();
  for (Scalar eps : {Scalar(1e-6), Scalar(1e-3), Scalar(1e-1), Scalar(1), Scalar(10)}) {
    w = (y.array() + eps * scale).matrix().cwiseQuotient(x.cwiseAbs());
    if (certified(w)) return w;
  }
  throw SingularMMatrixError("m_matrix_weights: no certified diagonal weight found");
}

/// Node ordering exposing the lower block-triangular Laplacian [[L11, 0], [L21, L22]].
template <typename Scalar>
struct FrobeniusForm {
  std::vector<Eigen::Index> permutation;  // permutation[k] = original node placed at position k
  Eigen::Index root_count = 0;
  MatX<Scalar> laplacian;  // permuted Laplacian
};

template <typename Scalar>
FrobeniusForm<Scalar> frobenius_reorder(const DirectedGraph<Scalar>& g) {
  const Eigen::Index n = g.size();
  const auto roots = root_nodes(g);
  FrobeniusForm<Scalar> form;
  form.permutation = roots;
  form.root_count = static_cast<Eigen::Index>(roots.size());
  std::vector<char> is_root(n, 0);
  for (auto r : roots) is_root[r] = 1;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!is_root[i]) form.permutation.push_back(i);

  form.laplacian.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) form.laplacian(r, c) = g.laplacian()(form.permutation[r], form.permutation[c]);

  const Eigen::Index r1 = form.root_count;
  if ((form.laplacian.topRightCorner(r1, n - r1).array() != Scalar(0)).any())
    throw GraphError("frobenius_reorder: root block has incoming edges from followers");
  if (!is_strongly_connected(induced_subgraph(g, roots)))
    throw GraphError("frobenius_reorder: root block is not strongly connected");
  if (n > r1) {
    const MatX<Scalar> l22 = form.laplacian.bottomRightCorner(n - r1, n - r1);
    if (!(detail::min_real_eigenvalue(l22) > detail::eig_tolerance(l22)))
      throw GraphError("frobenius_reorder: follower block is not a nonsingular M-matrix");
  }
  return form;
}

/// Piecewise-constant sequence of graphs; right-continuous in time.
template <typename Scalar>
class SwitchingSchedule {
 public:
  SwitchingSchedule(std::vector<DirectedGraph<Scalar>> graphs, std::vector<Scalar> dwell_times, Scalar min_dwell,
                    bool cyclic)
      : graphs_(std::move(graphs)), dwell_(std::move(dwell_times)), min_dwell_(min_dwell), cyclic_(cyclic) {
    if (graphs_.empty()) throw InvalidInput("schedule needs at least one graph");
    if (graphs_.size() != dwell_.size()) throw InvalidInput("schedule needs one dwell time per graph");
    if (!(min_dwell_ > Scalar(0))) throw InvalidInput("minimum dwell time must be positive");
    for (const auto& g : graphs_)
      if (g.size() != graphs_.front().size()) throw InvalidInput("schedule graphs differ in size");
    for (Scalar d : dwell_)
      if (!(d >= min_dwell_) || !std::isfinite(static_cast<double>(d)))
        throw InvalidInput("dwell time shorter than the minimum dwell time");
    starts_.resize(dwell_.size() + 1);
    starts_[0] = Scalar(0);
    std::partial_sum(dwell_.begin(), dwell_.end(), starts_.begin() + 1);
  }

  /// One-segment schedule holding `g` forever.
  static SwitchingSchedule fixed(DirectedGraph<Scalar> g) {
    return SwitchingSchedule({std::move(g)}, {Scalar(1)}, Scalar(1), false);
  }

  Eigen::Index size() const { return graphs_.front().size(); }
  const std::vector<DirectedGraph<Scalar>>& graphs() const { return graphs_; }
  const std::vector<Scalar>& dwell_times() const { return dwell_; }
  Scalar min_dwell() const { return min_dwell_; }
  bool cyclic() const { return cyclic_; }
  Scalar period() const { return starts_.back(); }

  struct Location {
    std::size_t segment;
    Scalar end;  // absolute end time of this occurrence of the segment (inf for a held last graph)
  };

  /// Segment active at time t (start <= t < end).
  Location locate(Scalar t) const {
    if (!std::isfinite(static_cast<double>(t)) || t < Scalar(0))
      throw InvalidInput("schedule lookup outside the defined time range");
    const std::size_t m = dwell_.size();
    Scalar base(0);
    Scalar tau = t;
    if (cyclic_) {
      using std::floor;
      base = floor(t / period()) * period();
      tau = t - base;
      if (tau >= period()) {
        base += period();
        tau -= period();
      }
    } else if (t >= starts_[m - 1]) {
      return {m - 1, std::numeric_limits<Scalar>::infinity()};
    }
    const Scalar snap = Scalar(1e-12) * std::max(Scalar(1), period());
    for (std::size_t k = 0; k < m; ++k)
      if (tau < starts_[k + 1] - snap) return {k, base + starts_[k + 1]};
    return {0, base + period() + starts_[1]};
  }

  const DirectedGraph<Scalar>& graph_at(Scalar t) const { return graphs_[locate(t).segment]; }

 private:
  std::vector<DirectedGraph<Scalar>> graphs_;
  std::vector<Scalar> dwell_;
  std::vector<Scalar> starts_;
  Scalar min_dwell_;
  bool cyclic_;
};

/// Whether the timeline splits into contiguous intervals of length <= window whose
/// edge-union graphs each contain a spanning tree. Intervals close as soon as the
/// accumulated union has a tree.
template <typename Scalar>
bool uniformly_jointly_connected(const SwitchingSchedule<Scalar>& s, Scalar window) {
  if (!(window > Scalar(0))) throw InvalidInput("window must be positive");
  const auto& graphs = s.graphs();
  const Scalar last_start = s.period() - s.dwell_times().back();
  const Scalar tol = Scalar(1e-9) * std::max(Scalar(1), s.period());
  std::vector<Scalar> seen_phases;
  Scalar start(0);
  const std::size_t max_intervals = 1000 + 10 * graphs.size();
  for (std::size_t iter = 0; iter < max_intervals; ++iter) {
    if (!s.cyclic() && start >= last_start - tol) return contains_spanning_tree(graphs.back());
    if (s.cyclic()) {
      using std::fmod;
      const Scalar phase = fmod(start, s.period());
      for (Scalar p : seen_phases)
        if (std::abs(p - phase) <= tol || std::abs(std::abs(p - phase) - s.period()) <= tol) return true;
      seen_phases.push_back(phase);
    }
    MatX<Scalar> adjacency = MatX<Scalar>::Zero(s.size(), s.size());
    Scalar cursor = start;
    while (true) {
      const auto loc = s.locate(cursor);
      adjacency = adjacency.cwiseMax(graphs[loc.segment].adjacency());
      if (contains_spanning_tree(DirectedGraph<Scalar>(adjacency))) {
        start = std::min(loc.end, start + window);
        break;
      }
      if (loc.end >= start + window - tol) return false;
      cursor = loc.end;
    }
  }
  // No failing interval among the first max_intervals; the schedule repeats, so accept.
  return true;
}

}  // namespace elc
