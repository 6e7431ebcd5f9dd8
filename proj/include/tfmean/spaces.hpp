#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tfmean/linalg.hpp"
#include "tfmean/transforms.hpp"

namespace tfm {

/// A point of a metric tree: position `offset` along edge `edge`, measured
/// from the edge's first endpoint in length units.
struct TreePoint {
  std::size_t edge = 0;
  double offset = 0.0;
  friend bool operator==(const TreePoint&, const TreePoint&) = default;
};

/// Space-specific point payload: coordinates (Euclidean), tree position
/// (MetricTree) or symmetric positive-definite matrix (SPD).
using Point = std::variant<Vector, TreePoint, Matrix>;

/// R^d with the Euclidean norm.
class EuclideanSpace {
 public:
  explicit EuclideanSpace(int dim);
  int dim() const { return dim_; }
  void validate(const Vector& p) const;
  double distance(const Vector& q, const Vector& p) const { return (q - p).norm(); }
  Vector geodesic(const Vector& q, const Vector& p, double t) const;

 private:
  int dim_;
};

/// Finite metric tree (R-tree) given by a weighted edge list.
///
/// Vertices are labelled by strings in the input and indexed in order of
/// first appearance. Edge ids are line indices of the edge list. Points are
/// canonicalized so that every vertex has exactly one representation: the
/// lowest-id incident edge with offset 0 or the edge length.
class MetricTree {
 public:
  struct Edge {
    std::size_t u;
    std::size_t v;
    double length;
  };

  /// Builds from (u, v, length) triples over vertex indices 0..num_vertices-1.
  /// Throws ConfigError unless the graph is connected and acyclic with
  /// positive finite lengths.
  MetricTree(std::size_t num_vertices, std::vector<Edge> edges);

  /// Edge-list text: one `u v length` per line; `#` starts a comment.
  static MetricTree parse(std::istream& in);
  static MetricTree load(const std::string& path);
  /// Hub vertex 0 and `legs` edges (0, i) of the given length; edge i-1 is leg i.
  static MetricTree star(std::size_t legs, double leg_length);

  std::size_t num_vertices() const { return num_vertices_; }
  std::size_t num_edges() const { return edges_.size(); }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  const std::vector<std::string>& vertex_labels() const { return labels_; }

  /// Canonical point sitting on vertex `v`.
  TreePoint vertex_point(std::size_t v) const;
  TreePoint canonical(TreePoint p) const;
  void validate(const TreePoint& p) const;

  double vertex_distance(std::size_t a, std::size_t b) const;
  double distance(const TreePoint& a, const TreePoint& b) const;
  TreePoint geodesic(const TreePoint& a, const TreePoint& b, double t) const;

 private:
  struct Route {
    double length;
    std::size_t exit_vertex;   // vertex where the path leaves a's edge
    std::size_t entry_vertex;  // vertex where the path enters b's edge
    bool same_edge;
  };
  Route route(const TreePoint& a, const TreePoint& b) const;
  /// Vertex sequence of the unique path between two vertices.
  std::vector<std::size_t> vertex_path(std::size_t a, std::size_t b) const;
  std::size_t edge_between(std::size_t a, std::size_t b) const;

  std::size_t num_vertices_;
  std::vector<Edge> edges_;
  std::vector<std::string> labels_;
  std::vector<std::vector<std::size_t>> incident_;  // vertex -> edge ids
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> parent_edge_;
  std::vector<std::size_t> depth_;
  std::vector<double> root_distance_;
};

/// Symmetric positive-definite d x d matrices with the affine-invariant
/// metric d(A, B) = || log(A^{-1/2} B A^{-1/2}) ||_F.
class SpdSpace {
 public:
  explicit SpdSpace(int dim);
  int dim() const { return dim_; }
  void validate(const Matrix& a) const;
  double distance(const Matrix& a, const Matrix& b) const;
  Matrix geodesic(const Matrix& a, const Matrix& b, double t) const;

  /// log(A^{-1/2} B A^{-1/2}) given A^{-1/2}; its Frobenius norm is d(A, B).
  static Matrix whitened_log(const Matrix& a_inv_sqrt, const Matrix& b);

 private:
  int dim_;
};

enum class SpaceModel { Euclidean, MetricTree, Spd };

/// A Hadamard space model. Cheap to copy; immutable after construction.
class Space {
 public:
  static Space euclidean(int dim);
  static Space tree(MetricTree tree);
  static Space spd(int dim);

  /// `euclidean:<d>`, `tree:<file>`, `spd:<d>`, and `star:<legs>:<length>`
  /// for a star tree built in place.
  static Space parse(std::string_view spec);

  SpaceModel model() const;
  std::string describe() const;
  /// Euclidean or SPD dimension; number of edges for trees.
  int dim() const;

  const EuclideanSpace* as_euclidean() const { return std::get_if<EuclideanSpace>(&impl_); }
  const MetricTree* as_tree() const;
  const SpdSpace* as_spd() const { return std::get_if<SpdSpace>(&impl_); }

  /// Throws ShapeError/DomainError for a point not belonging to the space.
  void validate(const Point& p) const;
  /// Canonical representative (tree vertices snap to one encoding).
  Point canonical(const Point& p) const;
  bool same_point(const Point& a, const Point& b, double tol = 1e-12) const;

  double distance(const Point& q, const Point& p) const;
  /// Constant-speed geodesic from q (t = 0) to p (t = 1).
  Point geodesic_point(const Point& q, const Point& p, double t) const;

 private:
  using Impl = std::variant<EuclideanSpace, std::shared_ptr<const MetricTree>, SpdSpace>;
  explicit Space(Impl impl) : impl_(std::move(impl)) {}
  Impl impl_;
};

enum class GeodesicEnd { Start, Finish };

/// One-sided derivative of s -> d(y, gamma(s)) along the unit-speed geodesic
/// from q to p: right derivative at s = 0 (Start) or left derivative at
/// s = d(q, p) (Finish). Euclidean uses the closed form, other models a
/// one-sided finite difference with step 1e-6 max(1, d(q, p)).
double geodesic_directional_derivative(const Space& s, const Point& y, const Point& q,
                                       const Point& p, GeodesicEnd end);

/// Membership of y in the bow tie between knots q and p with widening w.
bool bowtie_contains(const Space& s, const Point& q, const Point& p, double w, const Point& y);

/// tau(d(y,q)) - tau(d(y,p)) - tau(d(z,q)) + tau(d(z,p)) - c d(q,p) tau'(d(y,z)),
/// with c the transform's quadruple constant. Nonpositive in Hadamard spaces.
double quadruple_gap(const Space& s, const Transform& t, const Point& q, const Point& p,
                     const Point& y, const Point& z);

/// Largest magnitude among the five terms of quadruple_gap.
double quadruple_scale(const Space& s, const Transform& t, const Point& q, const Point& p,
                       const Point& y, const Point& z);

/// d(q, mid)^2 - (d(y0,q)^2 + d(y1,q)^2)/2 + d(y0,y1)^2/4 with mid the computed
/// midpoint of y0, y1. Nonpositive in CAT(0) spaces.
double midpoint_gap(const Space& s, const Point& y0, const Point& y1, const Point& q);

}  // namespace tfm
