#include "tfmean/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include "parse_util.hpp"

namespace tfm {

namespace {

constexpr double kSnapTol = 1e-12;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

void require_unit_interval(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("geodesic parameter t must lie in [0, 1]");
}

}  // namespace

// ---------------------------------------------------------------- Euclidean

EuclideanSpace::EuclideanSpace(int dim) : dim_(dim) {
  if (dim < 1) throw ConfigError("euclidean dimension must be >= 1");
}

void EuclideanSpace::validate(const Vector& p) const {
  if (p.size() != dim_) {
    throw ShapeError("euclidean point has " + std::to_string(p.size()) + " coordinates, expected " +
                     std::to_string(dim_));
  }
  if (!p.allFinite()) throw DomainError("euclidean point has non-finite coordinates");
}

Vector EuclideanSpace::geodesic(const Vector& q, const Vector& p, double t) const {
  require_unit_interval(t);
  if (t == 0.0) return q;
  if (t == 1.0) return p;
  return q + t * (p - q);
}

// ---------------------------------------------------------------- MetricTree

MetricTree::MetricTree(std::size_t num_vertices, std::vector<Edge> edges)
    : num_vertices_(num_vertices), edges_(std::move(edges)) {
  if (num_vertices_ < 2) throw ConfigError("metric tree needs at least two vertices");
  if (edges_.size() + 1 != num_vertices_) {
    throw ConfigError("metric tree must have exactly num_vertices - 1 edges");
  }
  incident_.assign(num_vertices_, {});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& ed = edges_[e];
    if (ed.u >= num_vertices_ || ed.v >= num_vertices_ || ed.u == ed.v) {
      throw ConfigError("metric tree edge " + std::to_string(e) + " has invalid endpoints");
    }
    if (!(ed.length > 0.0) || !std::isfinite(ed.length)) {
      throw ConfigError("metric tree edge " + std::to_string(e) + " needs a positive finite length");
    }
    incident_[ed.u].push_back(e);
    incident_[ed.v].push_back(e);
  }
  labels_.resize(num_vertices_);
  for (std::size_t v = 0; v < num_vertices_; ++v) labels_[v] = std::to_string(v);

  parent_.assign(num_vertices_, kNone);
  parent_edge_.assign(num_vertices_, kNone);
  depth_.assign(num_vertices_, 0);
  root_distance_.assign(num_vertices_, 0.0);
  std::vector<bool> seen(num_vertices_, false);
  std::queue<std::size_t> queue;
  queue.push(0);
  seen[0] = true;
  std::size_t visited = 1;
  while (!queue.empty()) {
    const auto x = queue.front();
    queue.pop();
    for (auto e : incident_[x]) {
      const auto y = edges_[e].u == x ? edges_[e].v : edges_[e].u;
      if (seen[y]) {
        if (parent_edge_[x] != e) throw ConfigError("metric tree contains a cycle");
        continue;
      }
      seen[y] = true;
      ++visited;
      parent_[y] = x;
      parent_edge_[y] = e;
      depth_[y] = depth_[x] + 1;
      root_distance_[y] = root_distance_[x] + edges_[e].length;
      queue.push(y);
    }
  }
  if (visited != num_vertices_) throw ConfigError("metric tree is not connected");
}

MetricTree MetricTree::parse(std::istream& in) {
  std::map<std::string, std::size_t> index;
  std::vector<std::string> labels;
  std::vector<Edge> edges;
  auto vertex = [&](const std::string& label) {
    auto [it, inserted] = index.emplace(label, labels.size());
    if (inserted) labels.push_back(label);
    return it->second;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string u, v, len, extra;
    if (!(ls >> u >> v >> len) || (ls >> extra)) {
      throw ConfigError("tree edge list line " + std::to_string(lineno) + ": expected 'u v length'");
    }
    const double length = detail::parse_double(len, "edge length");
    const auto a = vertex(u);
    const auto b = vertex(v);
    edges.push_back({a, b, length});
  }
  MetricTree tree(labels.size(), std::move(edges));
  tree.labels_ = std::move(labels);
  return tree;
}

MetricTree MetricTree::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tree file '" + path + "'");
  return parse(in);
}

MetricTree MetricTree::star(std::size_t legs, double leg_length) {
  if (legs < 1) throw ConfigError("star tree needs at least one leg");
  std::vector<Edge> edges;
  edges.reserve(legs);
  for (std::size_t i = 1; i <= legs; ++i) edges.push_back({0, i, leg_length});
  return MetricTree(legs + 1, std::move(edges));
}

TreePoint MetricTree::vertex_point(std::size_t v) const {
  const auto e = *std::min_element(incident_.at(v).begin(), incident_.at(v).end());
  return {e, edges_[e].u == v ? 0.0 : edges_[e].length};
}

TreePoint MetricTree::canonical(TreePoint p) const {
  const auto& ed = edges_.at(p.edge);
  if (p.offset <= kSnapTol) return vertex_point(ed.u);
  if (p.offset >= ed.length - kSnapTol) return vertex_point(ed.v);
  return p;
}

void MetricTree::validate(const TreePoint& p) const {
  if (p.edge >= edges_.size()) throw ShapeError("tree point refers to unknown edge " + std::to_string(p.edge));
  const double len = edges_[p.edge].length;
  if (!std::isfinite(p.offset) || p.offset < -kSnapTol || p.offset > len + kSnapTol) {
    throw DomainError("tree point offset outside [0, edge length]");
  }
}

double MetricTree::vertex_distance(std::size_t a, std::size_t b) const {
  const double ra = root_distance_.at(a);
  const double rb = root_distance_.at(b);
  while (depth_[a] > depth_[b]) a = parent_[a];
  while (depth_[b] > depth_[a]) b = parent_[b];
  while (a != b) {
    a = parent_[a];
    b = parent_[b];
  }
  return ra + rb - 2.0 * root_distance_[a];
}

std::vector<std::size_t> MetricTree::vertex_path(std::size_t a, std::size_t b) const {
  std::vector<std::size_t> up;
  std::vector<std::size_t> down;
  while (depth_[a] > depth_[b]) {
    up.push_back(a);
    a = parent_[a];
  }
  while (depth_[b] > depth_[a]) {
    down.push_back(b);
    b = parent_[b];
  }
  while (a != b) {
    up.push_back(a);
    down.push_back(b);
    a = parent_[a];
    b = parent_[b];
  }
  up.push_back(a);
  up.insert(up.end(), down.rbegin(), down.rend());
  return up;
}

std::size_t MetricTree::edge_between(std::size_t a, std::size_t b) const {
  if (parent_[a] == b) return parent_edge_[a];
  return parent_edge_[b];
}

MetricTree::Route MetricTree::route(const TreePoint& a, const TreePoint& b) const {
  if (a.edge == b.edge) return {std::abs(a.offset - b.offset), kNone, kNone, true};
  const auto& ea = edges_[a.edge];
  const auto& eb = edges_[b.edge];
  const std::size_t xs[2] = {ea.u, ea.v};
  const double xo[2] = {a.offset, ea.length - a.offset};
  const std::size_t ys[2] = {eb.u, eb.v};
  const double yo[2] = {b.offset, eb.length - b.offset};
  Route best{std::numeric_limits<double>::infinity(), kNone, kNone, false};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double len = xo[i] + vertex_distance(xs[i], ys[j]) + yo[j];
      if (len < best.length) best = {len, xs[i], ys[j], false};
    }
  }
  return best;
}

double MetricTree::distance(const TreePoint& a, const TreePoint& b) const {
  return route(canonical(a), canonical(b)).length;
}

TreePoint MetricTree::geodesic(const TreePoint& a0, const TreePoint& b0, double t) const {
  require_unit_interval(t);
  const auto a = canonical(a0);
  const auto b = canonical(b0);
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  const Route r = route(a, b);
  double s = t * r.length;
  if (r.same_edge) return canonical({a.edge, a.offset + t * (b.offset - a.offset)});

  const auto& ea = edges_[a.edge];
  const double off_a = r.exit_vertex == ea.u ? a.offset : ea.length - a.offset;
  if (s <= off_a) {
    return canonical({a.edge, r.exit_vertex == ea.u ? a.offset - s : a.offset + s});
  }
  s -= off_a;
  const auto path = vertex_path(r.exit_vertex, r.entry_vertex);
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const auto e = edge_between(path[k], path[k + 1]);
    const auto& ed = edges_[e];
    if (s <= ed.length) return canonical({e, ed.u == path[k] ? s : ed.length - s});
    s -= ed.length;
  }
  const auto& eb = edges_[b.edge];
  const double off_b = r.entry_vertex == eb.u ? b.offset : eb.length - b.offset;
  s = std::min(s, off_b);
  return canonical({b.edge, r.entry_vertex == eb.u ? s : eb.length - s});
}

// ---------------------------------------------------------------- SPD

SpdSpace::SpdSpace(int dim) : dim_(dim) {
  if (dim < 1) throw ConfigError("spd dimension must be >= 1");
}

void SpdSpace::validate(const Matrix& a) const {
  if (a.rows() != dim_ || a.cols() != dim_) {
    throw ShapeError("spd point must be " + std::to_string(dim_) + "x" + std::to_string(dim_));
  }
  if (!a.allFinite()) throw DomainError("spd point has non-finite entries");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
    throw DomainError("spd point is not symmetric");
  }
  const auto e = jacobi_eigen(a);
  if (!(e.values.minCoeff() > 1e-12)) throw DomainError("spd point is not positive definite");
}

Matrix SpdSpace::whitened_log(const Matrix& a_inv_sqrt, const Matrix& b) {
  return sym_log(symmetrize(a_inv_sqrt * b * a_inv_sqrt));
}

double SpdSpace::distance(const Matrix& a, const Matrix& b) const {
  const Matrix w = sym_inv_sqrt(a);
  const auto e = jacobi_eigen(symmetrize(w * b * w));
  double s = 0.0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    if (!(e.values(i) > 0.0)) throw NumericError("spd distance: lost positive definiteness");
    const double l = std::log(e.values(i));
    s += l * l;
  }
  return std::sqrt(s);
}

Matrix SpdSpace::geodesic(const Matrix& a, const Matrix& b, double t) const {
  require_unit_interval(t);
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  const auto ea = jacobi_eigen(a);
  const Matrix root = sym_apply(ea, [](double x) { return std::sqrt(x); });
  const Matrix inv_root = sym_apply(ea, [](double x) { return 1.0 / std::sqrt(x); });
  const Matrix c = sym_pow(symmetrize(inv_root * b * inv_root), t);
  return symmetrize(root * c * root);
}

// ---------------------------------------------------------------- Space

Space Space::euclidean(int dim) { return Space(EuclideanSpace(dim)); }
Space Space::tree(MetricTree tree) { return Space(std::make_shared<const MetricTree>(std::move(tree))); }
Space Space::spd(int dim) { return Space(SpdSpace(dim)); }

Space Space::parse(std::string_view spec) {
  const auto trimmed = detail::trim(spec);
  const auto colon = trimmed.find(':');
  if (colon == std::string_view::npos) throw ConfigError("bad space spec '" + std::string(spec) + "'");
  const auto name = trimmed.substr(0, colon);
  const auto rest = trimmed.substr(colon + 1);
  if (name == "euclidean") return euclidean(static_cast<int>(detail::parse_uint(rest, "dimension")));
  if (name == "spd") return spd(static_cast<int>(detail::parse_uint(rest, "dimension")));
  if (name == "tree") return tree(MetricTree::load(std::string(rest)));
  if (name == "star") {
    const auto parts = detail::split(rest, ':');
    if (parts.size() != 2) throw ConfigError("star space spec is star:<legs>:<length>");
    return tree(MetricTree::star(detail::parse_uint(parts[0], "legs"),
                                 detail::parse_double(parts[1], "leg length")));
  }
  throw ConfigError("unknown space '" + std::string(spec) + "'");
}

const MetricTree* Space::as_tree() const {
  const auto* p = std::get_if<std::shared_ptr<const MetricTree>>(&impl_);
  return p ? p->get() : nullptr;
}

SpaceModel Space::model() const {
  switch (impl_.index()) {
    case 0: return SpaceModel::Euclidean;
    case 1: return SpaceModel::MetricTree;
    default: return SpaceModel::Spd;
  }
}

std::string Space::describe() const {
  if (const auto* e = as_euclidean()) return "euclidean:" + std::to_string(e->dim());
  if (const auto* s = as_spd()) return "spd:" + std::to_string(s->dim());
  const auto* t = as_tree();
  return "tree(" + std::to_string(t->num_vertices()) + " vertices)";
}

int Space::dim() const {
  if (const auto* e = as_euclidean()) return e->dim();
  if (const auto* s = as_spd()) return s->dim();
  return static_cast<int>(as_tree()->num_edges());
}

namespace {

template <class T>
const T& expect(const Point& p, const char* model) {
  if (const auto* v = std::get_if<T>(&p)) return *v;
  throw ShapeError(std::string("point does not belong to a ") + model + " space");
}

}  // namespace

void Space::validate(const Point& p) const {
  if (const auto* e = as_euclidean()) return e->validate(expect<Vector>(p, "euclidean"));
  if (const auto* s = as_spd()) return s->validate(expect<Matrix>(p, "spd"));
  as_tree()->validate(expect<TreePoint>(p, "tree"));
}

Point Space::canonical(const Point& p) const {
  if (const auto* t = as_tree()) return t->canonical(expect<TreePoint>(p, "tree"));
  return p;
}

bool Space::same_point(const Point& a, const Point& b, double tol) const {
  if (as_euclidean()) {
    const auto& x = expect<Vector>(a, "euclidean");
    const auto& y = expect<Vector>(b, "euclidean");
    return x.size() == y.size() && (x - y).cwiseAbs().maxCoeff() <= tol;
  }
  if (as_spd()) {
    const auto& x = expect<Matrix>(a, "spd");
    const auto& y = expect<Matrix>(b, "spd");
    return x.rows() == y.rows() && x.cols() == y.cols() && (x - y).cwiseAbs().maxCoeff() <= tol;
  }
  return distance(a, b) <= tol;
}

double Space::distance(const Point& q, const Point& p) const {
  if (const auto* e = as_euclidean()) {
    const auto& x = expect<Vector>(q, "euclidean");
    const auto& y = expect<Vector>(p, "euclidean");
    if (x.size() != e->dim() || y.size() != e->dim()) throw ShapeError("euclidean dimension mismatch");
    return e->distance(x, y);
  }
  if (const auto* s = as_spd()) {
    const auto& x = expect<Matrix>(q, "spd");
    const auto& y = expect<Matrix>(p, "spd");
    if (x.rows() != s->dim() || y.rows() != s->dim()) throw ShapeError("spd dimension mismatch");
    return s->distance(x, y);
  }
  const auto* t = as_tree();
  const auto& a = expect<TreePoint>(q, "tree");
  const auto& b = expect<TreePoint>(p, "tree");
  t->validate(a);
  t->validate(b);
  return t->distance(a, b);
}

Point Space::geodesic_point(const Point& q, const Point& p, double t) const {
  if (const auto* e = as_euclidean()) {
    const auto& x = expect<Vector>(q, "euclidean");
    const auto& y = expect<Vector>(p, "euclidean");
    if (x.size() != e->dim() || y.size() != e->dim()) throw ShapeError("euclidean dimension mismatch");
    return e->geodesic(x, y, t);
  }
  if (const auto* s = as_spd()) {
    const auto& x = expect<Matrix>(q, "spd");
    const auto& y = expect<Matrix>(p, "spd");
    if (x.rows() != s->dim() || y.rows() != s->dim()) throw ShapeError("spd dimension mismatch");
    return s->geodesic(x, y, t);
  }
  const auto* tr = as_tree();
  const auto& a = expect<TreePoint>(q, "tree");
  const auto& b = expect<TreePoint>(p, "tree");
  tr->validate(a);
  tr->validate(b);
  return tr->geodesic(a, b, t);
}

// ---------------------------------------------------------------- geometry

double geodesic_directional_derivative(const Space& s, const Point& y, const Point& q,
                                       const Point& p, GeodesicEnd end) {
  const double len = s.distance(q, p);
  if (len == 0.0) throw DegenerateInputError("directional derivative: q and p coincide");
  const Point& anchor = end == GeodesicEnd::Start ? q : p;
  if (s.distance(y, anchor) == 0.0) {
    throw DegenerateInputError("directional derivative: y coincides with the evaluated endpoint");
  }
  if (s.as_euclidean()) {
    const auto& yv = std::get<Vector>(y);
    const auto& qv = std::get<Vector>(q);
    const auto& pv = std::get<Vector>(p);
    const Vector u = (pv - qv) / len;
    if (end == GeodesicEnd::Start) return -(yv - qv).dot(u) / (yv - qv).norm();
    return (pv - yv).dot(u) / (pv - yv).norm();
  }
  const double h = std::min(1e-6 * std::max(1.0, len), 0.5 * len);
  if (end == GeodesicEnd::Start) {
    const Point moved = s.geodesic_point(q, p, h / len);
    return (s.distance(y, moved) - s.distance(y, q)) / h;
  }
  const Point moved = s.geodesic_point(q, p, (len - h) / len);
  return (s.distance(y, p) - s.distance(y, moved)) / h;
}

bool bowtie_contains(const Space& s, const Point& q, const Point& p, double w, const Point& y) {
  if (!(w >= 0.0 && w <= 1.0)) throw DomainError("bow tie widening must lie in [0, 1]");
  if (s.distance(q, p) == 0.0) {
    if (w >= 1.0) return true;
    return s.distance(y, q) == 0.0;
  }
  if (s.distance(y, q) == 0.0 || s.distance(y, p) == 0.0) return true;
  const double d0 = geodesic_directional_derivative(s, y, q, p, GeodesicEnd::Start);
  const double dl = geodesic_directional_derivative(s, y, q, p, GeodesicEnd::Finish);
  // Finite differences on non-Euclidean models perturb +-1 slightly.
  return std::max(d0 * d0, dl * dl) >= 1.0 - w * w - 1e-9;
}

double quadruple_gap(const Space& s, const Transform& t, const Point& q, const Point& p,
                     const Point& y, const Point& z) {
  const double lhs = t.tau(s.distance(y, q)) - t.tau(s.distance(y, p)) - t.tau(s.distance(z, q)) +
                     t.tau(s.distance(z, p));
  return lhs - t.quadruple_constant() * s.distance(q, p) * t.dtau(s.distance(y, z));
}

double quadruple_scale(const Space& s, const Transform& t, const Point& q, const Point& p,
                       const Point& y, const Point& z) {
  return std::max({t.tau(s.distance(y, q)), t.tau(s.distance(y, p)), t.tau(s.distance(z, q)),
                   t.tau(s.distance(z, p)),
                   t.quadruple_constant() * s.distance(q, p) * t.dtau(s.distance(y, z))});
}

double midpoint_gap(const Space& s, const Point& y0, const Point& y1, const Point& q) {
  const Point mid = s.geodesic_point(y0, y1, 0.5);
  const double a = s.distance(y0, q);
  const double b = s.distance(y1, q);
  const double c = s.distance(y0, y1);
  const double m = s.distance(q, mid);
  return m * m - (0.5 * a * a + 0.5 * b * b - 0.25 * c * c);
}

}  // namespace tfm
