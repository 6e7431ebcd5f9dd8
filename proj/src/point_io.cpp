#include "tfmean/point_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "parse_util.hpp"

namespace tfm {

namespace {

std::string num(double x, int digits) {
  if (digits <= 0) return format_double(x);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

}  // namespace

std::string format_point(const Space& s, const Point& p, int digits) {
  std::string out;
  auto add = [&](double x) {
    if (!out.empty()) out += ',';
    out += num(x, digits);
  };
  if (s.as_tree()) {
    const auto& t = std::get<TreePoint>(p);
    out = std::to_string(t.edge);
    add(t.offset);
  } else if (s.as_spd()) {
    const auto& m = std::get<Matrix>(p);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) add(m(i, j));
  } else {
    const auto& v = std::get<Vector>(p);
    for (Eigen::Index i = 0; i < v.size(); ++i) add(v(i));
  }
  return out;
}

void write_points(std::ostream& out, const Space& s, const std::vector<Point>& pts, int digits) {
  for (const auto& p : pts) out << format_point(s, p, digits) << '\n';
}

Point parse_point(const Space& s, const std::string& row) {
  const auto cells = detail::split(detail::trim(row), ',');
  if (s.as_tree()) {
    if (cells.size() != 2) throw ShapeError("tree point row needs 'edge,offset'");
    TreePoint tp{detail::parse_uint(cells[0], "edge id"), detail::parse_double(cells[1], "offset")};
    s.validate(tp);
    return s.canonical(tp);
  }
  const int d = s.dim();
  if (s.as_spd()) {
    if (cells.size() != static_cast<std::size_t>(d * d)) {
      throw ShapeError("spd point row needs " + std::to_string(d * d) + " entries");
    }
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = detail::parse_double(cells[i * d + j], "matrix entry");
    s.validate(m);
    return m;
  }
  if (cells.size() != static_cast<std::size_t>(d)) {
    throw ShapeError("euclidean point row needs " + std::to_string(d) + " coordinates");
  }
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = detail::parse_double(cells[i], "coordinate");
  s.validate(v);
  return v;
}

std::vector<Point> read_points(std::istream& in, const Space& s) {
  std::vector<Point> pts;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    pts.push_back(parse_point(s, std::string(t)));
  }
  return pts;
}

std::vector<Point> load_points(const std::string& path, const Space& s) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open points file '" + path + "'");
  return read_points(in, s);
}

void save_points(const std::string& path, const Space& s, const std::vector<Point>& pts) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write points file '" + path + "'");
  write_points(out, s, pts);
}

}  // namespace tfm
