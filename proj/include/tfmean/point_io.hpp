#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tfmean/spaces.hpp"

namespace tfm {

/// CSV point format. One point per row: d coordinates (Euclidean),
/// `edge,offset` (tree) or the d*d entries in row-major order (SPD).
/// Blank lines and lines starting with `#` are skipped.
///
/// `digits` = 0 writes the shortest round-trip representation; otherwise
/// that many significant digits.
std::string format_point(const Space& s, const Point& p, int digits = 0);
void write_points(std::ostream& out, const Space& s, const std::vector<Point>& pts, int digits = 0);

Point parse_point(const Space& s, const std::string& row);
std::vector<Point> read_points(std::istream& in, const Space& s);
std::vector<Point> load_points(const std::string& path, const Space& s);
void save_points(const std::string& path, const Space& s, const std::vector<Point>& pts);

}  // namespace tfm
