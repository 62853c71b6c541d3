// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RIDEPOLICY_GEO_HPP_
#define RIDEPOLICY_GEO_HPP_

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ridepolicy::geo {

struct Point {
  double x_km = 0.0;
  double y_km = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

double cross(const Point& o, const Point& a, const Point& b);
double distance(const Point& a, const Point& b);
double distance_to_segment(const Point& p, const Point& a, const Point& b);

// Strictly convex polygon, vertices counterclockwise.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;
  // Accepts either orientation; drops repeated and collinear vertices.
  // Throws std::invalid_argument if the result is not strictly convex or has
  // fewer than 3 vertices.
  explicit ConvexPolygon(std::vector<Point> vertices);

  static ConvexPolygon rectangle(double x0, double y0, double x1, double y1);

  const std::vector<Point>& vertices() const { return vertices_; }
  bool contains(const Point& p) const;  // closed
  double distance_to_boundary(const Point& p) const;
  // Negative strictly inside, zero on an edge, positive outside.
  double signed_distance(const Point& p) const;
  double area() const;
  Point centroid() const;
  // Bounding box as (min, max).
  std::pair<Point, Point> bounds() const;

 private:
  std::vector<Point> vertices_;
};

// Positive-area intersection test (separating axis).
bool polygons_overlap(const ConvexPolygon& a, const ConvexPolygon& b);

struct Hull {
  enum class Kind { kPoint, kSegment, kPolygon };
  Kind kind = Kind::kPoint;
  // Counterclockwise from the lexicographic minimum; 1, 2 or >= 3 vertices.
  std::vector<Point> vertices;

  bool contains(const Point& p, double eps = 1e-9) const;
};

// Andrew's monotone chain. Throws std::invalid_argument on empty input.
Hull convex_hull(std::vector<Point> points);

double signed_distance_to_boundary(const Point& p, const ConvexPolygon& poly);

bool hull_within_buffer(const Hull& hull, const ConvexPolygon& market,
                        double d_km);

// Pointy-top axial hexagon.
struct HexCell {
  int q = 0;
  int r = 0;

  friend bool operator==(const HexCell&, const HexCell&) = default;
  friend auto operator<=>(const HexCell&, const HexCell&) = default;
};

std::string hex_label(const HexCell& c);  // "q:r"
HexCell parse_hex_label(const std::string& s);
int hex_distance(const HexCell& a, const HexCell& b);
std::uint64_t hex_key(const HexCell& c);

// Edge length of a regular hexagon with the given area.
double hex_edge_for_area(double area_km2);

class HexGrid {
 public:
  explicit HexGrid(double cell_area_km2);

  double cell_area_km2() const { return area_; }
  double edge_km() const { return edge_; }
  HexCell cell_of(const Point& p) const;
  Point center(const HexCell& c) const;
  std::vector<Point> corners(const HexCell& c) const;

 private:
  double area_;
  double edge_;
};

HexCell hex_of(const Point& p, double resolution_km2);

// All cells within k hops, sorted by (q, r). Size 1 + 3k(k+1).
std::vector<HexCell> hex_ring(const HexCell& c, int k);

}  // namespace ridepolicy::geo

template <>
struct std::hash<ridepolicy::geo::HexCell> {
  std::size_t operator()(const ridepolicy::geo::HexCell& c) const noexcept {
    return std::hash<std::uint64_t>{}(ridepolicy::geo::hex_key(c));
  }
};

#endif  // RIDEPOLICY_GEO_HPP_
