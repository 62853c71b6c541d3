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

#include "ridepolicy/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ridepolicy::geo {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x_km - o.x_km) * (b.y_km - o.y_km) -
         (a.y_km - o.y_km) * (b.x_km - o.x_km);
}

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x_km - b.x_km, a.y_km - b.y_km);
}

double distance_to_segment(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x_km - a.x_km;
  const double dy = b.y_km - a.y_km;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  double t = ((p.x_km - a.x_km) * dx + (p.y_km - a.y_km) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, Point{a.x_km + t * dx, a.y_km + t * dy});
}

namespace {

double signed_area2(const std::vector<Point>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& a = v[i];
    const Point& b = v[(i + 1) % v.size()];
    s += a.x_km * b.y_km - b.x_km * a.y_km;
  }
  return s;
}

}  // namespace

ConvexPolygon::ConvexPolygon(std::vector<Point> vertices) {
  for (const auto& p : vertices) {
    if (!std::isfinite(p.x_km) || !std::isfinite(p.y_km)) {
      throw std::invalid_argument("polygon vertex is not finite");
    }
  }
  std::vector<Point> v;
  for (const auto& p : vertices) {
    if (v.empty() || !(v.back() == p)) v.push_back(p);
  }
  while (v.size() > 1 && v.front() == v.back()) v.pop_back();
  if (signed_area2(v) < 0) std::reverse(v.begin(), v.end());

  // Drop collinear vertices until stable.
  bool changed = true;
  while (changed && v.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point& prev = v[(i + v.size() - 1) % v.size()];
      const Point& next = v[(i + 1) % v.size()];
      if (std::abs(cross(prev, v[i], next)) <= 1e-12) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  if (v.size() < 3) {
    throw std::invalid_argument("polygon needs at least 3 non-collinear vertices");
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& a = v[i];
    const Point& b = v[(i + 1) % v.size()];
    const Point& c = v[(i + 2) % v.size()];
    if (cross(a, b, c) <= 0) {
      throw std::invalid_argument("polygon is not strictly convex");
    }
  }
  vertices_ = std::move(v);
}

ConvexPolygon ConvexPolygon::rectangle(double x0, double y0, double x1,
                                       double y1) {
  return ConvexPolygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

bool ConvexPolygon::contains(const Point& p) const {
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(vertices_[i], vertices_[(i + 1) % n], p) < -1e-12) return false;
  }
  return true;
}

double ConvexPolygon::distance_to_boundary(const Point& p) const {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best,
                    distance_to_segment(p, vertices_[i], vertices_[(i + 1) % n]));
  }
  return best;
}

double ConvexPolygon::signed_distance(const Point& p) const {
  const double d = distance_to_boundary(p);
  if (d == 0.0) return 0.0;
  return contains(p) ? -d : d;
}

double ConvexPolygon::area() const { return 0.5 * signed_area2(vertices_); }

Point ConvexPolygon::centroid() const {
  double cx = 0.0;
  double cy = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = vertices_[i];
    const Point& b = vertices_[(i + 1) % n];
    const double w = a.x_km * b.y_km - b.x_km * a.y_km;
    cx += (a.x_km + b.x_km) * w;
    cy += (a.y_km + b.y_km) * w;
  }
  const double a6 = 3.0 * signed_area2(vertices_);
  return {cx / a6, cy / a6};
}

std::pair<Point, Point> ConvexPolygon::bounds() const {
  Point lo{std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Point hi{-lo.x_km, -lo.y_km};
  for (const auto& v : vertices_) {
    lo.x_km = std::min(lo.x_km, v.x_km);
    lo.y_km = std::min(lo.y_km, v.y_km);
    hi.x_km = std::max(hi.x_km, v.x_km);
    hi.y_km = std::max(hi.y_km, v.y_km);
  }
  return {lo, hi};
}

bool polygons_overlap(const ConvexPolygon& a, const ConvexPolygon& b) {
  auto separated_by_edges_of = [](const ConvexPolygon& p,
                                  const ConvexPolygon& q) {
    const auto& pv = p.vertices();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const Point& e0 = pv[i];
      const Point& e1 = pv[(i + 1) % pv.size()];
      const double nx = e1.y_km - e0.y_km;
      const double ny = -(e1.x_km - e0.x_km);
      double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
      double qmin = pmin, qmax = -pmin;
      for (const auto& v : pv) {
        const double s = v.x_km * nx + v.y_km * ny;
        pmin = std::min(pmin, s);
        pmax = std::max(pmax, s);
      }
      for (const auto& v : q.vertices()) {
        const double s = v.x_km * nx + v.y_km * ny;
        qmin = std::min(qmin, s);
        qmax = std::max(qmax, s);
      }
      if (pmax <= qmin || qmax <= pmin) return true;
    }
    return false;
  };
  return !separated_by_edges_of(a, b) && !separated_by_edges_of(b, a);
}

bool Hull::contains(const Point& p, double eps) const {
  switch (kind) {
    case Kind::kPoint:
      return distance(p, vertices[0]) <= eps;
    case Kind::kSegment:
      return distance_to_segment(p, vertices[0], vertices[1]) <= eps;
    case Kind::kPolygon:
      for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (cross(vertices[i], vertices[(i + 1) % vertices.size()], p) < -eps) {
          return false;
        }
      }
      return true;
  }
  return false;
}

Hull convex_hull(std::vector<Point> points) {
  if (points.empty()) throw std::invalid_argument("convex_hull: no points");
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  Hull hull;
  if (points.size() == 1) {
    hull.vertices = points;
    return hull;
  }
  std::vector<Point> h(2 * points.size());
  std::size_t k = 0;
  for (const auto& p : points) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    const Point& p = points[i];
    while (k >= lower && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  h.resize(k - 1);
  if (h.size() <= 2) {
    hull.kind = Hull::Kind::kSegment;
    hull.vertices = {points.front(), points.back()};
  } else {
    hull.kind = Hull::Kind::kPolygon;
    hull.vertices = std::move(h);
  }
  return hull;
}

double signed_distance_to_boundary(const Point& p, const ConvexPolygon& poly) {
  return poly.signed_distance(p);
}

bool hull_within_buffer(const Hull& hull, const ConvexPolygon& market,
                        double d_km) {
  for (const auto& v : hull.vertices) {
    if (market.signed_distance(v) > d_km) return false;
  }
  return true;
}

std::string hex_label(const HexCell& c) {
  return std::to_string(c.q) + ":" + std::to_string(c.r);
}

HexCell parse_hex_label(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("bad hex label: " + s);
  }
  return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
}

int hex_distance(const HexCell& a, const HexCell& b) {
  const int dq = a.q - b.q;
  const int dr = a.r - b.r;
  return (std::abs(dq) + std::abs(dr) + std::abs(dq + dr)) / 2;
}

std::uint64_t hex_key(const HexCell& c) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.q)) << 32) |
         static_cast<std::uint32_t>(c.r);
}

double hex_edge_for_area(double area_km2) {
  return std::sqrt(2.0 * area_km2 / (3.0 * std::numbers::sqrt3));
}

HexGrid::HexGrid(double cell_area_km2)
    : area_(cell_area_km2), edge_(0.0) {
  if (!(cell_area_km2 > 0.0)) {
    throw std::invalid_argument("hex resolution must be positive");
  }
  edge_ = hex_edge_for_area(cell_area_km2);
}

HexCell HexGrid::cell_of(const Point& p) const {
  const double fq =
      (std::numbers::sqrt3 / 3.0 * p.x_km - p.y_km / 3.0) / edge_;
  const double fr = (2.0 / 3.0 * p.y_km) / edge_;
  const double fs = -fq - fr;
  double rq = std::round(fq);
  double rr = std::round(fr);
  const double rs = std::round(fs);
  const double dq = std::abs(rq - fq);
  const double dr = std::abs(rr - fr);
  const double ds = std::abs(rs - fs);
  if (dq > dr && dq > ds) {
    rq = -rr - rs;
  } else if (dr > ds) {
    rr = -rq - rs;
  }
  return {static_cast<int>(rq), static_cast<int>(rr)};
}

Point HexGrid::center(const HexCell& c) const {
  return {edge_ * std::numbers::sqrt3 * (c.q + c.r / 2.0), edge_ * 1.5 * c.r};
}

std::vector<Point> HexGrid::corners(const HexCell& c) const {
  const Point ctr = center(c);
  std::vector<Point> out;
  out.reserve(6);
  for (int i = 0; i < 6; ++i) {
    const double ang = std::numbers::pi / 180.0 * (60.0 * i - 30.0);
    out.push_back({ctr.x_km + edge_ * std::cos(ang),
                   ctr.y_km + edge_ * std::sin(ang)});
  }
  return out;
}

HexCell hex_of(const Point& p, double resolution_km2) {
  return HexGrid(resolution_km2).cell_of(p);
}

std::vector<HexCell> hex_ring(const HexCell& c, int k) {
  if (k < 0) throw std::invalid_argument("hex_ring: k must be >= 0");
  std::vector<HexCell> out;
  for (int dq = -k; dq <= k; ++dq) {
    for (int dr = std::max(-k, -dq - k); dr <= std::min(k, -dq + k); ++dr) {
      out.push_back({c.q + dq, c.r + dr});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ridepolicy::geo
