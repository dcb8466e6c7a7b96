#include "khess/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "khess/errors.hpp"

namespace khess {

double norm(const Point& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

double distance(const Point& a, const Point& b) {
  return norm(Point{a[0] - b[0], a[1] - b[1], a[2] - b[2]});
}

namespace {

Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Point axpy(const Point& x, double s, const Point& d) { return {x[0] + s * d[0], x[1] + s * d[1], x[2] + s * d[2]}; }
double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Smallest root s > 0 of |x + s d - c| = r with |d| = 1, or +inf.
double sphere_crossing(const Point& x, const Point& d, const Point& c, double r, bool entering) {
  const Point w = sub(x, c);
  const double b = dot(d, w);
  const double q = dot(w, w) - r * r;
  const double disc = b * b - q;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double sq = std::sqrt(disc);
  // Roots -b -/+ sq, computed without cancellation.
  const double big = -b - std::copysign(sq, b);
  double r1 = big, r2 = big != 0.0 ? q / big : 0.0;
  if (r1 > r2) std::swap(r1, r2);
  if (entering) return r1 > 0.0 ? r1 : std::numeric_limits<double>::infinity();
  return r2 > 0.0 ? r2 : std::numeric_limits<double>::infinity();
}

// Directions used for boundary extremum searches: angle grid in 2-D, (theta, phi) grid in 3-D.
Point direction_2d(double t) { return {std::cos(t), std::sin(t), 0.0}; }
Point direction_3d(double th, double ph) {
  return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
}

}  // namespace

ConvexDomain ConvexDomain::ball(int dim, Point center, double radius) {
  if (dim < 2 || dim > 3) throw InvalidGeometry("grid domains must have dimension 2 or 3");
  if (!(radius > 0.0)) throw InvalidGeometry("ball radius must be positive");
  ConvexDomain d;
  d.kind_ = Kind::ball;
  d.dim_ = dim;
  d.center_ = center;
  d.radius_ = radius;
  d.axes_ = {radius, radius, dim == 3 ? radius : 1.0};
  return d;
}

ConvexDomain ConvexDomain::ellipsoid(int dim, Point center, Point semi_axes) {
  if (dim < 2 || dim > 3) throw InvalidGeometry("grid domains must have dimension 2 or 3");
  for (int i = 0; i < dim; ++i)
    if (!(semi_axes[static_cast<std::size_t>(i)] > 0.0)) throw InvalidGeometry("ellipsoid semi-axes must be positive");
  ConvexDomain d;
  d.kind_ = Kind::ellipsoid;
  d.dim_ = dim;
  d.center_ = center;
  d.axes_ = semi_axes;
  if (dim == 2) d.axes_[2] = 1.0;
  d.radius_ = *std::max_element(semi_axes.begin(), semi_axes.begin() + dim);
  return d;
}

ConvexDomain ConvexDomain::p_ball(int dim, Point center, double radius, double p) {
  if (dim < 2 || dim > 3) throw InvalidGeometry("grid domains must have dimension 2 or 3");
  if (!(radius > 0.0)) throw InvalidGeometry("p-ball radius must be positive");
  if (!(p >= 2.0 && p <= 8.0)) throw InvalidGeometry("p-ball exponent must lie in [2, 8]");
  ConvexDomain d;
  d.kind_ = Kind::p_ball;
  d.dim_ = dim;
  d.center_ = center;
  d.radius_ = radius;
  d.p_ = p;
  return d;
}

double ConvexDomain::gauge(const Point& x) const {
  const Point w = sub(x, center_);
  switch (kind_) {
    case Kind::ball: {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) s += w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i)];
      return std::sqrt(s) / radius_;
    }
    case Kind::ellipsoid: {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) {
        const double t = w[static_cast<std::size_t>(i)] / axes_[static_cast<std::size_t>(i)];
        s += t * t;
      }
      return std::sqrt(s);
    }
    case Kind::p_ball: {
      double m = 0.0;
      for (int i = 0; i < dim_; ++i) m = std::max(m, std::abs(w[static_cast<std::size_t>(i)]));
      if (m == 0.0) return 0.0;
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) s += std::pow(std::abs(w[static_cast<std::size_t>(i)]) / m, p_);
      return m * std::pow(s, 1.0 / p_) / radius_;
    }
  }
  return 0.0;
}

Point ConvexDomain::boundary_along(const Point& dir) const {
  const double g = gauge(axpy(center_, 1.0, dir));
  return axpy(center_, 1.0 / g, dir);
}

namespace {

template <class Score>
Point search_boundary(const ConvexDomain& dom, Score score) {
  // Coarse sampling followed by local golden-section style refinement in parameter space.
  if (dom.dim() == 2) {
    const int samples = 4096;
    double best_t = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      const double t = 2.0 * std::numbers::pi * s / samples;
      const double v = score(dom.boundary_along(direction_2d(t)));
      if (v > best + 1e-14) {
        best = v;
        best_t = t;
      }
    }
    double lo = best_t - 2.0 * std::numbers::pi / samples;
    double hi = best_t + 2.0 * std::numbers::pi / samples;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80; ++it) {
      const double a = hi - gr * (hi - lo);
      const double b = lo + gr * (hi - lo);
      if (score(dom.boundary_along(direction_2d(a))) >= score(dom.boundary_along(direction_2d(b))))
        hi = b;
      else
        lo = a;
    }
    const Point refined = dom.boundary_along(direction_2d(0.5 * (lo + hi)));
    const Point coarse = dom.boundary_along(direction_2d(best_t));
    return score(refined) > score(coarse) ? refined : coarse;
  }
  const int nt = 181, np = 360;
  double bt = 0.0, bp = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < nt; ++i) {
    const double th = std::numbers::pi * i / (nt - 1);
    for (int j = 0; j < np; ++j) {
      const double ph = 2.0 * std::numbers::pi * j / np;
      const double v = score(dom.boundary_along(direction_3d(th, ph)));
      if (v > best + 1e-14) {
        best = v;
        bt = th;
        bp = ph;
      }
    }
  }
  double step = std::numbers::pi / (nt - 1);
  for (int it = 0; it < 200 && step > 1e-12; ++it) {
    bool moved = false;
    for (const auto& [dt, dp] : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}) {
      const double th = bt + dt * step, ph = bp + dp * step;
      const double v = score(dom.boundary_along(direction_3d(th, ph)));
      if (v > best) {
        best = v;
        bt = th;
        bp = ph;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return dom.boundary_along(direction_3d(bt, bp));
}

}  // namespace

double ConvexDomain::max_boundary_distance(const Point& from) const {
  if (kind_ == Kind::ball) return distance(from, center_) + radius_;
  return distance(from, farthest_boundary_point(from));
}

double ConvexDomain::min_boundary_distance(const Point& from) const {
  if (kind_ == Kind::ball) return std::abs(radius_ - distance(from, center_));
  const Point b = search_boundary(*this, [&](const Point& p) { return -distance(p, from); });
  return distance(b, from);
}

Point ConvexDomain::farthest_boundary_point(const Point& from) const {
  if (kind_ == Kind::ball) {
    Point w = sub(from, center_);
    const double r = norm(w);
    if (r < 1e-14 * radius_) w = {-1.0, 0.0, 0.0};  // from the center: the +x boundary point
    const double s = -radius_ / norm(w);
    return axpy(center_, s, w);
  }
  return search_boundary(*this, [&](const Point& p) { return distance(p, from); });
}

double ConvexDomain::extent(int axis) const {
  switch (kind_) {
    case Kind::ball:
    case Kind::p_ball:
      return radius_;
    case Kind::ellipsoid:
      return axes_[static_cast<std::size_t>(axis)];
  }
  return radius_;
}

double ConvexDomain::volume() const {
  const double pi = std::numbers::pi;
  switch (kind_) {
    case Kind::ball:
      return dim_ == 2 ? pi * radius_ * radius_ : 4.0 / 3.0 * pi * radius_ * radius_ * radius_;
    case Kind::ellipsoid:
      return dim_ == 2 ? pi * axes_[0] * axes_[1] : 4.0 / 3.0 * pi * axes_[0] * axes_[1] * axes_[2];
    case Kind::p_ball: {
      // (2 Gamma(1 + 1/p))^d / Gamma(1 + d/p) R^d
      const double g = 2.0 * std::tgamma(1.0 + 1.0 / p_);
      return std::pow(g, dim_) / std::tgamma(1.0 + dim_ / p_) * std::pow(radius_, dim_);
    }
  }
  return 0.0;
}

std::string ConvexDomain::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::ball:
      os << "ball(R=" << radius_ << ")";
      break;
    case Kind::ellipsoid:
      os << "ellipsoid(" << axes_[0] << "," << axes_[1];
      if (dim_ == 3) os << "," << axes_[2];
      os << ")";
      break;
    case Kind::p_ball:
      os << "p_ball(R=" << radius_ << ",p=" << p_ << ")";
      break;
  }
  return os.str();
}

RingDomain::RingDomain(ConvexDomain outer, Point hole_center, double eps)
    : outer_(std::move(outer)), hole_center_(hole_center), eps_(eps) {
  if (!(eps_ > 0.0)) throw InvalidGeometry("hole radius must be positive");
  if (!outer_.contains(hole_center_)) throw InvalidGeometry("hole center lies outside the outer domain");
  const double clearance = outer_.min_boundary_distance(hole_center_);
  if (!(clearance > eps_ * (1.0 + 1e-12))) {
    throw InvalidGeometry("closed hole ball must lie strictly inside the outer domain (clearance " +
                          std::to_string(clearance) + ", eps " + std::to_string(eps_) + ")");
  }
}

BoundaryGeometry BoundaryGeometry::from(const RingDomain& ring) {
  return {ring.outer(), HoleBall{ring.hole_center(), ring.eps()}};
}

BoundaryGeometry BoundaryGeometry::from(const ConvexDomain& domain) { return {domain, std::nullopt}; }

bool BoundaryGeometry::in_hole(const Point& x) const {
  return hole.has_value() && distance(x, hole->center) <= hole->radius;
}

const char* to_string(NodeClass c) {
  switch (c) {
    case NodeClass::interior:
      return "interior";
    case NodeClass::near_outer:
      return "near_outer";
    case NodeClass::near_inner:
      return "near_inner";
    case NodeClass::hole:
      return "hole";
    case NodeClass::exterior:
      return "exterior";
  }
  return "?";
}

std::array<int, 3> Grid::multi_index(std::size_t idx) const {
  const auto n2 = static_cast<std::size_t>(counts[2]);
  const auto n1 = static_cast<std::size_t>(counts[1]);
  const int k = static_cast<int>(idx % n2);
  idx /= n2;
  const int j = static_cast<int>(idx % n1);
  const int i = static_cast<int>(idx / n1);
  return {i, j, k};
}

Point Grid::position(int i, int j, int k) const {
  return {origin[0] + h * i, origin[1] + h * j, dim == 3 ? origin[2] + h * k : 0.0};
}

Point Grid::position(std::size_t idx) const {
  const auto m = multi_index(idx);
  return position(m[0], m[1], m[2]);
}

std::optional<std::size_t> Grid::neighbor(std::size_t idx, int axis, int step) const {
  auto m = multi_index(idx);
  m[static_cast<std::size_t>(axis)] += step;
  if (m[static_cast<std::size_t>(axis)] < 0 || m[static_cast<std::size_t>(axis)] >= counts[static_cast<std::size_t>(axis)])
    return std::nullopt;
  return index(m[0], m[1], m[2]);
}

Grid make_grid(const ConvexDomain& domain, double h) {
  if (!(h > 0.0)) throw InvalidGeometry("grid spacing must be positive");
  Grid g;
  g.dim = domain.dim();
  g.h = h;
  for (int a = 0; a < 3; ++a) {
    if (a >= g.dim) {
      g.counts[static_cast<std::size_t>(a)] = 1;
      g.origin[static_cast<std::size_t>(a)] = 0.0;
      continue;
    }
    // Nodes at center + h m, |m| <= ceil(extent / h) + 1: symmetric and one layer beyond the box.
    const int m = static_cast<int>(std::ceil(domain.extent(a) / h - 1e-12)) + 1;
    g.counts[static_cast<std::size_t>(a)] = 2 * m + 1;
    g.origin[static_cast<std::size_t>(a)] = domain.center()[static_cast<std::size_t>(a)] - h * m;
  }
  g.node_class.assign(g.size(), NodeClass::exterior);
  return g;
}

Grid classify_nodes(Grid grid, const BoundaryGeometry& geom) {
  if (geom.hole && geom.hole->radius < 2.0 * grid.h) {
    throw HoleTooSmallForGrid("hole radius " + std::to_string(geom.hole->radius) + " is below 2h = " +
                              std::to_string(2.0 * grid.h));
  }
  const std::size_t n = grid.size();
  for (std::size_t idx = 0; idx < n; ++idx) {
    const Point x = grid.position(idx);
    if (!geom.outer.contains(x))
      grid.node_class[idx] = NodeClass::exterior;
    else if (geom.in_hole(x))
      grid.node_class[idx] = NodeClass::hole;
    else
      grid.node_class[idx] = NodeClass::interior;
  }
  // Second pass reads only first-pass tags, so the result is independent of traversal order.
  std::vector<NodeClass> tags = grid.node_class;
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (grid.node_class[idx] != NodeClass::interior) continue;
    bool inner = false, outer = false;
    for (int a = 0; a < grid.dim; ++a) {
      for (int step : {-1, 1}) {
        const auto nb = grid.neighbor(idx, a, step);
        const NodeClass c = nb ? grid.node_class[*nb] : NodeClass::exterior;
        if (c == NodeClass::hole) inner = true;
        if (c == NodeClass::exterior) outer = true;
      }
    }
    if (inner)
      tags[idx] = NodeClass::near_inner;
    else if (outer)
      tags[idx] = NodeClass::near_outer;
  }
  grid.node_class = std::move(tags);
  return grid;
}

Grid classify_nodes(Grid grid, const RingDomain& ring) {
  return classify_nodes(std::move(grid), BoundaryGeometry::from(ring));
}

Grid classify_nodes(Grid grid, const ConvexDomain& domain) {
  return classify_nodes(std::move(grid), BoundaryGeometry::from(domain));
}

CutArm boundary_intersection(const Point& x, const Point& dir, double h, const BoundaryGeometry& geom) {
  const double len = norm(dir);
  const Point d{dir[0] / len, dir[1] / len, dir[2] / len};
  const double inf = std::numeric_limits<double>::infinity();

  double s_inner = inf;
  if (geom.hole) s_inner = sphere_crossing(x, d, geom.hole->center, geom.hole->radius, true);

  double s_outer = inf;
  const ConvexDomain& dom = geom.outer;
  if (dom.kind() == ConvexDomain::Kind::ball) {
    s_outer = sphere_crossing(x, d, dom.center(), dom.radius(), false);
  } else if (dom.gauge(axpy(x, h, d)) >= 1.0 && dom.gauge(x) < 1.0) {
    double lo = 0.0, hi = h;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (dom.gauge(axpy(x, mid, d)) < 1.0)
        lo = mid;
      else
        hi = mid;
    }
    // Pick the endpoint with the smaller gauge residual.
    const double rl = std::abs(dom.gauge(axpy(x, lo, d)) - 1.0);
    const double rh = std::abs(dom.gauge(axpy(x, hi, d)) - 1.0);
    s_outer = rl < rh ? lo : hi;
  }

  const double tol = 1e-12 * h;
  const bool inner_ok = s_inner > 0.0 && s_inner <= h + tol;
  const bool outer_ok = s_outer > 0.0 && s_outer <= h + tol;
  if (!inner_ok && !outer_ok) throw NotACutArm("stencil arm does not cross the boundary within one spacing");

  CutArm arm;
  double s;
  if (inner_ok && (!outer_ok || s_inner <= s_outer)) {
    s = s_inner;
    arm.boundary = BoundaryKind::inner;
  } else {
    s = s_outer;
    arm.boundary = BoundaryKind::outer;
  }
  s = std::min(s, h);
  arm.theta = s / h;
  arm.point = axpy(x, s, d);
  return arm;
}

CutArm boundary_intersection(const Point& x, const Point& dir, double h, const RingDomain& ring) {
  return boundary_intersection(x, dir, h, BoundaryGeometry::from(ring));
}

}  // namespace khess
