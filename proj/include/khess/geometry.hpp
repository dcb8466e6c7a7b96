#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace khess {

/// Point in R^d for d <= 3; unused trailing coordinates are zero.
using Point = std::array<double, 3>;

double distance(const Point& a, const Point& b);
double norm(const Point& a);

/// Bounded convex outer domain with an analytic, positively homogeneous gauge.
class ConvexDomain {
 public:
  enum class Kind { ball, ellipsoid, p_ball };

  static ConvexDomain ball(int dim, Point center, double radius);
  static ConvexDomain ellipsoid(int dim, Point center, Point semi_axes);
  static ConvexDomain p_ball(int dim, Point center, double radius, double p);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  const Point& semi_axes() const { return axes_; }
  double exponent() const { return p_; }

  /// Gauge of x - center: < 1 inside, == 1 on the boundary.
  double gauge(const Point& x) const;
  bool contains(const Point& x) const { return gauge(x) < 1.0; }

  /// Boundary point reached from the center along direction `dir` (any length).
  Point boundary_along(const Point& dir) const;
  /// max / min of |b - from| over boundary points b.
  double max_boundary_distance(const Point& from) const;
  double min_boundary_distance(const Point& from) const;
  /// Boundary point maximizing |b - from|; ties resolved by the first sample in angular order.
  Point farthest_boundary_point(const Point& from) const;
  /// Half-width of the axis-aligned bounding box along `axis`.
  double extent(int axis) const;
  double volume() const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::ball;
  int dim_ = 2;
  Point center_{};
  double radius_ = 1.0;
  Point axes_{1.0, 1.0, 1.0};
  double p_ = 2.0;
};

/// Outer convex domain minus the closed ball of radius eps around hole_center.
class RingDomain {
 public:
  RingDomain(ConvexDomain outer, Point hole_center, double eps);

  const ConvexDomain& outer() const { return outer_; }
  const Point& hole_center() const { return hole_center_; }
  double eps() const { return eps_; }
  int dim() const { return outer_.dim(); }

 private:
  ConvexDomain outer_;
  Point hole_center_;
  double eps_;
};

struct HoleBall {
  Point center{};
  double radius = 0.0;
};

/// Either a ring or a hole-free outer domain; the geometry the discretization sees.
struct BoundaryGeometry {
  ConvexDomain outer;
  std::optional<HoleBall> hole;

  static BoundaryGeometry from(const RingDomain& ring);
  static BoundaryGeometry from(const ConvexDomain& domain);
  bool in_hole(const Point& x) const;
  bool in_domain(const Point& x) const { return outer.contains(x) && !in_hole(x); }
};

enum class NodeClass : std::uint8_t { interior, near_outer, near_inner, hole, exterior };
const char* to_string(NodeClass c);

/// Uniform Cartesian grid covering the outer domain with at least one exterior layer.
struct Grid {
  int dim = 2;
  double h = 0.0;
  Point origin{};
  std::array<int, 3> counts{1, 1, 1};
  std::vector<NodeClass> node_class;

  std::size_t size() const {
    return static_cast<std::size_t>(counts[0]) * static_cast<std::size_t>(counts[1]) *
           static_cast<std::size_t>(counts[2]);
  }
  /// Lexicographic index with the first axis slowest.
  std::size_t index(int i, int j, int k = 0) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(counts[1]) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(counts[2]) +
           static_cast<std::size_t>(k);
  }
  std::array<int, 3> multi_index(std::size_t idx) const;
  Point position(std::size_t idx) const;
  Point position(int i, int j, int k = 0) const;
  /// Neighbor along `axis` with offset `step`, or nullopt when off the grid.
  std::optional<std::size_t> neighbor(std::size_t idx, int axis, int step) const;
  bool is_unknown(std::size_t idx) const {
    const auto c = node_class[idx];
    return c == NodeClass::interior || c == NodeClass::near_outer || c == NodeClass::near_inner;
  }
};

/// Builds an unclassified grid of spacing h covering `domain`.
Grid make_grid(const ConvexDomain& domain, double h);

Grid classify_nodes(Grid grid, const RingDomain& ring);
Grid classify_nodes(Grid grid, const ConvexDomain& domain);
Grid classify_nodes(Grid grid, const BoundaryGeometry& geom);

enum class BoundaryKind { inner, outer };

struct CutArm {
  double theta = 1.0;  // crossing distance / h, in (0, 1]
  Point point{};
  BoundaryKind boundary = BoundaryKind::outer;
};

/// First crossing of the boundary of the ring along x + s dir, 0 < s <= h.
CutArm boundary_intersection(const Point& x, const Point& dir, double h, const RingDomain& ring);
CutArm boundary_intersection(const Point& x, const Point& dir, double h, const BoundaryGeometry& geom);

}  // namespace khess
