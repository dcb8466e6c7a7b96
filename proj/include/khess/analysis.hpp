#pragma once

#include <optional>
#include <string>
#include <vector>

#include "khess/geometry.hpp"
#include "khess/grid_solver.hpp"
#include "khess/radial.hpp"

namespace khess {

/// The ring solution extended by -M into the hole, defined on every node of the outer domain.
/// Exterior nodes stay NaN; interpolation treats them as the outer boundary value 0.
struct ExtendedField {
  std::shared_ptr<const Discretization> disc;
  std::vector<double> values;
  double M = 0.0;
  Point hole_center{};
  double eps = 0.0;

  const Grid& grid() const { return disc->grid(); }
  /// Bilinear (2-D) or trilinear (3-D) interpolation.
  double sample(const Point& x) const;
  bool in_domain(std::size_t node) const { return grid().node_class[node] != NodeClass::exterior; }
};

ExtendedField extend_utilde(const GridField& field, const RingDomain& ring);

struct Witness {
  Point a{}, b{};
  Point point{};  // where the segment value is largest
};

struct LevelDefect {
  double level = 0.0;
  double defect = 0.0;
  std::optional<Witness> witness;
  double hull_ratio = 0.0;
  std::size_t set_size = 0;
  std::size_t pairs_tested = 0;
  std::string verdict;  // "violation", "within_threshold", "trivial"
};

/// Segment test on the sublevel set {u <= level}, over pairs of its boundary nodes.
LevelDefect convexity_defect(const ExtendedField& efield, double level, double threshold = 0.0);

/// max over the segment [a, b] (spacing h) of (u - level)_+, and where it is attained.
std::pair<double, Point> segment_defect(const ExtendedField& efield, const Point& a, const Point& b, double level);

struct ConvexityReport {
  double h = 0.0;
  double M = 0.0;
  double threshold = 0.0;
  double quantum = 0.0;
  std::vector<LevelDefect> levels;
  std::size_t worst_level = 0;

  double max_defect() const;
};

/// L evenly spaced levels in [-M + q, -q], q = M h, followed by any extra levels.
ConvexityReport quasiconvexity_report(const ExtendedField& efield, int L, double threshold,
                                      const std::vector<double>& extra_levels = {});

/// Level spacing used to keep tested levels off -M and 0.
double level_quantum(const ExtendedField& efield);

struct Ball {
  Point center{};
  double radius = 0.0;
};

/// Sum of sigma_k h^d over nodes inside the ball, with central differences of the extended field taken
/// across the hole boundary; nodes deep in the hole see a constant and contribute 0.
double hessian_measure(const ExtendedField& efield, const Ball& ball, int k);
double hessian_measure(const GridField& field, const Ball& ball, int k);

/// Measure of the extended radial profile over the centered ball of radius r, including the mass the
/// slope jump at |x| = eps carries. Flux form: C(n-1,k-1)/k |S^{n-1}| r^{n-k} u'(r)^k.
double hessian_measure_radial_flux(const RadialProfile& profile, double r);
/// Same quantity as the quadrature of sigma_k over eps < |x| < r plus the inner-boundary flux.
double hessian_measure_radial_quadrature(const RadialProfile& profile, double r);

double unit_sphere_area(int n);
double ball_volume(int n, double r);

struct MeasureReport {
  Ball ball;
  int dim = 2;  // coordinates of the ball center
  int n = 2;
  int k = 1;
  std::string path;  // "radial" or "grid"
  std::vector<double> eps;
  std::vector<double> measures;
  std::vector<double> cross_check;  // second path (quadrature for radial)
  double volume = 0.0;
  double extrapolated = 0.0;
  std::string extrapolation;  // "aitken" or "last"
  bool monotone = false;
  double relative_error() const { return std::abs(extrapolated - volume) / volume; }
};

/// Aitken delta-squared on the last three terms when the successive differences shrink geometrically
/// with a positive ratio below one; otherwise the last term.
std::pair<double, std::string> extrapolate_limit(const std::vector<double>& seq);

/// Convolution with the normalized bump exp(-1 / (1 - |x/h_m|^2)) wherever the kernel support stays in
/// the outer domain; elsewhere the value is kept.
ExtendedField mollify(const ExtendedField& efield, double hm);

struct EstimateCheck {
  explicit EstimateCheck(std::string n = {}) : name(std::move(n)) {}
  std::string name;
  bool applicable = true;
  bool pass = true;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // most negative margin (or the statistic itself)
  Point worst_location{};
  std::string note;
};

struct EstimateReport {
  std::vector<EstimateCheck> checks;
  double gradient_constant = 0.0;
  bool all_pass() const;
  const EstimateCheck* find(const std::string& name) const;
};

/// Node-wise barrier orderings, boundary normal slopes, the interior gradient constant and the
/// gradient maximum principle for a converged ring solution.
EstimateReport verify_estimates(const GridField& field, const RingDomain& ring, const GridField* psi);

struct Polyline {
  std::vector<Point> points;
  bool closed = false;
};

/// Marching squares on a 2-D extended field.
std::vector<Polyline> level_set_polylines(const ExtendedField& efield, double level);
std::string polylines_csv(const std::vector<Polyline>& lines);

}  // namespace khess
