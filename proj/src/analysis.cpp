#include "khess/analysis.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>

#include "khess/barriers.hpp"
#include "khess/errors.hpp"

namespace khess {

namespace {

constexpr std::size_t kMaxPairs = 10000;

Point lerp(const Point& a, const Point& b, double t) {
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
}

// Unit directions probing a neighborhood: the 8 (2-D) or 26 (3-D) lattice directions.
std::vector<Point> probe_directions(int dim) {
  std::vector<Point> out;
  const int kr = dim == 3 ? 1 : 0;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = -kr; k <= kr; ++k) {
        if (i == 0 && j == 0 && k == 0) continue;
        const double n = std::sqrt(static_cast<double>(i * i + j * j + k * k));
        out.push_back({i / n, j / n, k / n});
      }
  return out;
}

std::vector<double> unknown_vector(const ExtendedField& ef) {
  std::vector<double> x(ef.disc->unknowns());
  for (std::size_t u = 0; u < x.size(); ++u) x[u] = ef.values[ef.disc->node_of(u)];
  return x;
}

double cross(const Point& o, const Point& a, const Point& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double hull_area(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return 0.0;
  std::vector<Point> hull(2 * pts.size());
  std::size_t m = 0;
  for (const auto& p : pts) {
    while (m >= 2 && cross(hull[m - 2], hull[m - 1], p) <= 0) --m;
    hull[m++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = m + 1; i-- > 0;) {
    while (m >= t && cross(hull[m - 2], hull[m - 1], pts[i]) <= 0) --m;
    hull[m++] = pts[i];
  }
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) area += hull[i][0] * hull[i + 1][1] - hull[i + 1][0] * hull[i][1];
  return 0.5 * std::abs(area);
}

}  // namespace

double ExtendedField::sample(const Point& x) const {
  const Grid& g = grid();
  std::array<int, 3> i0{0, 0, 0};
  std::array<double, 3> f{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const double t = (x[ua] - g.origin[ua]) / g.h;
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 0, g.counts[ua] - 2);
    i0[ua] = i;
    f[ua] = std::clamp(t - i, 0.0, 1.0);
  }
  double v = 0.0;
  const int corners = g.dim == 3 ? 8 : 4;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::array<int, 3> m = i0;
    for (int a = 0; a < g.dim; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const int bit = (c >> a) & 1;
      m[ua] += bit;
      w *= bit ? f[ua] : 1.0 - f[ua];
    }
    if (w == 0.0) continue;
    const double val = values[g.index(m[0], m[1], m[2])];
    v += w * (std::isfinite(val) ? val : 0.0);
  }
  return v;
}

ExtendedField extend_utilde(const GridField& field, const RingDomain& ring) {
  ExtendedField ef;
  ef.disc = field.disc;
  ef.values = field.values;
  ef.M = field.meta.M;
  ef.hole_center = ring.hole_center();
  ef.eps = ring.eps();
  const Grid& g = field.grid();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.node_class[i] == NodeClass::hole) ef.values[i] = -ef.M;
  return ef;
}

std::pair<double, Point> segment_defect(const ExtendedField& efield, const Point& a, const Point& b, double level) {
  const double len = distance(a, b);
  const int n = std::max(1, static_cast<int>(std::ceil(len / efield.grid().h)));
  double best = 0.0;
  Point where = a;
  for (int s = 0; s <= n; ++s) {
    const Point p = lerp(a, b, static_cast<double>(s) / n);
    const double d = efield.sample(p) - level;
    if (d > best) {
      best = d;
      where = p;
    }
  }
  return {best, where};
}

LevelDefect convexity_defect(const ExtendedField& efield, double level, double threshold) {
  if (!(level >= -efield.M * (1.0 + 1e-12)) || !(level <= 0.0)) {
    throw DomainError("convexity_defect: level must lie in [-M, 0]");
  }
  const Grid& g = efield.grid();
  LevelDefect out;
  out.level = level;
  std::vector<std::uint8_t> in_set(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (efield.in_domain(i) && efield.values[i] <= level) {
      in_set[i] = 1;
      ++out.set_size;
    }
  }
  if (out.set_size <= 1) {
    out.verdict = "trivial";
    return out;
  }

  std::vector<std::size_t> boundary;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!in_set[i]) continue;
    bool edge = false;
    for (int a = 0; a < g.dim && !edge; ++a)
      for (int s : {-1, 1}) {
        const auto nb = g.neighbor(i, a, s);
        if (!nb || !in_set[*nb]) {
          edge = true;
          break;
        }
      }
    if (edge) boundary.push_back(i);
  }

  // Stratified decimation: order boundary nodes by angle about their centroid and keep evenly spaced ones.
  const std::size_t max_nodes =
      static_cast<std::size_t>(std::floor((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(kMaxPairs))) / 2.0));
  if (boundary.size() > max_nodes) {
    Point c{0.0, 0.0, 0.0};
    for (auto i : boundary) {
      const Point p = g.position(i);
      for (int a = 0; a < 3; ++a) c[static_cast<std::size_t>(a)] += p[static_cast<std::size_t>(a)];
    }
    for (auto& v : c) v /= static_cast<double>(boundary.size());
    auto key = [&](std::size_t i) {
      const Point p = g.position(i);
      const double az = std::atan2(p[1] - c[1], p[0] - c[0]);
      const double el = g.dim == 3 ? std::atan2(p[2] - c[2], std::hypot(p[0] - c[0], p[1] - c[1])) : 0.0;
      return std::make_tuple(el, az, i);
    };
    std::stable_sort(boundary.begin(), boundary.end(), [&](std::size_t l, std::size_t r) { return key(l) < key(r); });
    std::vector<std::size_t> kept;
    kept.reserve(max_nodes);
    for (std::size_t j = 0; j < max_nodes; ++j) kept.push_back(boundary[j * boundary.size() / max_nodes]);
    boundary = std::move(kept);
  }

  for (std::size_t i = 0; i < boundary.size(); ++i) {
    const Point a = g.position(boundary[i]);
    for (std::size_t j = i + 1; j < boundary.size(); ++j) {
      const Point b = g.position(boundary[j]);
      ++out.pairs_tested;
      const auto [d, p] = segment_defect(efield, a, b, level);
      if (d > out.defect) {
        out.defect = d;
        out.witness = Witness{a, b, p};
      }
    }
  }

  const double cell = std::pow(g.h, g.dim);
  const double set_volume = static_cast<double>(out.set_size) * cell;
  if (g.dim == 2) {
    std::vector<Point> corners;
    corners.reserve(boundary.size() * 4);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!in_set[i]) continue;
      const Point p = g.position(i);
      for (double dx : {-0.5, 0.5})
        for (double dy : {-0.5, 0.5}) corners.push_back({p[0] + dx * g.h, p[1] + dy * g.h, 0.0});
    }
    out.hull_ratio = (hull_area(std::move(corners)) - set_volume) / set_volume;
  } else {
    Point lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!in_set[i]) continue;
      const Point p = g.position(i);
      for (std::size_t a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a] - 0.5 * g.h);
        hi[a] = std::max(hi[a], p[a] + 0.5 * g.h);
      }
    }
    out.hull_ratio = ((hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]) - set_volume) / set_volume;
  }
  out.verdict = out.defect > threshold ? "violation" : "within_threshold";
  return out;
}

double ConvexityReport::max_defect() const {
  double m = 0.0;
  for (const auto& l : levels) m = std::max(m, l.defect);
  return m;
}

double level_quantum(const ExtendedField& efield) { return efield.M * efield.grid().h; }

ConvexityReport quasiconvexity_report(const ExtendedField& efield, int L, double threshold,
                                      const std::vector<double>& extra_levels) {
  if (L < 2) throw DomainError("quasiconvexity_report: need at least two levels");
  ConvexityReport rep;
  rep.h = efield.grid().h;
  rep.M = efield.M;
  rep.threshold = threshold;
  rep.quantum = level_quantum(efield);
  std::vector<double> levels;
  for (int i = 0; i < L; ++i)
    levels.push_back(-efield.M + rep.quantum + i * (efield.M - 2.0 * rep.quantum) / (L - 1));
  levels.insert(levels.end(), extra_levels.begin(), extra_levels.end());
  for (double lv : levels) rep.levels.push_back(convexity_defect(efield, lv, threshold));
  for (std::size_t i = 1; i < rep.levels.size(); ++i)
    if (rep.levels[i].defect > rep.levels[rep.worst_level].defect) rep.worst_level = i;
  return rep;
}

double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

double ball_volume(int n, double r) { return unit_sphere_area(n) * std::pow(r, n) / n; }

namespace {

// Central differences of the extended field across the hole, so the slope jump at the hole boundary
// is part of the measure; nodes touching the exterior fall back to the cut-arm stencil.
std::optional<SymMatrix> extended_hessian(const ExtendedField& ef, std::size_t node, std::span<const double> x) {
  const auto& disc = *ef.disc;
  const Grid& g = disc.grid();
  const auto m = g.multi_index(node);
  const int rz = g.dim == 3 ? 1 : 0;
  bool full = true;
  for (int i = -1; i <= 1 && full; ++i)
    for (int j = -1; j <= 1 && full; ++j)
      for (int k = -rz; k <= rz && full; ++k)
        if (!ef.in_domain(g.index(m[0] + i, m[1] + j, m[2] + k))) full = false;
  if (!full) {
    const std::int64_t u = disc.unknown_of(node);
    if (u < 0) return std::nullopt;
    return disc.hessian(x, static_cast<std::size_t>(u));
  }
  auto at = [&](int di, int dj, int dk) { return ef.values[g.index(m[0] + di, m[1] + dj, m[2] + dk)]; };
  const double h2 = g.h * g.h;
  const double c = ef.values[node];
  SymMatrix H(g.dim);
  const std::array<std::array<int, 3>, 3> e{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int a = 0; a < g.dim; ++a) {
    const auto& ea = e[static_cast<std::size_t>(a)];
    H.set(a, a, (at(ea[0], ea[1], ea[2]) - 2.0 * c + at(-ea[0], -ea[1], -ea[2])) / h2);
    for (int b = a + 1; b < g.dim; ++b) {
      const auto& eb = e[static_cast<std::size_t>(b)];
      const double v = at(ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]) - at(ea[0] - eb[0], ea[1] - eb[1], ea[2] - eb[2]) -
                       at(-ea[0] + eb[0], -ea[1] + eb[1], -ea[2] + eb[2]) + at(-ea[0] - eb[0], -ea[1] - eb[1], -ea[2] - eb[2]);
      H.set(a, b, 0.25 * v / h2);
    }
  }
  return H;
}

}  // namespace

double hessian_measure(const ExtendedField& efield, const Ball& ball, int k) {
  const auto& disc = *efield.disc;
  const ConvexDomain& outer = disc.geometry().outer;
  if (!outer.contains(ball.center) || outer.min_boundary_distance(ball.center) < ball.radius) {
    throw DomainError("hessian_measure: ball is not contained in the outer domain");
  }
  if (k < 1 || k > disc.dim()) throw DomainError("hessian_measure: need 1 <= k <= d");
  const std::vector<double> x = unknown_vector(efield);
  const Grid& g = disc.grid();
  const double cell = std::pow(g.h, disc.dim());
  double total = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!efield.in_domain(node)) continue;
    if (distance(g.position(node), ball.center) > ball.radius) continue;
    const auto H = extended_hessian(efield, node, x);
    if (H) total += sigma_k(eigenvalues(*H), k) * cell;
  }
  return total;
}

double hessian_measure(const GridField& field, const Ball& ball, int k) {
  ExtendedField ef;
  ef.disc = field.disc;
  ef.values = field.values;
  ef.M = field.meta.M;
  const Grid& g = field.grid();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.node_class[i] == NodeClass::hole) ef.values[i] = -ef.M;
  return hessian_measure(ef, ball, k);
}

double hessian_measure_radial_flux(const RadialProfile& profile, double r) {
  if (r > profile.outer_radius()) throw DomainError("hessian_measure: ball is not contained in the outer domain");
  if (r <= profile.eps()) return 0.0;
  const int n = profile.n(), k = profile.k();
  return binomial(n - 1, k - 1) / k * unit_sphere_area(n) * std::pow(r, n - k) * std::pow(profile.du(r), k);
}

double hessian_measure_radial_quadrature(const RadialProfile& profile, double r) {
  if (r > profile.outer_radius()) throw DomainError("hessian_measure: ball is not contained in the outer domain");
  const double eps = profile.eps();
  if (r <= eps) return 0.0;
  const int n = profile.n(), k = profile.k();
  const double area = unit_sphere_area(n);
  auto density = [&](double s) {
    return radial_sigma_k(profile.du(s), profile.d2u(s), s, n, k) * area * std::pow(s, n - 1);
  };
  double interior = 0.0;
  const int pieces = 16;
  const double q = std::pow(r / eps, 1.0 / pieces);
  double lo = eps;
  for (int i = 1; i <= pieces; ++i) {
    const double hi = i == pieces ? r : eps * std::pow(q, i);
    double err = 0.0;
    interior += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(density, lo, hi, 8, 1e-11, &err);
    lo = hi;
  }
  const double inner_flux =
      binomial(n - 1, k - 1) / k * area * std::pow(eps, n - k) * std::pow(profile.du(eps), k);
  return interior + inner_flux;
}

std::pair<double, std::string> extrapolate_limit(const std::vector<double>& seq) {
  if (seq.empty()) throw DomainError("extrapolate_limit: empty sequence");
  if (seq.size() < 3) return {seq.back(), "last"};
  const double s0 = seq[seq.size() - 3], s1 = seq[seq.size() - 2], s2 = seq.back();
  const double d1 = s1 - s0, d2 = s2 - s1;
  if (d1 != 0.0) {
    const double ratio = d2 / d1;
    if (ratio > 0.0 && ratio < 1.0) return {s2 - d2 * d2 / (d2 - d1), "aitken"};
  }
  return {s2, "last"};
}

ExtendedField mollify(const ExtendedField& efield, double hm) {
  const Grid& g = efield.grid();
  if (hm < 2.0 * g.h * (1.0 - 1e-12)) throw DomainError("mollify: radius below 2h, kernel unresolvable");
  const int R = static_cast<int>(std::floor(hm / g.h));
  struct Tap {
    std::array<int, 3> off;
    double w;
  };
  std::vector<Tap> taps;
  double mass = 0.0;
  const int rz = g.dim == 3 ? R : 0;
  for (int i = -R; i <= R; ++i)
    for (int j = -R; j <= R; ++j)
      for (int k = -rz; k <= rz; ++k) {
        const double rho2 = (i * i + j * j + k * k) * g.h * g.h / (hm * hm);
        if (rho2 >= 1.0) continue;
        const double w = std::exp(-1.0 / (1.0 - rho2));
        taps.push_back({{i, j, k}, w});
        mass += w;
      }
  for (auto& t : taps) t.w /= mass;

  ExtendedField out = efield;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!efield.in_domain(idx)) continue;
    const auto m = g.multi_index(idx);
    double acc = 0.0;
    bool inside = true;
    for (const auto& t : taps) {
      std::array<int, 3> q{m[0] + t.off[0], m[1] + t.off[1], m[2] + t.off[2]};
      for (int a = 0; a < 3; ++a)
        if (q[static_cast<std::size_t>(a)] < 0 || q[static_cast<std::size_t>(a)] >= g.counts[static_cast<std::size_t>(a)])
          inside = false;
      if (!inside) break;
      const std::size_t qi = g.index(q[0], q[1], q[2]);
      if (!efield.in_domain(qi)) {
        inside = false;
        break;
      }
      acc += t.w * efield.values[qi];
    }
    if (inside) out.values[idx] = acc;
  }
  return out;
}

bool EstimateReport::all_pass() const {
  for (const auto& c : checks)
    if (c.applicable && !c.pass) return false;
  return true;
}

const EstimateCheck* EstimateReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

EstimateReport verify_estimates(const GridField& field, const RingDomain& ring, const GridField* psi) {
  const auto& disc = *field.disc;
  const Grid& g = disc.grid();
  const ConvexDomain& outer = ring.outer();
  const Point x0 = ring.hole_center();
  const double eps = ring.eps(), M = field.meta.M, h = g.h;
  const int n = field.meta.n_equation, k = field.meta.k;
  const auto dirs = probe_directions(g.dim);
  const double tol = 1e-9 * std::max(1.0, M);

  const LowerBarrier lower(x0, eps, M, n, k);
  const UpperBarrier phi(x0, eps, M, n, k, outer);

  auto far_from_boundary = [&](const Point& p, double margin) {
    if (distance(p, x0) - eps <= margin) return false;
    for (const auto& d : dirs)
      if (!outer.contains({p[0] + margin * d[0], p[1] + margin * d[1], p[2] + margin * d[2]})) return false;
    return true;
  };

  EstimateReport rep;
  EstimateCheck lo{"c0_lower_barrier"}, up_psi{"c0_hole_free_upper"}, up_phi{"c0_phi_upper"};
  lo.applicable = lower.radial_value(outer.max_boundary_distance(x0)) <= 0.0;
  if (!lo.applicable) lo.note = "lower barrier is positive on the outer boundary (M below the centered bound)";
  double psi_min = std::numeric_limits<double>::infinity();
  if (psi) {
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::isfinite(psi->values[i])) psi_min = std::min(psi_min, psi->values[i]);
    up_psi.applicable = psi_min >= -M;
    if (!up_psi.applicable) up_psi.note = "hole-free solution drops below -M";
  } else {
    up_psi.applicable = false;
    up_psi.note = "no hole-free solution supplied";
  }
  lo.worst = up_psi.worst = up_phi.worst = std::numeric_limits<double>::infinity();

  auto record = [&](EstimateCheck& c, double margin, const Point& p) {
    ++c.checked;
    if (margin < -tol) ++c.violations;
    if (margin < c.worst) {
      c.worst = margin;
      c.worst_location = p;
    }
  };
  for (std::size_t u = 0; u < disc.unknowns(); ++u) {
    const std::size_t node = disc.node_of(u);
    const Point p = g.position(node);
    if (!far_from_boundary(p, 2.0 * h)) continue;
    const double v = field.values[node];
    if (lo.applicable) record(lo, v - lower.value(p), p);
    if (up_psi.applicable) record(up_psi, psi->values[node] - v, p);
    record(up_phi, phi.value(p) - v, p);
  }
  for (auto* c : {&lo, &up_psi, &up_phi}) {
    c->pass = c->violations == 0;
    if (!c->applicable || c->checked == 0) c->worst = 0.0;
  }

  // Normal slopes on the hole boundary by a one-sided second-order difference through interpolated values.
  EstimateCheck slope{"c1_normal_slope"};
  {
    ExtendedField ef = extend_utilde(field, ring);
    std::vector<Point> normals;
    if (g.dim == 2) {
      for (int j = 0; j < 32; ++j) {
        const double t = 2.0 * std::numbers::pi * j / 32;
        normals.push_back({std::cos(t), std::sin(t), 0.0});
      }
    } else {
      normals = dirs;
    }
    const double s = 2.0 * h;
    const double lower_slope = lower.radial_slope(eps);
    const double upper_slope = phi.radial_slope(eps);
    const double slack = 0.05 * upper_slope;
    slope.worst = std::numeric_limits<double>::infinity();
    for (const auto& e : normals) {
      const Point p1{x0[0] + (eps + s) * e[0], x0[1] + (eps + s) * e[1], x0[2] + (eps + s) * e[2]};
      const Point p2{x0[0] + (eps + 2 * s) * e[0], x0[1] + (eps + 2 * s) * e[1], x0[2] + (eps + 2 * s) * e[2]};
      if (!outer.contains(p2)) continue;
      const double du = (3.0 * M + 4.0 * ef.sample(p1) - ef.sample(p2)) / (2.0 * s);
      double margin = upper_slope + slack - du;
      if (lo.applicable) margin = std::min(margin, du - lower_slope + slack);
      ++slope.checked;
      if (margin < 0.0) ++slope.violations;
      if (margin < slope.worst) {
        slope.worst = margin;
        slope.worst_location = {x0[0] + eps * e[0], x0[1] + eps * e[1], x0[2] + eps * e[2]};
      }
    }
    slope.pass = slope.violations == 0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "bounds [%.6g, %.6g] with slack %.3g%s", lower_slope, upper_slope, slack,
                  lo.applicable ? "" : "; lower bound skipped");
    slope.note = buf;
  }

  // Interior gradient constant sup |Du(y)| r / osc_{B_r(y)} u over a lattice of interior balls.
  EstimateCheck interior{"interior_gradient_constant"};
  {
    const double r = 0.125 * outer.min_boundary_distance(outer.center());
    const int stride = std::max(1, static_cast<int>(std::lround(r / h)));
    const int reach = static_cast<int>(std::ceil(r / h));
    for (std::size_t u = 0; u < disc.unknowns(); ++u) {
      const std::size_t node = disc.node_of(u);
      const auto m = g.multi_index(node);
      bool on_lattice = true;
      for (int a = 0; a < g.dim; ++a) on_lattice = on_lattice && m[static_cast<std::size_t>(a)] % stride == 0;
      if (!on_lattice) continue;
      const Point y = g.position(node);
      if (!far_from_boundary(y, r + 2.0 * h)) continue;
      double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
      const int rz = g.dim == 3 ? reach : 0;
      for (int i = -reach; i <= reach; ++i)
        for (int j = -reach; j <= reach; ++j)
          for (int kk = -rz; kk <= rz; ++kk) {
            const std::size_t q = g.index(m[0] + i, m[1] + j, m[2] + kk);
            if (distance(g.position(q), y) > r) continue;
            vmin = std::min(vmin, field.values[q]);
            vmax = std::max(vmax, field.values[q]);
          }
      const double osc = vmax - vmin;
      if (!(osc > 0.0)) continue;
      const double c = norm(discrete_gradient(field, node)) * r / osc;
      ++interior.checked;
      if (c > interior.worst) {
        interior.worst = c;
        interior.worst_location = y;
      }
    }
    interior.pass = std::isfinite(interior.worst) && interior.checked > 0;
    rep.gradient_constant = interior.worst;
    interior.note = "ball radius " + std::to_string(r);
  }

  EstimateCheck gmax{"gradient_maximum_on_boundary"};
  {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t u = 0; u < disc.unknowns(); ++u) {
      const double gn = norm(discrete_gradient(field, disc.node_of(u)));
      if (gn > best) {
        best = gn;
        arg = disc.node_of(u);
      }
    }
    // Within one cell of the boundary: some node of the surrounding cell block is not an unknown.
    const auto m = g.multi_index(arg);
    bool near = g.node_class[arg] == NodeClass::near_inner || g.node_class[arg] == NodeClass::near_outer;
    const int rz = g.dim == 3 ? 1 : 0;
    for (int i = -1; i <= 1 && !near; ++i)
      for (int j = -1; j <= 1 && !near; ++j)
        for (int kk = -rz; kk <= rz && !near; ++kk)
          if (!g.is_unknown(g.index(m[0] + i, m[1] + j, m[2] + kk))) near = true;
    gmax.checked = 1;
    gmax.pass = near;
    gmax.violations = near ? 0 : 1;
    gmax.worst = best;
    gmax.worst_location = g.position(arg);
    gmax.note = std::string("argmax node class ") + to_string(g.node_class[arg]);
  }

  rep.checks = {lo, up_psi, up_phi, slope, interior, gmax};
  return rep;
}

std::vector<Polyline> level_set_polylines(const ExtendedField& efield, double level) {
  const Grid& g = efield.grid();
  if (g.dim != 2) throw DomainError("level_set_polylines: 2-D fields only");
  auto val = [&](int i, int j) {
    const double v = efield.values[g.index(i, j)];
    return std::isfinite(v) ? v : 0.0;
  };
  // Edge key: lower node index times two plus the axis of the edge.
  std::map<std::size_t, Point> crossing;
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  auto edge = [&](int i, int j, int axis) -> std::size_t {
    const std::size_t key = g.index(i, j) * 2 + static_cast<std::size_t>(axis);
    if (!crossing.count(key)) {
      const int i2 = axis == 0 ? i + 1 : i, j2 = axis == 0 ? j : j + 1;
      const double va = val(i, j), vb = val(i2, j2);
      const double t = (level - va) / (vb - va);
      crossing[key] = lerp(g.position(i, j), g.position(i2, j2), t);
    }
    return key;
  };
  for (int i = 0; i + 1 < g.counts[0]; ++i) {
    for (int j = 0; j + 1 < g.counts[1]; ++j) {
      const double c[4] = {val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)};
      bool below[4];
      for (int q = 0; q < 4; ++q) below[q] = c[q] <= level;
      // Edges in cyclic order: c0-c1, c1-c2, c3-c2, c0-c3.
      std::vector<std::size_t> cut;
      std::size_t keys[4] = {0, 0, 0, 0};
      bool hit[4] = {below[0] != below[1], below[1] != below[2], below[3] != below[2], below[0] != below[3]};
      if (hit[0]) keys[0] = edge(i, j, 0);
      if (hit[1]) keys[1] = edge(i + 1, j, 1);
      if (hit[2]) keys[2] = edge(i, j + 1, 0);
      if (hit[3]) keys[3] = edge(i, j, 1);
      const int count = hit[0] + hit[1] + hit[2] + hit[3];
      if (count == 2) {
        std::vector<std::size_t> ks;
        for (int q = 0; q < 4; ++q)
          if (hit[q]) ks.push_back(keys[q]);
        segments.emplace_back(ks[0], ks[1]);
      } else if (count == 4) {
        const bool center_below = 0.25 * (c[0] + c[1] + c[2] + c[3]) <= level;
        if (center_below == below[0]) {
          segments.emplace_back(keys[0], keys[1]);
          segments.emplace_back(keys[2], keys[3]);
        } else {
          segments.emplace_back(keys[3], keys[0]);
          segments.emplace_back(keys[1], keys[2]);
        }
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> adj;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    adj[segments[s].first].push_back(s);
    adj[segments[s].second].push_back(s);
  }
  std::vector<std::uint8_t> used(segments.size(), 0);
  std::vector<Polyline> lines;
  auto walk = [&](std::size_t start) {
    Polyline pl;
    pl.points.push_back(crossing[start]);
    std::size_t cur = start;
    while (true) {
      std::size_t next_seg = segments.size();
      for (auto s : adj[cur])
        if (!used[s]) {
          next_seg = s;
          break;
        }
      if (next_seg == segments.size()) break;
      used[next_seg] = 1;
      cur = segments[next_seg].first == cur ? segments[next_seg].second : segments[next_seg].first;
      pl.points.push_back(crossing[cur]);
      if (cur == start) {
        pl.closed = true;
        break;
      }
    }
    lines.push_back(std::move(pl));
  };
  for (const auto& [key, segs] : adj)
    if (segs.size() == 1 && !used[segs[0]]) walk(key);
  for (const auto& [key, segs] : adj)
    for (auto s : segs)
      if (!used[s]) walk(key);
  return lines;
}

std::string polylines_csv(const std::vector<Polyline>& lines) {
  std::string out = "polyline,vertex,x,y,closed\n";
  char buf[160];
  for (std::size_t l = 0; l < lines.size(); ++l)
    for (std::size_t v = 0; v < lines[l].points.size(); ++v) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%d\n", l, v, lines[l].points[v][0], lines[l].points[v][1],
                    lines[l].closed ? 1 : 0);
      out += buf;
    }
  return out;
}

}  // namespace khess
