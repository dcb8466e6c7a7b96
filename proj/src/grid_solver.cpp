#include "khess/grid_solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "khess/barriers.hpp"
#include "khess/errors.hpp"

namespace khess {

namespace {

constexpr std::array<std::pair<int, int>, 3> kPairs{{{0, 1}, {0, 2}, {1, 2}}};

std::optional<std::size_t> diagonal(const Grid& g, std::size_t idx, int a, int sa, int b, int sb) {
  const auto first = g.neighbor(idx, a, sa);
  if (!first) return std::nullopt;
  return g.neighbor(*first, b, sb);
}

double arm_value(const Arm& arm, std::span<const double> x) {
  return arm.unknown >= 0 ? x[static_cast<std::size_t>(arm.unknown)] : arm.g;
}

}  // namespace

BoundaryData BoundaryData::constant(double M) {
  return {[](const Point&) { return 0.0; }, [M](const Point&) { return -M; }};
}

Discretization::Discretization(Grid grid, BoundaryGeometry geometry, BoundaryData data)
    : grid_(classify_nodes(std::move(grid), geometry)), geometry_(std::move(geometry)) {
  const std::size_t n = grid_.size();
  const int d = grid_.dim;
  unknown_of_.assign(n, -1);
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (grid_.is_unknown(idx)) {
      unknown_of_[idx] = static_cast<std::int64_t>(nodes_.size());
      nodes_.push_back(idx);
    }
  }

  arms_.resize(nodes_.size() * static_cast<std::size_t>(2 * d));
  for (std::size_t u = 0; u < nodes_.size(); ++u) {
    const std::size_t idx = nodes_[u];
    const Point x = grid_.position(idx);
    for (int a = 0; a < d; ++a) {
      for (int side : {-1, 1}) {
        Arm& arm = arms_[u * static_cast<std::size_t>(2 * d) + static_cast<std::size_t>(2 * a + (side > 0 ? 1 : 0))];
        const auto nb = grid_.neighbor(idx, a, side);
        if (nb && grid_.is_unknown(*nb)) {
          arm.unknown = unknown_of_[*nb];
          continue;
        }
        Point dir{0.0, 0.0, 0.0};
        dir[static_cast<std::size_t>(a)] = side;
        const CutArm cut = boundary_intersection(x, dir, grid_.h, geometry_);
        arm.unknown = -1;
        arm.theta = cut.theta;
        arm.g = cut.boundary == BoundaryKind::inner ? data.inner(cut.point) : data.outer(cut.point);
      }
    }
  }

  const int npairs = d == 2 ? 1 : 3;
  const double h2 = grid_.h * grid_.h;
  mixed_offsets_.reserve(nodes_.size() * static_cast<std::size_t>(npairs) + 1);
  mixed_fallback_.assign(nodes_.size(), 0);
  for (std::size_t u = 0; u < nodes_.size(); ++u) {
    const std::size_t idx = nodes_[u];
    for (int p = 0; p < npairs; ++p) {
      mixed_offsets_.push_back(mixed_.size());
      const auto [a, b] = kPairs[static_cast<std::size_t>(p)];
      auto unk = [&](std::optional<std::size_t> node) -> std::int64_t {
        return node && grid_.is_unknown(*node) ? unknown_of_[*node] : -1;
      };
      const std::int64_t pp = unk(diagonal(grid_, idx, a, 1, b, 1));
      const std::int64_t pm = unk(diagonal(grid_, idx, a, 1, b, -1));
      const std::int64_t mp = unk(diagonal(grid_, idx, a, -1, b, 1));
      const std::int64_t mm = unk(diagonal(grid_, idx, a, -1, b, -1));
      if (pp >= 0 && pm >= 0 && mp >= 0 && mm >= 0) {
        const double c = 0.25 / h2;
        mixed_.push_back({pp, c});
        mixed_.push_back({pm, -c});
        mixed_.push_back({mp, -c});
        mixed_.push_back({mm, c});
        continue;
      }
      mixed_fallback_[u] = 1;
      struct Quadrant {
        int sa, sb;
        std::int64_t diag, na, nb;
      };
      std::vector<Quadrant> valid;
      for (int sa : {1, -1}) {
        for (int sb : {1, -1}) {
          const std::int64_t dg = unk(diagonal(grid_, idx, a, sa, b, sb));
          const std::int64_t na = unk(grid_.neighbor(idx, a, sa));
          const std::int64_t nb = unk(grid_.neighbor(idx, b, sb));
          if (dg >= 0 && na >= 0 && nb >= 0) valid.push_back({sa, sb, dg, na, nb});
        }
      }
      if (valid.empty()) continue;
      const double w = 1.0 / (static_cast<double>(valid.size()) * h2);
      for (const auto& q : valid) {
        const double s = q.sa * q.sb * w;
        mixed_.push_back({q.diag, s});
        mixed_.push_back({q.na, -s});
        mixed_.push_back({q.nb, -s});
        mixed_.push_back({static_cast<std::int64_t>(u), s});
      }
    }
  }
  mixed_offsets_.push_back(mixed_.size());
}

std::size_t Discretization::mixed_fallback_count() const {
  return static_cast<std::size_t>(std::count(mixed_fallback_.begin(), mixed_fallback_.end(), std::uint8_t{1}));
}

std::span<const Discretization::Term> Discretization::mixed_terms(std::size_t unknown, int pair) const {
  const std::size_t slot = unknown * static_cast<std::size_t>(pairs()) + static_cast<std::size_t>(pair);
  return {mixed_.data() + mixed_offsets_[slot], mixed_offsets_[slot + 1] - mixed_offsets_[slot]};
}

SymMatrix Discretization::hessian(std::span<const double> x, std::size_t unknown) const {
  const int d = grid_.dim;
  const double h = grid_.h;
  const double up = x[unknown];
  SymMatrix H(d);
  for (int a = 0; a < d; ++a) {
    const Arm& l = arm(unknown, a, -1);
    const Arm& r = arm(unknown, a, 1);
    const double hl = l.theta * h, hr = r.theta * h;
    const double ul = arm_value(l, x), ur = arm_value(r, x);
    H.set(a, a, 2.0 / (hl + hr) * ((ur - up) / hr - (up - ul) / hl));
  }
  for (int p = 0; p < pairs(); ++p) {
    double s = 0.0;
    for (const Term& t : mixed_terms(unknown, p)) s += t.coef * x[static_cast<std::size_t>(t.unknown)];
    const auto [a, b] = kPairs[static_cast<std::size_t>(p)];
    H.set(a, b, s);
  }
  return H;
}

Point Discretization::gradient(std::span<const double> x, std::size_t unknown) const {
  Point g{0.0, 0.0, 0.0};
  const double h = grid_.h;
  const double up = x[unknown];
  for (int a = 0; a < grid_.dim; ++a) {
    const Arm& l = arm(unknown, a, -1);
    const Arm& r = arm(unknown, a, 1);
    const double hl = l.theta * h, hr = r.theta * h;
    const double ul = arm_value(l, x), ur = arm_value(r, x);
    g[static_cast<std::size_t>(a)] = (hl * hl * (ur - up) + hr * hr * (up - ul)) / (hl * hr * (hl + hr));
  }
  return g;
}

std::vector<double> GridField::unknown_values() const {
  std::vector<double> x(disc->unknowns());
  for (std::size_t u = 0; u < x.size(); ++u) x[u] = values[disc->node_of(u)];
  return x;
}

double Residual::inf_norm() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (admissible[i]) m = std::max(m, std::abs(values[i]));
  return inadmissible > 0 ? std::numeric_limits<double>::infinity() : m;
}

Residual residual(const Discretization& disc, std::span<const double> x, int k, double gamma_tau) {
  if (k < 1 || k > disc.dim()) throw DomainError("residual: need 1 <= k <= d");
  Residual r;
  r.values.assign(disc.unknowns(), 0.0);
  r.admissible.assign(disc.unknowns(), 1);
  for (std::size_t u = 0; u < disc.unknowns(); ++u) {
    const SymMatrix H = disc.hessian(x, u);
    const auto lam = eigenvalues(H);
    if (k == 1) {
      r.values[u] = H(0, 0) + H(1, 1) + (disc.dim() == 3 ? H(2, 2) : 0.0) - 1.0;
      continue;
    }
    if (!in_gamma_k_tol(lam, k, gamma_tau)) {
      r.admissible[u] = 0;
      r.values[u] = std::numeric_limits<double>::quiet_NaN();
      ++r.inadmissible;
      continue;
    }
    const double s = sigma_prefix(lam, k)[static_cast<std::size_t>(k - 1)];
    r.values[u] = std::pow(std::max(s, 0.0), 1.0 / k) - 1.0;
  }
  return r;
}

Residual residual(const GridField& field, int k, double gamma_tau) {
  return residual(*field.disc, field.unknown_values(), k, gamma_tau);
}

SymMatrix discrete_hessian(const GridField& field, std::size_t node) {
  const std::int64_t u = field.disc->unknown_of(node);
  if (u < 0) throw DomainError("discrete_hessian: node is not an unknown of the discretization");
  return field.disc->hessian(field.unknown_values(), static_cast<std::size_t>(u));
}

Point discrete_gradient(const GridField& field, std::size_t node) {
  const std::int64_t u = field.disc->unknown_of(node);
  if (u < 0) throw DomainError("discrete_gradient: node is not an unknown of the discretization");
  // Only the stencil neighbors are read, so a full copy is avoided by indexing directly.
  const auto& disc = *field.disc;
  const double h = disc.grid().h;
  Point g{0.0, 0.0, 0.0};
  const double up = field.values[node];
  for (int a = 0; a < disc.dim(); ++a) {
    const Arm& l = disc.arm(static_cast<std::size_t>(u), a, -1);
    const Arm& r = disc.arm(static_cast<std::size_t>(u), a, 1);
    const double hl = l.theta * h, hr = r.theta * h;
    const double ul = l.unknown >= 0 ? field.values[disc.node_of(static_cast<std::size_t>(l.unknown))] : l.g;
    const double ur = r.unknown >= 0 ? field.values[disc.node_of(static_cast<std::size_t>(r.unknown))] : r.g;
    g[static_cast<std::size_t>(a)] = (hl * hl * (ur - up) + hr * hr * (up - ul)) / (hl * hr * (hl + hr));
  }
  return g;
}

SparseRows residual_jacobian(const Discretization& disc, std::span<const double> x, int k) {
  const int d = disc.dim();
  const double h = disc.grid().h;
  SparseRows rows;
  rows.row_offsets.reserve(disc.unknowns() + 1);
  std::vector<std::pair<std::size_t, double>> entries;
  for (std::size_t u = 0; u < disc.unknowns(); ++u) {
    rows.row_offsets.push_back(rows.cols.size());
    entries.clear();
    double f = 1.0;
    SymMatrix G = SymMatrix::identity(d);
    if (k > 1) {
      const SymMatrix H = disc.hessian(x, u);
      const auto lam = eigenvalues(H);
      const double s = sigma_prefix(lam, k)[static_cast<std::size_t>(k - 1)];
      f = std::pow(std::max(s, 1e-12), 1.0 / k - 1.0) / k;
      G = sigma_k_gradient(H, k);
    }
    for (int a = 0; a < d; ++a) {
      const double w = f * G(a, a);
      const Arm& l = disc.arm(u, a, -1);
      const Arm& r = disc.arm(u, a, 1);
      const double hl = l.theta * h, hr = r.theta * h;
      entries.emplace_back(u, -2.0 / (hl * hr) * w);
      if (l.unknown >= 0) entries.emplace_back(static_cast<std::size_t>(l.unknown), 2.0 / (hl * (hl + hr)) * w);
      if (r.unknown >= 0) entries.emplace_back(static_cast<std::size_t>(r.unknown), 2.0 / (hr * (hl + hr)) * w);
    }
    if (k > 1) {
      for (int p = 0; p < disc.pairs(); ++p) {
        const auto [a, b] = kPairs[static_cast<std::size_t>(p)];
        const double w = 2.0 * f * G(a, b);
        if (w == 0.0) continue;
        for (const auto& t : disc.mixed_terms(u, p)) entries.emplace_back(static_cast<std::size_t>(t.unknown), t.coef * w);
      }
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    for (std::size_t i = 0; i < entries.size();) {
      std::size_t j = i;
      double v = 0.0;
      while (j < entries.size() && entries[j].first == entries[i].first) v += entries[j++].second;
      rows.cols.push_back(entries[i].first);
      rows.vals.push_back(v);
      i = j;
    }
  }
  rows.row_offsets.push_back(rows.cols.size());
  return rows;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

SpMat to_eigen(const SparseRows& rows, std::size_t n) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(rows.vals.size());
  for (std::size_t r = 0; r + 1 < rows.row_offsets.size(); ++r)
    for (std::size_t i = rows.row_offsets[r]; i < rows.row_offsets[r + 1]; ++i)
      trips.emplace_back(static_cast<int>(r), static_cast<int>(rows.cols[i]), rows.vals[i]);
  SpMat A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

/// Direct sparse LU in 2-D, ILUT-preconditioned BiCGSTAB in 3-D.
class LinearSolver {
 public:
  explicit LinearSolver(int dim) : dim_(dim) {}

  Eigen::VectorXd solve(const SpMat& A, const Eigen::VectorXd& b) {
    if (dim_ == 2) {
      if (!analyzed_) {
        lu_.analyzePattern(A);
        analyzed_ = true;
      }
      lu_.factorize(A);
      if (lu_.info() != Eigen::Success) throw Diverged("sparse LU factorization failed");
      Eigen::VectorXd x = lu_.solve(b);
      if (lu_.info() != Eigen::Success) throw Diverged("sparse LU solve failed");
      return x;
    }
    Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> it;
    it.preconditioner().setDroptol(1e-5);
    it.preconditioner().setFillfactor(20);
    it.setTolerance(1e-10);
    it.setMaxIterations(5000);
    it.compute(A);
    Eigen::VectorXd x = it.solve(b);
    if (it.info() != Eigen::Success) throw Diverged("BiCGSTAB did not reach the relative tolerance 1e-10");
    return x;
  }

 private:
  int dim_;
  bool analyzed_ = false;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
};

GridField make_field(std::shared_ptr<const Discretization> disc, std::span<const double> x, const FieldMeta& meta) {
  GridField f;
  f.disc = std::move(disc);
  f.meta = meta;
  const Grid& g = f.disc->grid();
  f.values.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t idx = 0; idx < g.size(); ++idx)
    if (g.node_class[idx] == NodeClass::hole) f.values[idx] = -meta.M;
  for (std::size_t u = 0; u < x.size(); ++u) f.values[f.disc->node_of(u)] = x[u];
  return f;
}

std::vector<double> sample(const Discretization& disc, const std::function<double(const Point&)>& fn) {
  std::vector<double> x(disc.unknowns());
  for (std::size_t u = 0; u < x.size(); ++u) x[u] = fn(disc.grid().position(disc.node_of(u)));
  return x;
}

struct Candidate {
  std::string name;
  std::vector<double> values;
};

SolveReport newton_solve(const Discretization& disc, std::vector<double>& x, int k, const SolveOptions& opt,
                         std::vector<Candidate> candidates) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  const std::size_t n = disc.unknowns();
  LinearSolver solver(disc.dim());

  if (k == 1) {
    // Linear problem: J x = 1 - H(0) with H(0) the boundary contributions.
    const std::vector<double> zero(n, 0.0);
    const Residual r0 = residual(disc, zero, 1);
    const SpMat J = to_eigen(residual_jacobian(disc, zero, 1), n);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) b[static_cast<Eigen::Index>(i)] = -r0.values[i];
    const Eigen::VectorXd sol = solver.solve(J, b);
    x.assign(sol.data(), sol.data() + sol.size());
    rep.iterations = 1;
    rep.initialization = "direct";
    rep.residual_inf = residual(disc, x, 1).inf_norm();
    rep.converged = rep.residual_inf <= opt.tolerance;
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!rep.converged) throw Diverged("linear solve residual " + std::to_string(rep.residual_inf) + " above tolerance");
    return rep;
  }

  Residual r;
  bool found = false;
  for (auto& c : candidates) {
    r = residual(disc, c.values, k, opt.gamma_tau);
    if (r.inadmissible == 0) {
      x = std::move(c.values);
      rep.initialization = c.name;
      found = true;
      break;
    }
    ++rep.repair_count;
  }
  if (!found) throw NotAdmissible("no initial field lies in the relaxed Garding cone");

  double rnorm = r.inf_norm();
  const double tau = opt.pseudo_time_factor * disc.grid().h * disc.grid().h;
  std::vector<double> history{rnorm};
  while (rnorm > opt.tolerance) {
    if (rep.iterations >= opt.max_iterations) {
      throw Diverged("Newton iteration cap reached with residual " + std::to_string(rnorm));
    }
    const std::size_t w = static_cast<std::size_t>(opt.stagnation_window);
    if (w > 0 && history.size() > w && rnorm > 0.9 * history[history.size() - 1 - w]) {
      throw Diverged("residual stagnated at " + std::to_string(rnorm) + " after " + std::to_string(rep.iterations) +
                     " iterations");
    }
    ++rep.iterations;
    const SpMat J = to_eigen(residual_jacobian(disc, x, k), n);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) b[static_cast<Eigen::Index>(i)] = -r.values[i];
    Eigen::VectorXd dx;
    bool step_ok = true;
    try {
      dx = solver.solve(J, b);
    } catch (const Diverged&) {
      step_ok = false;
    }
    double alpha = 1.0;
    bool accepted = false;
    std::vector<double> trial(n);
    while (step_ok && alpha >= opt.damping_floor) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + alpha * dx[static_cast<Eigen::Index>(i)];
      Residual rt = residual(disc, trial, k, opt.gamma_tau);
      if (rt.inadmissible == 0 && rt.inf_norm() < rnorm) {
        x.swap(trial);
        r = std::move(rt);
        rnorm = r.inf_norm();
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    rep.damping_history.push_back(accepted ? alpha : 0.0);
    if (accepted) {
      history.push_back(rnorm);
      continue;
    }

    // Pseudo-time relaxation u <- u + tau F(u) until Newton can take a step again.
    for (int s = 0; s < opt.pseudo_time_batch; ++s) {
      double t = tau;
      for (int tries = 0; tries < 30; ++tries) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * r.values[i];
        Residual rt = residual(disc, trial, k, opt.gamma_tau);
        if (rt.inadmissible == 0) {
          x.swap(trial);
          r = std::move(rt);
          break;
        }
        t *= 0.5;
      }
      ++rep.pseudo_time_steps;
    }
    rnorm = r.inf_norm();
    history.push_back(rnorm);
  }
  rep.residual_inf = rnorm;
  rep.converged = true;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// (|x - c|^2 - rho^2) C(n,k)^{-1/k} / 2 with rho the farthest boundary distance: solves sigma_k = 1 and
// sits below both boundary data, so its discrete Hessian is admissible.
std::vector<double> shifted_quadratic(const Discretization& disc, const Point& c, double rho, int n, int k) {
  const double curv = std::pow(binomial(n, k), -1.0 / k);
  return sample(disc, [&](const Point& x) {
    const double r = distance(x, c);
    return 0.5 * curv * (r * r - rho * rho);
  });
}

}  // namespace

std::pair<GridField, SolveReport> solve_ring(const RingDomain& ring, const Grid& grid, double M, int k,
                                             const SolveOptions& options) {
  if (!(M > 0.0)) throw DomainError("solve_ring: M must be positive");
  const int d = grid.dim;
  if (k < 1 || k > d) throw DomainError("solve_ring: need 1 <= k <= d");
  auto disc = std::make_shared<const Discretization>(grid, BoundaryGeometry::from(ring), BoundaryData::constant(M));

  std::vector<Candidate> cands;
  if (options.initial) cands.push_back({"explicit", *options.initial});
  const LowerBarrier lower(ring.hole_center(), ring.eps(), M, d, k);
  const auto lower_vals = sample(*disc, [&](const Point& x) { return lower.value(x); });
  if (options.psi) {
    const GridField& psi = *options.psi;
    double pmin = 0.0;
    for (std::size_t u = 0; u < psi.disc->unknowns(); ++u) pmin = std::min(pmin, psi.values[psi.disc->node_of(u)]);
    const double C = pmin < 0.0 ? std::max(1.0, M / -pmin) : 1.0;
    std::vector<double> v(disc->unknowns());
    for (std::size_t u = 0; u < v.size(); ++u) {
      const double pv = psi.values[disc->node_of(u)];
      v[u] = std::isfinite(pv) ? std::max(lower_vals[u], C * pv) : lower_vals[u];
    }
    cands.push_back({"max(lower_barrier, C psi)", std::move(v)});
  }
  cands.push_back({"lower_barrier", lower_vals});
  const double rho = ring.outer().max_boundary_distance(ring.hole_center());
  cands.push_back({"shifted_quadratic", shifted_quadratic(*disc, ring.hole_center(), rho, d, k)});

  std::vector<double> x;
  SolveReport rep = newton_solve(*disc, x, k, options, std::move(cands));
  FieldMeta meta{d, k, M, ring.eps()};
  return {make_field(disc, x, meta), rep};
}

GridField solve_hole_free(const ConvexDomain& domain, const Grid& grid, int k, const SolveOptions& options,
                          SolveReport* report) {
  const int d = grid.dim;
  if (k < 1 || k > d) throw DomainError("solve_hole_free: need 1 <= k <= d");
  auto disc = std::make_shared<const Discretization>(grid, BoundaryGeometry::from(domain), BoundaryData::constant(0.0));
  std::vector<Candidate> cands;
  if (options.initial) cands.push_back({"explicit", *options.initial});
  const double rho = domain.max_boundary_distance(domain.center());
  cands.push_back({"shifted_quadratic", shifted_quadratic(*disc, domain.center(), rho, d, k)});
  std::vector<double> x;
  SolveReport rep = newton_solve(*disc, x, k, options, std::move(cands));
  if (report) *report = rep;
  return make_field(disc, x, FieldMeta{d, k, 0.0, 0.0});
}

GridField scaled_supersolution(const GridField& psi, double C, double M) {
  double pmin = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < psi.disc->unknowns(); ++u) pmin = std::min(pmin, psi.values[psi.disc->node_of(u)]);
  if (C * pmin > -M) {
    throw InsufficientScaling("C min psi = " + std::to_string(C * pmin) + " exceeds -M = " + std::to_string(-M));
  }
  GridField out = psi;
  for (double& v : out.values)
    if (std::isfinite(v)) v *= C;
  return out;
}

std::size_t argmin_node(const GridField& field) {
  const auto& disc = *field.disc;
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < disc.unknowns(); ++u) m = std::min(m, field.values[disc.node_of(u)]);
  for (std::size_t u = 0; u < disc.unknowns(); ++u)
    if (field.values[disc.node_of(u)] <= m + 1e-12) return disc.node_of(u);
  throw DomainError("argmin_node: field has no unknowns");
}

std::string field_csv(const GridField& field) {
  const Grid& g = field.grid();
  std::string out = g.dim == 3 ? "i,j,k,x,y,z,value,node_class\n" : "i,j,x,y,value,node_class\n";
  char buf[256];
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const auto m = g.multi_index(idx);
    const Point p = g.position(idx);
    const double v = field.values[idx];
    const char* cls = to_string(g.node_class[idx]);
    if (g.dim == 3)
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%s\n", m[0], m[1], m[2], p[0], p[1], p[2], v, cls);
    else
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%s\n", m[0], m[1], p[0], p[1], v, cls);
    out += buf;
  }
  return out;
}

}  // namespace khess
