#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "khess/geometry.hpp"
#include "khess/symfun.hpp"

namespace khess {

/// Dirichlet data on the two boundary components.
struct BoundaryData {
  std::function<double(const Point&)> outer;
  std::function<double(const Point&)> inner;

  /// 0 on the outer boundary, -M on the hole.
  static BoundaryData constant(double M);
};

/// One side of a second-difference stencil: an unknown neighbor, or a cut arm of length theta h
/// ending on the boundary with Dirichlet value g.
struct Arm {
  std::int64_t unknown = -1;
  double theta = 1.0;
  double g = 0.0;
};

/// Node classification plus the linear stencils realizing the discrete Hessian D^2_h u.
/// Pure second derivatives use Shortley-Weller unequal arms; mixed derivatives are central when all
/// four diagonal neighbors are unknowns and otherwise average the available one-sided quadrants.
class Discretization {
 public:
  Discretization(Grid grid, BoundaryGeometry geometry, BoundaryData data);

  const Grid& grid() const { return grid_; }
  const BoundaryGeometry& geometry() const { return geometry_; }
  int dim() const { return grid_.dim; }
  std::size_t unknowns() const { return nodes_.size(); }
  std::size_t node_of(std::size_t unknown) const { return nodes_[unknown]; }
  std::int64_t unknown_of(std::size_t node) const { return unknown_of_[node]; }
  const std::vector<std::size_t>& unknown_nodes() const { return nodes_; }

  const Arm& arm(std::size_t unknown, int axis, int side) const {
    return arms_[unknown * static_cast<std::size_t>(2 * grid_.dim) + static_cast<std::size_t>(2 * axis + (side > 0 ? 1 : 0))];
  }
  /// True when some mixed derivative at this unknown fell back to one-sided quadrants.
  bool mixed_fallback(std::size_t unknown) const { return mixed_fallback_[unknown] != 0; }
  std::size_t mixed_fallback_count() const;

  /// Discrete Hessian at an unknown for the vector `x` of unknown values.
  SymMatrix hessian(std::span<const double> x, std::size_t unknown) const;
  /// Second-order one-sided (Shortley-Weller) gradient at an unknown.
  Point gradient(std::span<const double> x, std::size_t unknown) const;

  struct Term {
    std::int64_t unknown;
    double coef;
  };
  /// Linear stencil of mixed component `pair` (0:(0,1), 1:(0,2), 2:(1,2)) at an unknown.
  std::span<const Term> mixed_terms(std::size_t unknown, int pair) const;
  int pairs() const { return grid_.dim == 2 ? 1 : 3; }

 private:
  Grid grid_;
  BoundaryGeometry geometry_;
  std::vector<std::size_t> nodes_;
  std::vector<std::int64_t> unknown_of_;
  std::vector<Arm> arms_;
  std::vector<Term> mixed_;
  std::vector<std::size_t> mixed_offsets_;
  std::vector<std::uint8_t> mixed_fallback_;
};

struct FieldMeta {
  int n_equation = 2;
  int k = 1;
  double M = 0.0;
  double eps = 0.0;  // zero for hole-free fields
};

/// Scalar field on all grid nodes; hole nodes hold -M, exterior nodes hold NaN.
struct GridField {
  std::shared_ptr<const Discretization> disc;
  std::vector<double> values;
  FieldMeta meta;

  const Grid& grid() const { return disc->grid(); }
  /// Values at the unknowns in unknown order.
  std::vector<double> unknown_values() const;
};

struct SolveOptions {
  double tolerance = 1e-8;
  int max_iterations = 500;
  double gamma_tau = 1e-10;
  double damping_floor = 1.0 / 1048576.0;  // 2^-20
  double pseudo_time_factor = 0.2;         // tau = factor h^2
  int pseudo_time_batch = 20;
  /// Give up when the residual has not dropped 10% over this many iterations (0 disables).
  int stagnation_window = 8;
  /// Hole-free solution on the same grid, used for the max(lower barrier, C psi) start.
  const GridField* psi = nullptr;
  /// Explicit initial values for the unknowns (overrides the barrier start).
  std::optional<std::vector<double>> initial;
};

struct SolveReport {
  int iterations = 0;
  double residual_inf = 0.0;
  std::vector<double> damping_history;
  int repair_count = 0;
  int pseudo_time_steps = 0;
  double wall_seconds = 0.0;
  std::string initialization;
  bool converged = false;
};

/// Residual sigma_k(lambda(D^2_h u))^{1/k} - 1 at every unknown; nodes outside the relaxed cone are
/// flagged and carry NaN.
struct Residual {
  std::vector<double> values;
  std::vector<std::uint8_t> admissible;
  std::size_t inadmissible = 0;
  double inf_norm() const;
};

SymMatrix discrete_hessian(const GridField& field, std::size_t node);
Residual residual(const GridField& field, int k, double gamma_tau = 1e-10);
Residual residual(const Discretization& disc, std::span<const double> x, int k, double gamma_tau = 1e-10);

/// Jacobian of the residual with respect to the unknowns, in compressed form usable by tests.
struct SparseRows {
  std::vector<std::size_t> row_offsets;
  std::vector<std::size_t> cols;
  std::vector<double> vals;
};
SparseRows residual_jacobian(const Discretization& disc, std::span<const double> x, int k);

std::pair<GridField, SolveReport> solve_ring(const RingDomain& ring, const Grid& grid, double M, int k,
                                             const SolveOptions& options = {});
GridField solve_hole_free(const ConvexDomain& domain, const Grid& grid, int k, const SolveOptions& options = {},
                          SolveReport* report = nullptr);

/// C psi, requiring C min psi <= -M.
GridField scaled_supersolution(const GridField& psi, double C, double M);

/// Lexicographically smallest unknown node among values within 1e-12 of the minimum.
std::size_t argmin_node(const GridField& field);

/// Discrete gradient at a node that is an unknown of the field's discretization.
Point discrete_gradient(const GridField& field, std::size_t node);

/// Writes the CSV field dump (node indices, coordinates, value, node_class) in node order.
std::string field_csv(const GridField& field);

}  // namespace khess
