#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "khess/analysis.hpp"
#include "khess/barriers.hpp"
#include "khess/geometry.hpp"

namespace khess {

using Json = nlohmann::ordered_json;

struct DomainSpec {
  std::string kind = "ball";  // ball | ellipsoid | p_ball
  Point center{};
  double radius = 1.0;
  Point semi_axes{1.0, 1.0, 1.0};
  double p = 4.0;
};

struct ExperimentConfig {
  std::string mode = "counterexample";  // counterexample | measure | barrier
  int dim = 2;
  DomainSpec domain;
  std::string hole_rule = "auto";  // auto | explicit | centered (at the minimizer of psi_h)
  double hole_t = 0.5;
  Point hole_x0{};
  std::vector<double> eps_list{0.12, 0.08, 0.05};
  int k = 1;
  std::optional<int> n;  // radial studies may use n > dim
  std::string M_rule = "auto";  // auto | explicit
  double M_factor = 1.0;
  double M_value = 1.0;
  std::vector<double> grid_h{1.0 / 128.0};
  int levels = 9;
  std::vector<double> eta_fractions{0.05, 0.1, 0.2};
  double defect_threshold = 20.0;  // in units of h M
  double gap_fraction = 0.25;
  double tolerance = 1e-8;
  int max_iterations = 500;
  int workers = 1;
  std::string output_dir = "out";
  bool random_free = true;
  bool write_fields = true;
  bool refine = true;

  std::vector<Ball> measure_balls{{{0.0, 0.0, 0.0}, 0.5}};
  bool measure_radial = true;

  std::vector<std::pair<int, int>> barrier_cases{{5, 2}, {4, 2}, {3, 2}, {2, 1}, {6, 3}};
  std::vector<std::pair<int, int>> scaling_families{{4, 1}, {2, 1}};
  bool barrier_grid = true;

  int n_equation() const { return n.value_or(dim); }
  ConvexDomain make_domain() const;
  double fine_h() const { return grid_h.size() > 1 ? grid_h[1] : grid_h[0] / 2.0; }
  /// Throws ConfigError on any violated invariant.
  void validate() const;
  Json to_json() const;
};

ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

/// Output files keyed by path relative to the output directory.
using FileSet = std::vector<std::pair<std::string, std::string>>;

struct EpsResult {
  double eps = 0.0;
  std::string status = "ok";
  SolveReport solve;
  ConvexityReport convexity;
  std::vector<std::pair<double, double>> segment_levels;  // (level, defect on [x0, y])
  double best_defect = 0.0;
  double best_level = 0.0;
  std::string best_source;  // "segment" or "pairs"
  std::optional<Witness> best_witness;
  EstimateReport estimates;
};

struct CounterexampleReport {
  double h = 0.0, h_fine = 0.0;
  Point y{};
  double psi_y = 0.0;
  Point x0{};
  double psi_x0 = 0.0;
  double gap = 0.0;
  double M = 0.0, M1 = 0.0;
  double threshold = 0.0;
  std::vector<EpsResult> per_eps;
  std::string verdict = "not detected";  // detected | inconclusive | not detected
  std::optional<std::size_t> flagged_eps;
  double flagged_level = 0.0, flagged_defect = 0.0;
  std::optional<Witness> flagged_witness;
  std::optional<double> fine_defect;
  bool refinement_confirmed = false;

  Json to_json(int dim) const;
};

CounterexampleReport run_counterexample(const ExperimentConfig& cfg, FileSet* files = nullptr);

std::vector<MeasureReport> run_measure_study(const ExperimentConfig& cfg);
Json to_json(const MeasureReport& r);

struct ScalingFamily {
  int n = 2, k = 1;
  std::vector<double> eps, eps_slope, case_quantity, curvature_ratio;
  std::string regime;
  double spread = 0.0;  // (max - min) / min of the case quantity
  bool pass = false;
};

struct IdentityCheck {
  int n = 2, k = 1;
  BarrierCase kind = BarrierCase::power_super;
  double lower_error = 0.0;  // max |sigma_k(D^2 lower) - 1|
  double upper_error = 0.0;  // max |sigma_k(D^2 phi)|
  bool pass = false;
};

struct BarrierStudy {
  std::vector<IdentityCheck> identities;
  std::vector<ScalingFamily> scalings;
  std::vector<std::pair<double, EstimateReport>> estimates;  // per eps
  std::vector<std::string> failures;
  Json to_json() const;
};

IdentityCheck check_barrier_identities(int n, int k, double eps, double M, double R, int radii = 20);
ScalingFamily scaling_family(int n, int k, const std::vector<double>& eps, double M, double R);
BarrierStudy run_barrier_study(const ExperimentConfig& cfg, FileSet* files = nullptr);

/// Runs the configured mode and returns the report plus auxiliary files.
std::pair<Json, FileSet> run_pipeline(const ExperimentConfig& cfg);

/// Writes report.json and the auxiliary files under `dir`; I/O failures name the path.
void emit_outputs(const std::string& dir, const Json& report, const FileSet& files);

inline constexpr int kReportSchemaVersion = 1;

}  // namespace khess
