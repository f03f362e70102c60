#pragma once
// Edge mapping scores and intra/inter edge-strength statistics.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hebrain/datagen.hpp"
#include "hebrain/encoders.hpp"
#include "json.hpp"

namespace hebrain {

struct EMSRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t layer = 0;  // 1-based
  double ems_intra = 0.0;
  double ems_inter = 0.0;
};

struct EMSPair {
  double intra = 0.0;
  double inter = 0.0;
};

// per_subject[t] holds subject t's per-edge-type aggregates for one layer.
// EMS_r = (1/T) sum_t (1/N) sum_i mean_over_dims(agg_r[t](i, :)).
// A capture with a single edge type (homogeneous mode) fills both fields.
EMSPair ems(std::span<const LayerCapture> per_subject, std::size_t n_nodes,
            std::size_t n_subjects);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double df);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
};

// Paired t-test on x - y with a two-sided p-value.
// All differences zero gives (0, 1); zero variance with a nonzero mean gives
// (+-inf, 0).
TTestResult paired_t_test(std::span<const double> x, std::span<const double> y);

struct StrengthComparison {
  std::string first;
  std::string second;
  double mean_first = 0.0;
  double mean_second = 0.0;
  TTestResult test;
  std::size_t n_used = 0;
  std::vector<std::string> excluded;  // subjects lacking edges in either category
};

struct StrengthStats {
  bool absolute = false;
  std::vector<std::string> subject_ids;
  // Per-subject mean over existing edges; NaN when a category has no edges.
  std::vector<double> left_intra;
  std::vector<double> right_intra;
  std::vector<double> inter;
  std::vector<StrengthComparison> comparisons;  // L-intra/inter, R-intra/inter, L/R intra
};

StrengthStats edge_strength_stats(const Dataset& ds, bool absolute);
nlohmann::json to_json(const StrengthStats& stats);

}  // namespace hebrain
