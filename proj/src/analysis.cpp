#include "hebrain/analysis.hpp"

#include <cmath>
#include <limits>

#include "hebrain/errors.hpp"

namespace hebrain {

EMSPair ems(std::span<const LayerCapture> per_subject, std::size_t n_nodes,
            std::size_t n_subjects) {
  if (n_subjects == 0 || n_nodes == 0) throw ContractError("ems: no subjects or nodes");
  if (per_subject.size() != n_subjects)
    throw ContractError("ems: captures for " + std::to_string(per_subject.size()) +
                        " subjects, expected " + std::to_string(n_subjects));
  const std::size_t types = per_subject.front().size();
  if (types != 1 && types != 2)
    throw ContractError("ems: expected 1 or 2 edge types, got " + std::to_string(types));
  std::vector<double> score(types, 0.0);
  for (std::size_t t = 0; t < n_subjects; ++t) {
    const LayerCapture& cap = per_subject[t];
    if (cap.size() != types) throw ContractError("ems: subject " + std::to_string(t) +
                                                 " is missing edge-type captures");
    for (std::size_t r = 0; r < types; ++r) {
      const Matrix& agg = cap[r];
      if (agg.rows() != n_nodes || agg.cols() == 0)
        throw ContractError("ems: capture " + agg.shape_string() + " for " +
                            std::to_string(n_nodes) + " nodes");
      double node_sum = 0.0;
      for (std::size_t i = 0; i < n_nodes; ++i) {
        double row = 0.0;
        for (double v : agg.row(i)) row += v;
        node_sum += row / static_cast<double>(agg.cols());
      }
      score[r] += node_sum / static_cast<double>(n_nodes);
    }
  }
  for (double& s : score) s /= static_cast<double>(n_subjects);
  return types == 1 ? EMSPair{score[0], score[0]} : EMSPair{score[0], score[1]};
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw Error("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ValidationError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("student_t_cdf: df must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ShapeError("paired_t_test: samples of length " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("paired_t_test: need at least 2 pairs");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i] - y[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  bool all_zero = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    all_zero = all_zero && d == 0.0;
    ss += (d - mean) * (d - mean);
  }
  TTestResult r;
  r.df = n - 1;
  if (all_zero) return r;
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0 || sd <= 1e-14 * std::abs(mean)) {
    r.t = mean > 0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const double df = static_cast<double>(r.df);
  r.p = std::min(1.0, incomplete_beta(0.5 * df, 0.5, df / (df + r.t * r.t)));
  return r;
}

namespace {

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

StrengthComparison compare(const StrengthStats& s, const std::string& first,
                           const std::vector<double>& a, const std::string& second,
                           const std::vector<double>& b) {
  StrengthComparison c;
  c.first = first;
  c.second = second;
  std::vector<double> xa, xb;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (std::isnan(a[t]) || std::isnan(b[t])) {
      c.excluded.push_back(s.subject_ids[t]);
      continue;
    }
    xa.push_back(a[t]);
    xb.push_back(b[t]);
  }
  c.n_used = xa.size();
  if (c.n_used < 2)
    throw ValidationError("edge strength: fewer than 2 subjects with both " + first + " and " +
                          second + " edges");
  for (double v : xa) c.mean_first += v;
  for (double v : xb) c.mean_second += v;
  c.mean_first /= static_cast<double>(c.n_used);
  c.mean_second /= static_cast<double>(c.n_used);
  c.test = paired_t_test(xa, xb);
  return c;
}

}  // namespace

StrengthStats edge_strength_stats(const Dataset& ds, bool absolute) {
  if (ds.size() < 2) throw ValidationError("edge strength statistics need at least 2 subjects");
  StrengthStats s;
  s.absolute = absolute;
  for (const Subject& subj : ds.subjects) {
    const HeteroBrainGraph& g = subj.graph;
    double sums[3] = {0, 0, 0};
    std::size_t counts[3] = {0, 0, 0};
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
      for (std::size_t j = i + 1; j < g.n_nodes; ++j) {
        const double intra = g.intra_adj(i, j);
        const double inter = g.inter_adj(i, j);
        if (intra != 0.0) {
          const std::size_t cat = g.hemisphere[i] == Hemisphere::Left ? 0 : 1;
          sums[cat] += absolute ? std::abs(intra) : intra;
          counts[cat] += 1;
        }
        if (inter != 0.0) {
          sums[2] += absolute ? std::abs(inter) : inter;
          counts[2] += 1;
        }
      }
    }
    auto mean = [&](int c) { return counts[c] ? sums[c] / static_cast<double>(counts[c]) : nan(); };
    s.subject_ids.push_back(subj.id);
    s.left_intra.push_back(mean(0));
    s.right_intra.push_back(mean(1));
    s.inter.push_back(mean(2));
  }
  s.comparisons.push_back(compare(s, "left_intra", s.left_intra, "inter", s.inter));
  s.comparisons.push_back(compare(s, "right_intra", s.right_intra, "inter", s.inter));
  s.comparisons.push_back(compare(s, "left_intra", s.left_intra, "right_intra", s.right_intra));
  return s;
}

namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return nullptr;
}

}  // namespace

nlohmann::json to_json(const StrengthStats& stats) {
  nlohmann::json comparisons = nlohmann::json::array();
  for (const auto& c : stats.comparisons) {
    comparisons.push_back({{"first", c.first},
                           {"second", c.second},
                           {"mean_first", c.mean_first},
                           {"mean_second", c.mean_second},
                           {"t", finite_or_null(c.test.t)},
                           {"p", c.test.p},
                           {"df", c.test.df},
                           {"n_used", c.n_used},
                           {"excluded", c.excluded}});
  }
  nlohmann::json subjects = nlohmann::json::array();
  for (std::size_t t = 0; t < stats.subject_ids.size(); ++t) {
    subjects.push_back({{"id", stats.subject_ids[t]},
                        {"left_intra", finite_or_null(stats.left_intra[t])},
                        {"right_intra", finite_or_null(stats.right_intra[t])},
                        {"inter", finite_or_null(stats.inter[t])}});
  }
  return {{"schema", "hebrain.stats"},
          {"version", 1},
          {"absolute", stats.absolute},
          {"comparisons", comparisons},
          {"subjects", subjects}};
}

}  // namespace hebrain
