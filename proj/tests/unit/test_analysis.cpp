#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "hebrain/analysis.hpp"
#include "hebrain/errors.hpp"

using namespace hebrain;

TEST_CASE("EMS examples") {
  const std::vector<LayerCapture> zeros{{Matrix(3, 2), Matrix(3, 2)}};
  const EMSPair z = ems(zeros, 3, 1);
  CHECK(z.intra == 0.0);
  CHECK(z.inter == 0.0);

  const std::vector<LayerCapture> one{{Matrix{{1, 3}}, Matrix{{0, 0}}}};
  CHECK(ems(one, 1, 1).intra == 2.0);

  const std::vector<LayerCapture> homo{{Matrix{{1, 2}, {3, 4}}}};
  const EMSPair h = ems(homo, 2, 1);
  CHECK(h.intra == 2.5);
  CHECK(h.inter == 2.5);

  CHECK_THROWS_AS(ems(one, 1, 2), ContractError);
  const std::vector<LayerCapture> partial{{Matrix{{1, 3}}, Matrix{{0, 0}}}, {Matrix{{1, 3}}}};
  CHECK_THROWS_AS(ems(partial, 1, 2), ContractError);
  CHECK_THROWS_AS(ems(one, 2, 1), ContractError);
}

TEST_CASE("EMS matches a loop oracle on random captures") {
  Rng rng(1);
  const std::size_t subjects = 7, nodes = 9, dims = 5;
  std::vector<LayerCapture> caps;
  for (std::size_t t = 0; t < subjects; ++t)
    caps.push_back({testutil::random_matrix(nodes, dims, rng), testutil::random_matrix(nodes, dims, rng)});
  double oracle[2] = {0, 0};
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t t = 0; t < subjects; ++t) {
      double per_subject = 0.0;
      for (std::size_t i = 0; i < nodes; ++i) {
        double per_node = 0.0;
        for (std::size_t d = 0; d < dims; ++d) per_node += caps[t][r](i, d);
        per_subject += per_node / dims;
      }
      oracle[r] += per_subject / nodes;
    }
    oracle[r] /= subjects;
  }
  const EMSPair e = ems(caps, nodes, subjects);
  CHECK(std::abs(e.intra - oracle[0]) < 1e-14);
  CHECK(std::abs(e.inter - oracle[1]) < 1e-14);
}

TEST_CASE("paired t-test conventions and the hand example") {
  const std::vector<double> x{1, 2, 3}, zero{0, 0, 0};
  const TTestResult same = paired_t_test(x, x);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);

  const TTestResult r = paired_t_test(x, zero);
  CHECK(r.t == doctest::Approx(3.4641016151377544).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.0741799002).epsilon(1e-8));
  CHECK(r.df == 2);

  const TTestResult neg = paired_t_test(zero, x);
  CHECK(neg.t == -r.t);
  CHECK(neg.p == r.p);

  const std::vector<double> shifted{2, 3, 4};
  const TTestResult flat = paired_t_test(shifted, x);
  CHECK(flat.t == std::numeric_limits<double>::infinity());
  CHECK(flat.p == 0.0);
  CHECK(paired_t_test(x, shifted).t == -std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS(paired_t_test(x, std::vector<double>{1, 2}), ShapeError);
  CHECK_THROWS_AS(paired_t_test(std::vector<double>{1}, std::vector<double>{2}), ValidationError);
}

TEST_CASE("paired t-test p is invariant to common positive scaling") {
  Rng rng(2);
  std::vector<double> a(15), b(15), a2(15), b2(15);
  for (std::size_t i = 0; i < 15; ++i) {
    a[i] = rng.normal(1.0, 1.0);
    b[i] = rng.normal(0.5, 1.0);
    a2[i] = 37.0 * a[i];
    b2[i] = 37.0 * b[i];
  }
  const TTestResult r1 = paired_t_test(a, b), r2 = paired_t_test(a2, b2);
  CHECK(r2.t == doctest::Approx(r1.t).epsilon(1e-12));
  CHECK(r2.p == doctest::Approx(r1.p).epsilon(1e-10));
}

TEST_CASE("Student-t CDF agrees with Boost across df in [1, 1e4]") {
  Rng rng(3);
  double worst = 0.0;
  for (int rep = 0; rep < 2000; ++rep) {
    const double df = std::exp(rng.uniform(0.0, std::log(1e4)));
    const double t = rng.uniform(-40.0, 40.0) * (rep % 2 ? 1.0 : 0.1);
    const double expected = boost::math::cdf(boost::math::students_t(df), t);
    worst = std::max(worst, std::abs(student_t_cdf(t, df) - expected));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("Student-t CDF reproduces tabulated two-sided 95% quantiles") {
  const std::pair<double, double> table[] = {{1, 12.706}, {2, 4.303}, {5, 2.571},
                                             {10, 2.228}, {30, 2.042}, {120, 1.980}};
  for (const auto& [df, q] : table) CHECK(student_t_cdf(q, df) == doctest::Approx(0.975).epsilon(2e-4));
  CHECK(student_t_cdf(0.0, 7.0) == 0.5);
  CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1, 1) = x.
  CHECK(incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-14));
}

namespace {

Subject hand_subject(const std::string& id, double left, double right, double inter) {
  Matrix sc(4, 4);
  sc(0, 1) = sc(1, 0) = left;
  sc(2, 3) = sc(3, 2) = right;
  sc(0, 2) = sc(2, 0) = inter;
  using H = Hemisphere;
  return {id, make_graph(sc, {H::Left, H::Left, H::Right, H::Right}, Matrix(4, 1)), 0};
}

}  // namespace

TEST_CASE("edge strength statistics on a hand dataset") {
  Dataset ds;
  ds.subjects = {hand_subject("a", 2, 1, 1), hand_subject("b", 3, 1, 1), hand_subject("c", 4, 1, 1)};
  const StrengthStats s = edge_strength_stats(ds, false);
  REQUIRE(s.comparisons.size() == 3);
  const auto& left = s.comparisons[0];
  CHECK(left.first == "left_intra");
  CHECK(left.test.t == doctest::Approx(3.4641016).epsilon(1e-6));
  CHECK(std::abs(left.test.p - 0.0742) < 1e-3);
  const auto& right = s.comparisons[1];
  CHECK(right.test.t == 0.0);
  CHECK(right.test.p == 1.0);
  for (const auto& c : s.comparisons) CHECK((c.test.p >= 0.0 && c.test.p <= 1.0));
  const auto j = to_json(s);
  CHECK(j["absolute"] == false);
  CHECK(j["comparisons"].size() == 3);
}

TEST_CASE("subjects without edges in a category are excluded and recorded") {
  Dataset ds;
  ds.subjects = {hand_subject("a", 2, 0, 1), hand_subject("b", 3, 1, 1), hand_subject("c", 4, 2, 1),
                 hand_subject("d", 5, 1, 1)};
  const StrengthStats s = edge_strength_stats(ds, true);
  CHECK(s.absolute);
  CHECK(std::isnan(s.right_intra[0]));
  CHECK(s.comparisons[1].excluded == std::vector<std::string>{"a"});
  CHECK(s.comparisons[1].n_used == 3);
  CHECK(s.comparisons[0].excluded.empty());
  CHECK(to_json(s)["subjects"][0]["right_intra"].is_null());

  Dataset tiny;
  tiny.subjects = {hand_subject("a", 2, 1, 1)};
  CHECK_THROWS_AS(edge_strength_stats(tiny, false), ValidationError);
}

TEST_CASE("default synthetic data shows intra stronger than inter") {
  const Dataset ds = generate_dataset(GenConfig{});
  for (bool absolute : {false, true}) {
    const StrengthStats s = edge_strength_stats(ds, absolute);
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(s.comparisons[c].mean_first > s.comparisons[c].mean_second);
      CHECK(s.comparisons[c].test.t > 0.0);
      CHECK(s.comparisons[c].test.p < 1e-3);
    }
  }
}
