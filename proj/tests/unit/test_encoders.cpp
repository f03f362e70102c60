#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "hebrain/encoders.hpp"
#include "hebrain/errors.hpp"

using namespace hebrain;
using H = Hemisphere;

namespace {

HeteroBrainGraph permuted(const HeteroBrainGraph& g, const std::vector<std::size_t>& perm) {
  // New node a is old node perm[a].
  const std::size_t n = g.n_nodes;
  Matrix sc(n, n), feats(n, g.features.cols());
  std::vector<H> hemi(n);
  const Matrix s = g.structural();
  for (std::size_t a = 0; a < n; ++a) {
    hemi[a] = g.hemisphere[perm[a]];
    for (std::size_t b = 0; b < n; ++b) sc(a, b) = s(perm[a], perm[b]);
    for (std::size_t f = 0; f < feats.cols(); ++f) feats(a, f) = g.features(perm[a], f);
  }
  return make_graph(sc, hemi, feats);
}

// Every node touches a single edge type.
HeteroBrainGraph single_typed_graph(std::size_t n, Rng& rng) {
  std::vector<H> hemi(n, H::Left);
  for (std::size_t i = n / 2; i < n; ++i) hemi[i] = H::Right;
  std::vector<bool> intra_node(n);
  for (std::size_t i = 0; i < n; ++i) intra_node[i] = rng.bernoulli(0.5);
  Matrix sc(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (intra_node[i] != intra_node[j] || !rng.bernoulli(0.6)) continue;
      const bool same = hemi[i] == hemi[j];
      if (same == intra_node[i]) sc(i, j) = sc(j, i) = rng.uniform(0.2, 2.0);
    }
  return make_graph(sc, hemi, testutil::random_matrix(n, 3, rng));
}

}  // namespace

TEST_CASE("hand evaluation on two nodes joined by one inter edge") {
  Matrix sc{{0, 2}, {2, 0}};
  const HeteroBrainGraph g = make_graph(sc, {H::Left, H::Right}, Matrix{{1}, {1}});
  Rng rng(1);
  HBNLayerParams p = init_hbn_layer(1, 1, 2, rng, "t");
  for (std::size_t r = 0; r < 2; ++r) {
    p.w_r[r].value = Matrix{{1}};
    p.a_r[r].value = Matrix{{1}};
    p.b_r[r].value = Matrix{{0}};
  }
  p.w_o.value = Matrix{{1}};
  const Matrix out = hbn_layer_value(g, Matrix{{1}, {1}}, p);
  CHECK(out(0, 0) == doctest::Approx(3.0));
  CHECK(out(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("isolated node with identity self weight keeps its input row") {
  Matrix sc(3, 3);
  sc(0, 2) = sc(2, 0) = 1.0;
  const HeteroBrainGraph g = make_graph(sc, {H::Left, H::Left, H::Right}, Matrix(3, 2));
  Rng rng(2);
  HBNLayerParams p = init_hbn_layer(2, 2, 2, rng, "t");
  p.w_o.value = Matrix::identity(2);
  const Matrix z = testutil::random_matrix(3, 2, rng);
  const Matrix out = hbn_layer_value(g, z, p);
  CHECK(out(1, 0) == z(1, 0));
  CHECK(out(1, 1) == z(1, 1));
}

TEST_CASE("tied heterogeneous parameters equal homogeneous mode on single-typed nodes") {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const HeteroBrainGraph g = single_typed_graph(10, rng);
    HBNLayerParams homo = init_hbn_layer(3, 4, 1, rng, "homo");
    homo.b_r[0].value = testutil::random_matrix(1, 3, rng);
    HBNLayerParams hetero = init_hbn_layer(3, 4, 2, rng, "hetero");
    for (std::size_t r = 0; r < 2; ++r) {
      hetero.w_r[r].value = homo.w_r[0].value;
      hetero.a_r[r].value = homo.a_r[0].value;
      hetero.b_r[r].value = homo.b_r[0].value;
    }
    hetero.w_o.value = homo.w_o.value;
    const Matrix z = testutil::random_matrix(10, 3, rng);
    const Matrix a = hbn_layer_value(g, z, hetero);
    const Matrix b = hbn_layer_value(make_ablation(g, AblationMode::Homo), z, homo);
    CHECK(testutil::max_diff(a, b) < 1e-12);
  }
}

TEST_CASE("layer shapes are checked") {
  Rng rng(4);
  const HeteroBrainGraph g = testutil::random_graph(6, 3, rng);
  const HBNLayerParams p = init_hbn_layer(3, 2, 2, rng, "t");
  CHECK_THROWS_AS(hbn_layer_value(g, Matrix(6, 4), p), ShapeError);
  const HBNLayerParams one = init_hbn_layer(3, 2, 1, rng, "t");
  CHECK_THROWS_AS(hbn_layer_value(g, Matrix(6, 3), one), ShapeError);
}

TEST_CASE("hbn_encode composes layers") {
  Rng rng(5);
  const HeteroBrainGraph g = testutil::random_graph(8, 3, rng);
  const GraphOperators ops = prepare_operators(g, 2);
  std::vector<HBNLayerParams> layers{init_hbn_layer(3, 4, 2, rng, "l0"),
                                     init_hbn_layer(4, 4, 2, rng, "l1")};
  ad::Tape tape;
  ParamBinder binder(tape, {});
  const Matrix x = g.features;

  const Matrix none = hbn_encode(ops, tape.constant(x), {}, binder, {}).value();
  CHECK(none == x);
  const Matrix one =
      hbn_encode(ops, tape.constant(x), {layers[0]}, binder, {}).value();
  CHECK(one == hbn_layer_value(g, x, layers[0]));
  const Matrix two = hbn_encode(ops, tape.constant(x), layers, binder, {}).value();
  const Matrix oracle = hbn_layer_value(g, hbn_layer_value(g, x, layers[0]), layers[1]);
  CHECK(testutil::max_diff(two, oracle) < 1e-14);
}

TEST_CASE("training-mode dropout changes the output and captures keep per-type aggregates") {
  Rng rng(6);
  const HeteroBrainGraph g = testutil::random_graph(8, 3, rng);
  const GraphOperators ops = prepare_operators(g, 2);
  const HBNLayerParams p = init_hbn_layer(3, 4, 2, rng, "t");
  ad::Tape tape;
  ParamBinder binder(tape, {});
  std::vector<LayerCapture> captures;
  Rng drop(7);
  LayerOptions train{true, 0.5, &drop, &captures};
  const Matrix a = hbn_layer(ops, tape.constant(g.features), p, binder, train).value();
  const Matrix b = hbn_layer_value(g, g.features, p);
  CHECK_FALSE(a == b);
  REQUIRE(captures.size() == 1);
  CHECK(captures[0].size() == 2);
  CHECK(captures[0][0].rows() == 8);
  LayerOptions missing{true, 0.5, nullptr, nullptr};
  CHECK_THROWS_AS(hbn_layer(ops, tape.constant(g.features), p, binder, missing), ContractError);
}

TEST_CASE("scaling edge weights scales the pre-activation aggregate when b = 0") {
  Rng rng(8);
  const HeteroBrainGraph g = testutil::random_graph(10, 3, rng, 0.5);
  HeteroBrainGraph scaled = g;
  scaled.intra_adj = scale(g.intra_adj, 2.5);
  scaled.inter_adj = scale(g.inter_adj, 2.5);
  const HBNLayerParams p = init_hbn_layer(3, 4, 2, rng, "t");
  auto capture = [&](const HeteroBrainGraph& graph) {
    const GraphOperators ops = prepare_operators(graph, 1, false);
    ad::Tape tape;
    ParamBinder binder(tape, {});
    std::vector<LayerCapture> caps;
    hbn_layer(ops, tape.constant(graph.features), p, binder, LayerOptions{false, 0, nullptr, &caps});
    return caps[0];
  };
  const LayerCapture base = capture(g);
  const LayerCapture big = capture(scaled);
  for (std::size_t r = 0; r < 2; ++r)
    CHECK(testutil::max_diff(scale(base[r], 2.5), big[r]) < 1e-12);
}

TEST_CASE("encoders are permutation equivariant") {
  Rng rng(9);
  const HeteroBrainGraph g = testutil::random_graph(10, 3, rng, 0.5, true);
  std::vector<std::size_t> perm(10);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  const HeteroBrainGraph pg = permuted(g, perm);
  const HBNLayerParams p = init_hbn_layer(3, 4, 2, rng, "t");
  const UCNEncoderParams u = init_ucn_encoder(3, 4, 2, rng);
  const Matrix z = hbn_layer_value(g, g.features, p);
  const Matrix pz = hbn_layer_value(pg, pg.features, p);
  const Matrix h = ucn_encode_value(g, g.features, u);
  const Matrix ph = ucn_encode_value(pg, pg.features, u);
  for (std::size_t a = 0; a < 10; ++a)
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(pz(a, c) == doctest::Approx(z(perm[a], c)).epsilon(1e-12));
      CHECK(ph(a, c) == doctest::Approx(h(perm[a], c)).epsilon(1e-12));
    }
}

TEST_CASE("UCN encoder without inter edges is X (W_phi + W_o)") {
  Rng rng(10);
  Matrix sc(4, 4);
  sc(0, 1) = sc(1, 0) = 1.0;
  const HeteroBrainGraph g =
      make_graph(sc, {H::Left, H::Left, H::Right, H::Right}, testutil::random_matrix(4, 3, rng));
  const UCNEncoderParams p = init_ucn_encoder(3, 2, 2, rng);
  const Matrix h = ucn_encode_value(g, g.features, p);
  const Matrix left = matmul(g.features, add(p.w_left.value, p.w_o.value));
  const Matrix right = matmul(g.features, add(p.w_right.value, p.w_o.value));
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(h(0, c) == doctest::Approx(left(0, c)).epsilon(1e-12));
    CHECK(h(3, c) == doctest::Approx(right(3, c)).epsilon(1e-12));
  }
}

TEST_CASE("UCN encoder matches explicit propagation for k = 1 and k = 2") {
  Matrix sc(6, 6);
  auto link = [&](std::size_t a, std::size_t b, double w) { sc(a, b) = sc(b, a) = w; };
  link(0, 3, 1.0);
  link(1, 3, 0.5);
  link(0, 4, 2.0);
  link(2, 4, 1.0);
  link(2, 5, 1.5);
  link(0, 1, 0.7);
  Rng rng(11);
  const HeteroBrainGraph g = make_graph(
      sc, {H::Left, H::Left, H::Left, H::Right, H::Right, H::Right}, testutil::random_matrix(6, 3, rng));
  for (std::size_t k : {1u, 2u}) {
    const UCNEncoderParams p = init_ucn_encoder(3, 2, k, rng);
    const Matrix h = ucn_encode_value(g, g.features, p);
    for (H m : {H::Left, H::Right}) {
      const UCNGraph u = build_ucn(g, m);
      Matrix xm(3, 3);
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t f = 0; f < 3; ++f) xm(a, f) = g.features(u.node_ids[a], f);
      Matrix prop = matmul(u.prop, xm);
      if (k == 2) prop = matmul(u.prop, prop);
      const Matrix& w = m == H::Left ? p.w_left.value : p.w_right.value;
      const Matrix oracle = add(matmul(prop, w), matmul(xm, p.w_o.value));
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t c = 0; c < 2; ++c)
          CHECK(std::abs(h(u.node_ids[a], c) - oracle(a, c)) < 1e-12);
    }
  }
}

TEST_CASE("UCN encoder errors") {
  Rng rng(12);
  const HeteroBrainGraph g = testutil::random_graph(6, 3, rng);
  UCNEncoderParams p = init_ucn_encoder(3, 2, 2, rng);
  p.k = 0;
  CHECK_THROWS_AS(ucn_encode_value(g, g.features, p), ConfigError);
  CHECK_THROWS_AS(init_ucn_encoder(3, 2, 0, rng), ConfigError);
}

TEST_CASE("UCN output of one hemisphere ignores the order of the other") {
  Rng rng(13);
  const HeteroBrainGraph g = testutil::random_graph(10, 3, rng, 0.5);
  // Reverse the right-hemisphere nodes (5..9) only.
  std::vector<std::size_t> perm{0, 1, 2, 3, 4, 9, 8, 7, 6, 5};
  const HeteroBrainGraph pg = permuted(g, perm);
  const UCNEncoderParams p = init_ucn_encoder(3, 4, 2, rng);
  const Matrix h = ucn_encode_value(g, g.features, p);
  const Matrix ph = ucn_encode_value(pg, pg.features, p);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(ph(a, c) - h(a, c)) < 1e-12);
}

TEST_CASE("ablation views") {
  Matrix ones(4, 4, 1.0);
  for (std::size_t i = 0; i < 4; ++i) ones(i, i) = 0.0;
  const HeteroBrainGraph g =
      make_graph(ones, {H::Left, H::Left, H::Right, H::Right}, Matrix(4, 1));
  CHECK(make_ablation(g, AblationMode::IntraOnly).inter_adj == Matrix(4, 4));
  CHECK(make_ablation(g, AblationMode::InterOnly).intra_adj == Matrix(4, 4));
  const HeteroBrainGraph homo = make_ablation(g, AblationMode::Homo);
  CHECK(neighbor_set(homo, 0, EdgeType::Intra) == std::vector<std::size_t>{1, 2, 3});
  CHECK(edge_type_count(AblationMode::Homo) == 1);
  CHECK(edge_type_count(AblationMode::Hetero) == 2);
  CHECK(parse_ablation_mode("inter_only") == AblationMode::InterOnly);
  CHECK(to_string(AblationMode::IntraOnly) == "intra_only");
  CHECK_THROWS_AS(parse_ablation_mode("both"), ConfigError);

  Rng rng(14);
  for (int rep = 0; rep < 10; ++rep) {
    const HeteroBrainGraph r = testutil::random_graph(10, 2, rng, 0.5, true);
    for (H m : {H::Left, H::Right}) {
      CHECK(build_ucn(make_ablation(r, AblationMode::InterOnly), m).adj == build_ucn(r, m).adj);
      const UCNGraph self_only = build_ucn(make_ablation(r, AblationMode::IntraOnly), m);
      CHECK(self_only.prop == Matrix::identity(self_only.node_ids.size()));
    }
  }
}
