#include "hebrain/graph.hpp"

#include <cmath>
#include <sstream>

#include "hebrain/errors.hpp"

namespace hebrain {

namespace {

constexpr double kSymmetryTol = 1e-9;

std::string entry(const char* what, std::size_t i, std::size_t j) {
  std::ostringstream os;
  os << what << "[" << i << "][" << j << "]";
  return os.str();
}

void check_square(const Matrix& m, std::size_t n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw ValidationError(std::string(what) + " has shape " + m.shape_string() +
                          ", expected " + std::to_string(n) + "x" + std::to_string(n));
}

void check_weight_matrix(const Matrix& m, const char* what) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 0.0) throw ValidationError(entry(what, i, i) + " is on the diagonal and nonzero");
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v)) throw ValidationError(entry(what, i, j) + " is not finite");
      if (v < 0.0) throw ValidationError(entry(what, i, j) + " is negative");
      if (std::abs(v - m(j, i)) > kSymmetryTol)
        throw ValidationError(entry(what, i, j) + " breaks symmetry with " +
                              entry(what, j, i));
    }
  }
}

}  // namespace

char hemisphere_code(Hemisphere h) { return h == Hemisphere::Left ? 'L' : 'R'; }

Hemisphere parse_hemisphere(std::string_view code) {
  if (code == "L") return Hemisphere::Left;
  if (code == "R") return Hemisphere::Right;
  throw ValidationError("hemisphere label must be \"L\" or \"R\", got \"" +
                        std::string(code) + "\"");
}

void HeteroBrainGraph::validate() const {
  if (hemisphere.size() != n_nodes)
    throw ValidationError("hemisphere list has " + std::to_string(hemisphere.size()) +
                          " labels for " + std::to_string(n_nodes) + " nodes");
  check_square(intra_adj, n_nodes, "intra_adj");
  check_square(inter_adj, n_nodes, "inter_adj");
  if (features.rows() != n_nodes)
    throw ValidationError("features has " + std::to_string(features.rows()) +
                          " rows for " + std::to_string(n_nodes) + " nodes");
  if (!all_finite(features)) throw ValidationError("features contain non-finite values");
  check_weight_matrix(intra_adj, "intra_adj");
  check_weight_matrix(inter_adj, "inter_adj");
  for (std::size_t i = 0; i < n_nodes; ++i) {
    for (std::size_t j = 0; j < n_nodes; ++j) {
      const bool same = hemisphere[i] == hemisphere[j];
      if (intra_adj(i, j) > 0.0 && !same)
        throw ValidationError(entry("intra_adj", i, j) +
                              " joins nodes of different hemispheres");
      if (inter_adj(i, j) > 0.0 && same)
        throw ValidationError(entry("inter_adj", i, j) + " joins nodes of the same hemisphere");
      if (intra_adj(i, j) * inter_adj(i, j) != 0.0)
        throw ValidationError(entry("intra_adj", i, j) + " overlaps inter_adj");
    }
  }
}

std::vector<std::size_t> HeteroBrainGraph::nodes_of(Hemisphere h) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_nodes; ++i)
    if (hemisphere[i] == h) out.push_back(i);
  return out;
}

Matrix HeteroBrainGraph::structural() const { return add(intra_adj, inter_adj); }

std::pair<Matrix, Matrix> partition_edges(const Matrix& sc,
                                          std::span<const Hemisphere> hemisphere) {
  const std::size_t n = hemisphere.size();
  check_square(sc, n, "sc");
  check_weight_matrix(sc, "sc");
  Matrix intra(n, n);
  Matrix inter(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (hemisphere[i] == hemisphere[j])
        intra(i, j) = sc(i, j);
      else
        inter(i, j) = sc(i, j);
    }
  }
  return {std::move(intra), std::move(inter)};
}

HeteroBrainGraph make_graph(const Matrix& sc, std::vector<Hemisphere> hemisphere,
                            Matrix features) {
  auto [intra, inter] = partition_edges(sc, hemisphere);
  HeteroBrainGraph g;
  g.n_nodes = hemisphere.size();
  g.hemisphere = std::move(hemisphere);
  g.intra_adj = std::move(intra);
  g.inter_adj = std::move(inter);
  g.features = std::move(features);
  g.validate();
  return g;
}

Matrix normalized_propagation(const Matrix& adj) {
  const std::size_t n = adj.rows();
  Matrix a_hat = adj;
  for (std::size_t i = 0; i < n; ++i) a_hat(i, i) += 1.0;
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += a_hat(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
  }
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a_hat(i, j) != 0.0) s(i, j) = inv_sqrt_deg[i] * a_hat(i, j) * inv_sqrt_deg[j];
  return s;
}

UCNGraph build_ucn(const HeteroBrainGraph& g, Hemisphere m) {
  UCNGraph ucn;
  ucn.hemisphere = m;
  ucn.node_ids = g.nodes_of(m);
  if (ucn.node_ids.empty())
    throw ValidationError(std::string("empty UCN: hemisphere ") + hemisphere_code(m) +
                          " has no nodes");
  const std::vector<std::size_t> relays = g.nodes_of(opposite(m));
  const std::size_t k = ucn.node_ids.size();
  ucn.adj = Matrix(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const std::size_t i = ucn.node_ids[a];
      const std::size_t j = ucn.node_ids[b];
      for (std::size_t r : relays) {
        if (g.inter_adj(i, r) > 0.0 && g.inter_adj(r, j) > 0.0) {
          ucn.adj(a, b) = ucn.adj(b, a) = 1.0;
          break;
        }
      }
    }
  }
  ucn.prop = normalized_propagation(ucn.adj);
  return ucn;
}

std::vector<std::size_t> neighbor_set(const HeteroBrainGraph& g, std::size_t i,
                                      EdgeType r) {
  if (i >= g.n_nodes)
    throw IndexError("node " + std::to_string(i) + " out of range for " +
                     std::to_string(g.n_nodes) + " nodes");
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < g.n_nodes; ++j) {
    double w;
    if (g.typing == EdgeTyping::Homogeneous)
      w = g.intra_adj(i, j) + g.inter_adj(i, j);
    else
      w = r == EdgeType::Intra ? g.intra_adj(i, j) : g.inter_adj(i, j);
    if (w > 0.0) out.push_back(j);
  }
  return out;
}

}  // namespace hebrain
