#pragma once
// Heterogeneous brain network: two node types (left/right hemisphere) and two
// edge types (intra-/inter-hemispheric), plus the unilateral cross-hemispheric
// networks derived from two-hop inter-hemispheric paths.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hebrain/matrix.hpp"

namespace hebrain {

enum class Hemisphere { Left, Right };

inline Hemisphere opposite(Hemisphere h) {
  return h == Hemisphere::Left ? Hemisphere::Right : Hemisphere::Left;
}
char hemisphere_code(Hemisphere h);
Hemisphere parse_hemisphere(std::string_view code);

enum class EdgeType { Intra, Inter };

// How the encoder sees the two edge blocks. Homogeneous presents intra and
// inter edges as one edge type.
enum class EdgeTyping { Heterogeneous, Homogeneous };

struct HeteroBrainGraph {
  std::size_t n_nodes = 0;
  std::vector<Hemisphere> hemisphere;
  Matrix intra_adj;
  Matrix inter_adj;
  Matrix features;
  EdgeTyping typing = EdgeTyping::Heterogeneous;

  // Throws ValidationError naming the first offending entry.
  void validate() const;

  std::vector<std::size_t> nodes_of(Hemisphere h) const;
  // intra_adj + inter_adj.
  Matrix structural() const;
};

// Splits a symmetric, non-negative, zero-diagonal weight matrix by the
// hemisphere labels of each entry's endpoints.
std::pair<Matrix, Matrix> partition_edges(const Matrix& sc,
                                          std::span<const Hemisphere> hemisphere);

HeteroBrainGraph make_graph(const Matrix& sc, std::vector<Hemisphere> hemisphere,
                            Matrix features);

struct UCNGraph {
  Hemisphere hemisphere = Hemisphere::Left;
  std::vector<std::size_t> node_ids;
  Matrix adj;   // 0/1, symmetric, zero diagonal
  Matrix prop;  // D^-1/2 (adj + I) D^-1/2
};

UCNGraph build_ucn(const HeteroBrainGraph& g, Hemisphere m);

// Nodes joined to i by a positive-weight edge of type r. Under homogeneous
// typing either r yields the union of both blocks.
std::vector<std::size_t> neighbor_set(const HeteroBrainGraph& g, std::size_t i,
                                      EdgeType r);

// Symmetric normalized propagation matrix of adj with self-loops added.
Matrix normalized_propagation(const Matrix& adj);

}  // namespace hebrain
