#pragma once

#include <cmath>
#include <vector>

#include "hebrain/graph.hpp"
#include "hebrain/matrix.hpp"
#include "hebrain/rng.hpp"

namespace testutil {

inline hebrain::Matrix random_matrix(std::size_t r, std::size_t c, hebrain::Rng& rng,
                                     double lo = -1.0, double hi = 1.0) {
  hebrain::Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline double max_diff(const hebrain::Matrix& a, const hebrain::Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

// Random valid graph: first half Left unless shuffle_labels, symmetric
// weights with the given edge probability, random features.
inline hebrain::HeteroBrainGraph random_graph(std::size_t n, std::size_t f, hebrain::Rng& rng,
                                              double density = 0.4, bool shuffle_labels = false) {
  using namespace hebrain;
  std::vector<Hemisphere> hemi(n, Hemisphere::Left);
  for (std::size_t i = n / 2; i < n; ++i) hemi[i] = Hemisphere::Right;
  if (shuffle_labels) rng.shuffle(hemi);
  Matrix sc(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(density)) sc(i, j) = sc(j, i) = rng.uniform(0.1, 2.0);
  return make_graph(sc, hemi, random_matrix(n, f, rng));
}

}  // namespace testutil
