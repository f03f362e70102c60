#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hebrain/autodiff.hpp"
#include "hebrain/matrix.hpp"
#include "hebrain/rng.hpp"

namespace hebrain {

// One trainable tensor together with its gradient and Adam moments.
struct ParamTensor {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  std::size_t step_count = 0;

  ParamTensor() = default;
  ParamTensor(std::string name, Matrix initial);

  void zero_grad() { grad.fill(0.0); }
  void reset_optimizer_state();
};

// Glorot-uniform fill in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled weight decay: w <- w * (1 - lr * l2) before the Adam delta.
  double l2 = 0.0;
};

// One bias-corrected Adam update on every tensor; grads are left untouched.
void adam_step(std::vector<ParamTensor*> params, const AdamConfig& cfg);

// Inverted dropout. Returns the multiplicative mask (0 or 1/(1-rate)).
Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);
Matrix dropout(const Matrix& x, double rate, Rng& rng, bool training);

// Maps parameters to tape leaves for one forward pass. The slot of a
// parameter is its position in the list handed to the constructor, so tape
// gradients can be collected into a parallel vector of matrices.
class ParamBinder {
 public:
  ParamBinder(ad::Tape& tape, std::vector<const ParamTensor*> params)
      : tape_(tape), params_(std::move(params)), vars_(params_.size()), bound_(params_.size()) {}

  ad::Var bind(const ParamTensor& p);
  ad::Tape& tape() { return tape_; }
  std::size_t size() const { return params_.size(); }

 private:
  ad::Tape& tape_;
  std::vector<const ParamTensor*> params_;
  std::vector<ad::Var> vars_;
  std::vector<bool> bound_;
};

}  // namespace hebrain
