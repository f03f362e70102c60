#include "hebrain/param.hpp"

#include <cmath>

#include "hebrain/errors.hpp"

namespace hebrain {

ParamTensor::ParamTensor(std::string n, Matrix initial)
    : name(std::move(n)),
      value(std::move(initial)),
      grad(value.rows(), value.cols()),
      adam_m(value.rows(), value.cols()),
      adam_v(value.rows(), value.cols()) {}

void ParamTensor::reset_optimizer_state() {
  adam_m.fill(0.0);
  adam_v.fill(0.0);
  step_count = 0;
}

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

void adam_step(std::vector<ParamTensor*> params, const AdamConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive");
  for (ParamTensor* p : params) {
    ++p->step_count;
    const double t = static_cast<double>(p->step_count);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    const double decay = 1.0 - cfg.lr * cfg.l2;
    auto w = p->value.data();
    auto g = p->grad.data();
    auto m = p->adam_m.data();
    auto v = p->adam_v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] = w[i] * decay - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  Matrix mask(rows, cols, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : mask.data()) v = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

Matrix dropout(const Matrix& x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  return hadamard(x, dropout_mask(x.rows(), x.cols(), rate, rng));
}

ad::Var ParamBinder::bind(const ParamTensor& p) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i] != &p) continue;
    if (!bound_[i]) {
      vars_[i] = tape_.parameter(p.value, i);
      bound_[i] = true;
    }
    return vars_[i];
  }
  // Not trained in this pass: enters the tape as a constant.
  return tape_.constant(p.value);
}

}  // namespace hebrain
