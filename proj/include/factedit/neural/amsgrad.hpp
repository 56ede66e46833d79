#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "factedit/neural/tensor.hpp"

namespace factedit::nn {

/// Named views of every tensor in a parameter struct, in declaration order.
template <class S, class Params>
std::vector<std::pair<std::string, Mat<S>*>> named_tensors(Params& p) {
  std::vector<std::pair<std::string, Mat<S>*>> out;
  p.visit([&](const std::string& name, Mat<S>& m) { out.emplace_back(name, &m); });
  return out;
}

template <class S, class Params>
void zero_like(const Params& src, Params& dst) {
  dst = src;
  dst.visit([](const std::string&, Mat<S>& m) { m.setZero(); });
}

struct AmsGradConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with the running maximum of the second moment in the denominator,
/// bias-corrected:
///   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2,  vmax = max(vmax, v)
///   p -= lr / (1 - b1^t) * m / (sqrt(vmax / (1 - b2^t)) + eps)
template <class S>
class AmsGrad {
 public:
  explicit AmsGrad(AmsGradConfig cfg = {}) : cfg_(cfg) {}

  void step(const std::vector<Mat<S>*>& params, const std::vector<const Mat<S>*>& grads) {
    require(params.size() == grads.size(), "amsgrad: parameter/gradient count mismatch");
    if (m_.empty()) {
      for (const auto* p : params) {
        m_.push_back(Mat<S>::Zero(p->rows(), p->cols()));
        v_.push_back(Mat<S>::Zero(p->rows(), p->cols()));
        vmax_.push_back(Mat<S>::Zero(p->rows(), p->cols()));
      }
    }
    require(params.size() == m_.size(), "amsgrad: parameter count changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
    const S step_size = static_cast<S>(cfg_.lr / bc1);
    const S inv_sqrt_bc2 = static_cast<S>(1.0 / std::sqrt(bc2));
    const S eps = static_cast<S>(cfg_.eps);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& p = *params[k];
      const auto& g = *grads[k];
      require(p.rows() == g.rows() && p.cols() == g.cols() && p.rows() == m_[k].rows() && p.cols() == m_[k].cols(),
              "amsgrad: shape mismatch in slot " + std::to_string(k));
      m_[k] = b1 * m_[k] + (S(1) - b1) * g;
      v_[k] = b2 * v_[k] + (S(1) - b2) * g.cwiseProduct(g);
      vmax_[k] = vmax_[k].cwiseMax(v_[k]);
      p.array() -= step_size * m_[k].array() / (vmax_[k].array().sqrt() * inv_sqrt_bc2 + eps);
    }
  }

  template <class Params>
  void step(Params& params, Params& grads) {
    std::vector<Mat<S>*> ps;
    std::vector<const Mat<S>*> gs;
    for (auto& [n, m] : named_tensors<S>(params)) ps.push_back(m);
    for (auto& [n, m] : named_tensors<S>(grads)) gs.push_back(m);
    step(ps, gs);
  }

  std::uint64_t steps() const { return t_; }
  const AmsGradConfig& config() const { return cfg_; }
  const std::vector<Mat<S>>& first_moment() const { return m_; }
  const std::vector<Mat<S>>& second_moment() const { return v_; }
  const std::vector<Mat<S>>& max_second_moment() const { return vmax_; }

 private:
  AmsGradConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<Mat<S>> m_, v_, vmax_;
};

}  // namespace factedit::nn
