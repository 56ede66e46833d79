#pragma once

// Dense linear algebra on top of Eigen, plus the small numeric helpers the
// editor blocks share: stable softmax, sigmoid, dimension checks, seeded
// initialization.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace factedit::nn {

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

template <class D>
void require_cols(const Eigen::MatrixBase<D>& w, Eigen::Index n, const char* what) {
  if (w.cols() != n)
    throw DimensionError(std::string(what) + ": expected input of size " + std::to_string(w.cols()) + ", got " +
                         std::to_string(n));
}

/// Softmax with max subtraction.
template <class S>
Vec<S> softmax(const Vec<S>& logits) {
  require(logits.size() > 0, "softmax over an empty vector");
  Vec<S> out = (logits.array() - logits.maxCoeff()).exp().matrix();
  out /= out.sum();
  return out;
}

template <class S>
S log_sum_exp(const Vec<S>& logits) {
  const S m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum());
}

template <class S>
S sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template <class S>
Vec<S> concat(std::initializer_list<const Vec<S>*> parts) {
  Eigen::Index n = 0;
  for (const auto* p : parts) n += p->size();
  Vec<S> out(n);
  Eigen::Index off = 0;
  for (const auto* p : parts) {
    out.segment(off, p->size()) = *p;
    off += p->size();
  }
  return out;
}

/// Platform-independent uniform draws from a 64-bit Mersenne twister.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

template <class S>
void fill_uniform(Mat<S>& m, double bound, Rng& rng) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<S>(rng.uniform(-bound, bound));
}

/// Glorot-uniform bound for a fan_out x fan_in weight.
inline double glorot_bound(Eigen::Index fan_out, Eigen::Index fan_in) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace factedit::nn
