#pragma once

// Central finite-difference check of analytic gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "factedit/neural/amsgrad.hpp"
#include "factedit/neural/tensor.hpp"

namespace factedit::nn {

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  bool unused = false;  // analytic and numeric gradients are both zero
  bool pass = true;
};

struct GradCheckReport {
  double tolerance = 1e-4;
  std::vector<ParamCheck> params;

  bool pass() const {
    return std::all_of(params.begin(), params.end(), [](const ParamCheck& p) { return p.pass; });
  }
  const ParamCheck* worst() const {
    const ParamCheck* w = nullptr;
    for (const auto& p : params)
      if (!w || p.max_rel_error > w->max_rel_error) w = &p;
    return w;
  }
  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& p : params)
      if (!p.pass) out.push_back(p.name);
    return out;
  }
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  /// Relative errors use max(|analytic|, |numeric|, floor) as denominator.
  double floor = 1e-5;
  /// Elements checked per tensor; 0 checks all of them.
  std::size_t max_elements = 0;
};

/// `loss(params)` evaluates the objective; `analytic` holds dL/dparams.
template <class S, class Params, class LossFn>
GradCheckReport grad_check(Params& params, const Params& analytic, LossFn&& loss, const GradCheckOptions& opt = {}) {
  GradCheckReport rep;
  rep.tolerance = opt.tolerance;
  auto ps = named_tensors<S>(params);
  auto gs = named_tensors<S>(const_cast<Params&>(analytic));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto& [name, p] = ps[k];
    const Mat<S>& g = *gs[k].second;
    ParamCheck pc;
    pc.name = name;
    const auto n = static_cast<std::size_t>(p->size());
    const std::size_t stride = opt.max_elements && n > opt.max_elements ? (n + opt.max_elements - 1) / opt.max_elements : 1;
    bool all_zero = true;
    for (std::size_t e = 0; e < n; e += stride) {
      S& x = p->data()[e];
      const S orig = x;
      x = orig + static_cast<S>(opt.step);
      const double up = static_cast<double>(loss(params));
      x = orig - static_cast<S>(opt.step);
      const double down = static_cast<double>(loss(params));
      x = orig;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double a = static_cast<double>(g.data()[e]);
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), opt.floor});
      pc.max_abs_error = std::max(pc.max_abs_error, abs_err);
      pc.max_rel_error = std::max(pc.max_rel_error, rel);
      if (a != 0.0 || std::abs(numeric) > 1e-12) all_zero = false;
      ++pc.checked;
    }
    pc.unused = all_zero;
    pc.pass = pc.max_rel_error <= opt.tolerance;
    rep.params.push_back(pc);
  }
  return rep;
}

}  // namespace factedit::nn
