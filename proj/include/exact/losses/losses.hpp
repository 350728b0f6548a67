#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "exact/core/error.hpp"

namespace exact::losses {

inline constexpr double kLogEps = 1e-12;
inline constexpr double kDiceEps = 1e-7;

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;

  void validate() const {
    require(alpha > 0.0 && alpha < 1.0, Errc::invalid_argument, "focal alpha must lie in (0, 1)");
    require(gamma >= 0.0, Errc::invalid_argument, "focal gamma must be >= 0");
  }
};

namespace detail {
inline void check_pair(std::span<const double> p, std::span<const double> y) {
  require(p.size() == y.size(), Errc::invalid_argument,
          "prediction/target length mismatch: " + std::to_string(p.size()) + " vs " + std::to_string(y.size()));
  require(!p.empty(), Errc::invalid_argument, "loss inputs must be non-empty");
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i] >= 0.0 && p[i] <= 1.0, Errc::invalid_argument, "probabilities must lie in [0, 1]");
    require(y[i] == 0.0 || y[i] == 1.0, Errc::invalid_argument, "targets must be 0 or 1");
  }
}
}  // namespace detail

// -- Categorical cross-entropy: -sum y_i log p_i -----------------------------

inline double cross_entropy(std::span<const double> p, std::span<const double> y) {
  detail::check_pair(p, y);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (y[i] != 0.0) s -= y[i] * std::log(std::max(p[i], kLogEps));
  return s;
}

inline std::vector<double> cross_entropy_grad(std::span<const double> p, std::span<const double> y) {
  detail::check_pair(p, y);
  std::vector<double> g(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (y[i] != 0.0 && p[i] > kLogEps) g[i] = -y[i] / p[i];
  return g;
}

// -- Soft dice: 1 - (2 sum y p + eps) / (sum y^2 + sum p^2 + eps) ------------

inline double dice_loss(std::span<const double> p, std::span<const double> y) {
  detail::check_pair(p, y);
  double inter = 0.0, yy = 0.0, pp = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += y[i] * p[i];
    yy += y[i] * y[i];
    pp += p[i] * p[i];
  }
  return 1.0 - (2.0 * inter + kDiceEps) / (yy + pp + kDiceEps);
}

inline std::vector<double> dice_loss_grad(std::span<const double> p, std::span<const double> y) {
  detail::check_pair(p, y);
  double inter = 0.0, yy = 0.0, pp = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += y[i] * p[i];
    yy += y[i] * y[i];
    pp += p[i] * p[i];
  }
  const double num = 2.0 * inter + kDiceEps;
  const double den = yy + pp + kDiceEps;
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = -(2.0 * y[i] * den - num * 2.0 * p[i]) / (den * den);
  return g;
}

// -- Dual segmentation loss: cross-entropy + dice -----------------------------

inline double dual_loss(std::span<const double> p, std::span<const double> y) {
  return cross_entropy(p, y) + dice_loss(p, y);
}

inline std::vector<double> dual_loss_grad(std::span<const double> p, std::span<const double> y) {
  auto g = cross_entropy_grad(p, y);
  const auto d = dice_loss_grad(p, y);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += d[i];
  return g;
}

// -- Smooth L1 on the mean absolute error of a box parameterization ---------

inline double mean_absolute_error(std::span<const double> pred, std::span<const double> gt) {
  require(pred.size() == gt.size(), Errc::invalid_argument, "box parameter length mismatch");
  require(!pred.empty(), Errc::invalid_argument, "box parameters must be non-empty");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - gt[i]);
  return s / static_cast<double>(pred.size());
}

inline double smooth_l1_of_mae(double mae, double delta = 1.0) {
  require(delta > 0.0, Errc::invalid_argument, "smooth L1 delta must be > 0");
  return mae < delta ? 0.5 * mae * mae / delta : mae - 0.5 * delta;
}

inline double smooth_l1(std::span<const double> pred, std::span<const double> gt, double delta = 1.0) {
  require(delta > 0.0, Errc::invalid_argument, "smooth L1 delta must be > 0");
  return smooth_l1_of_mae(mean_absolute_error(pred, gt), delta);
}

/// Gradient with respect to `pred`. Where pred_i == gt_i the subgradient 0
/// is used.
inline std::vector<double> smooth_l1_grad(std::span<const double> pred, std::span<const double> gt,
                                          double delta = 1.0) {
  const double mae = mean_absolute_error(pred, gt);
  require(delta > 0.0, Errc::invalid_argument, "smooth L1 delta must be > 0");
  const double outer = mae < delta ? mae / delta : 1.0;
  const double n = static_cast<double>(pred.size());
  std::vector<double> g(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gt[i];
    g[i] = outer * ((d > 0.0) - (d < 0.0)) / n;
  }
  return g;
}

// -- Focal loss for one binary classification --------------------------------

inline double focal_loss(double p, int y, const FocalParams& fp = {}) {
  fp.validate();
  require(p >= 0.0 && p <= 1.0, Errc::invalid_argument, "focal probability must lie in [0, 1]");
  require(y == 0 || y == 1, Errc::invalid_argument, "focal target must be 0 or 1");
  if (y == 1) return -fp.alpha * std::pow(1.0 - p, fp.gamma) * std::log(std::max(p, kLogEps));
  return -(1.0 - fp.alpha) * std::pow(p, fp.gamma) * std::log(std::max(1.0 - p, kLogEps));
}

/// d/dp of focal_loss on the interior (0, 1).
inline double focal_loss_grad(double p, int y, const FocalParams& fp = {}) {
  fp.validate();
  require(p > 0.0 && p < 1.0, Errc::invalid_argument, "focal gradient is defined on (0, 1)");
  const double a = fp.alpha, g = fp.gamma;
  if (y == 1) {
    const double pw = std::pow(1.0 - p, g);
    const double dpw = g == 0.0 ? 0.0 : -g * std::pow(1.0 - p, g - 1.0);
    return -a * (dpw * std::log(p) + pw / p);
  }
  const double pw = std::pow(p, g);
  const double dpw = g == 0.0 ? 0.0 : g * std::pow(p, g - 1.0);
  return -(1.0 - a) * (dpw * std::log(1.0 - p) - pw / (1.0 - p));
}

// -- Central finite differences ---------------------------------------------

inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::span<const double> x, double h) {
  require(h > 0.0, Errc::invalid_argument, "finite difference step must be > 0");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = probe[i];
    probe[i] = xi + h;
    const double fp = f(probe);
    probe[i] = xi - h;
    const double fm = f(probe);
    probe[i] = xi;
    require(std::isfinite(fp) && std::isfinite(fm), Errc::non_finite,
            "function is not finite near coordinate " + std::to_string(i));
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace exact::losses
