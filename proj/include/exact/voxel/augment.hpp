#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exact/core/rng.hpp"
#include "exact/voxel/image.hpp"
#include "exact/voxel/patches.hpp"
#include "exact/voxel/sample.hpp"

namespace exact {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate() const { return lo == hi; }
};

/// Randomized augmentation recipe. Each draw is uniform within its range;
/// geometric transforms hit both image and mask, intensity transforms only
/// the image.
struct AugSpec {
  Range rotation_deg{0.0, 0.0};  // per axis, within [-30, 30]
  Range scale{1.0, 1.0};         // isotropic, within [0.70, 1.40]
  std::array<bool, 3> flip_axes{false, false, false};
  double flip_probability = 0.5;
  double noise_sigma_hu = 0.0;
  double blur_sigma_mm = 0.0;
  Range brightness_hu{0.0, 0.0};  // additive offset
  Range contrast{1.0, 1.0};       // multiplicative about the image mean
  Range gamma{1.0, 1.0};          // on intensities normalized to the image range
  std::optional<Index3> crop_size;

  /// Ranges the augmentation pipeline was designed around.
  static AugSpec standard_defaults() {
    AugSpec s;
    s.rotation_deg = {-30.0, 30.0};
    s.scale = {0.70, 1.40};
    s.flip_axes = {true, true, true};
    s.noise_sigma_hu = 10.0;
    s.blur_sigma_mm = 0.5;
    s.brightness_hu = {-50.0, 50.0};
    s.contrast = {0.9, 1.1};
    s.gamma = {0.8, 1.25};
    return s;
  }

  void validate() const {
    auto ordered = [](const Range& r, const char* what) {
      require(r.lo <= r.hi && std::isfinite(r.lo) && std::isfinite(r.hi), Errc::invalid_argument,
              std::string(what) + " range must be ordered");
    };
    ordered(rotation_deg, "rotation");
    ordered(scale, "scale");
    ordered(brightness_hu, "brightness");
    ordered(contrast, "contrast");
    ordered(gamma, "gamma");
    require(rotation_deg.lo >= -30.0 && rotation_deg.hi <= 30.0, Errc::invalid_argument,
            "rotation range must lie within [-30, 30] degrees");
    require(scale.lo >= 0.70 && scale.hi <= 1.40, Errc::invalid_argument,
            "scale range must lie within [0.70, 1.40]");
    require(gamma.lo > 0.0, Errc::invalid_argument, "gamma lower bound must be > 0");
    require(contrast.lo > 0.0, Errc::invalid_argument, "contrast lower bound must be > 0");
    require(flip_probability >= 0.0 && flip_probability <= 1.0, Errc::invalid_argument,
            "flip probability must lie in [0, 1]");
    require(noise_sigma_hu >= 0.0 && blur_sigma_mm >= 0.0, Errc::invalid_argument,
            "noise and blur sigmas must be >= 0");
    if (crop_size)
      for (int s : *crop_size) require(s >= 1, Errc::invalid_argument, "crop size must be >= 1");
  }
};

/// Concrete parameters drawn for one augmentation call.
struct AugDraw {
  Vec3 angles_rad{0.0, 0.0, 0.0};  // about z, y, x
  double scale = 1.0;
  std::array<bool, 3> flip{false, false, false};
  Index3 crop_start{0, 0, 0};
  double brightness = 0.0;
  double contrast = 1.0;
  double gamma = 1.0;
  std::uint64_t noise_seed = 0;
};

inline AugDraw draw_augmentation(const AugSpec& spec, const Index3& dims, std::uint64_t seed) {
  Rng rng(seed);
  AugDraw d;
  for (int a = 0; a < 3; ++a)
    d.angles_rad[a] = rng.uniform(spec.rotation_deg.lo, spec.rotation_deg.hi) * std::numbers::pi / 180.0;
  d.scale = rng.uniform(spec.scale.lo, spec.scale.hi);
  for (int a = 0; a < 3; ++a) {
    const bool coin = rng.bernoulli(spec.flip_probability);
    d.flip[a] = spec.flip_axes[a] && coin;
  }
  for (int a = 0; a < 3; ++a) {
    const int slack = spec.crop_size ? dims[a] - (*spec.crop_size)[a] : 0;
    const int off = slack > 0 ? rng.uniform_int(0, slack) : 0;
    d.crop_start[a] = off;
  }
  d.brightness = rng.uniform(spec.brightness_hu.lo, spec.brightness_hu.hi);
  d.contrast = rng.uniform(spec.contrast.lo, spec.contrast.hi);
  d.gamma = rng.uniform(spec.gamma.lo, spec.gamma.hi);
  d.noise_seed = rng.next();
  // Degenerate ranges must reproduce their bound exactly.
  if (spec.scale.degenerate()) d.scale = spec.scale.lo;
  if (spec.brightness_hu.degenerate()) d.brightness = spec.brightness_hu.lo;
  if (spec.contrast.degenerate()) d.contrast = spec.contrast.lo;
  if (spec.gamma.degenerate()) d.gamma = spec.gamma.lo;
  if (spec.rotation_deg.degenerate())
    for (auto& a : d.angles_rad) a = spec.rotation_deg.lo * std::numbers::pi / 180.0;
  return d;
}

namespace detail {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

// Rotation in (z, y, x) coordinates; angle[0] spins the y-x plane about z.
inline Mat3 rotation_zyx(const Vec3& ang) {
  const double cz = std::cos(ang[0]), sz = std::sin(ang[0]);
  const double cy = std::cos(ang[1]), sy = std::sin(ang[1]);
  const double cx = std::cos(ang[2]), sx = std::sin(ang[2]);
  const Mat3 rz{{{1, 0, 0}, {0, cz, -sz}, {0, sz, cz}}};
  const Mat3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
  const Mat3 rx{{{cx, -sx, 0}, {sx, cx, 0}, {0, 0, 1}}};
  return matmul(rz, matmul(ry, rx));
}

/// Pulls every output voxel through the inverse of rotate-then-scale about the
/// grid centre, in physical units.
template <class T>
Image<T> warp(const Image<T>& img, const Mat3& rot, double scale) {
  Image<T> out(img.geometry());
  const auto& d = img.dims();
  const auto& sp = img.spacing();
  const Vec3 c{(d[0] - 1) / 2.0, (d[1] - 1) / 2.0, (d[2] - 1) / 2.0};
  for (int z = 0; z < d[0]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[2]; ++x) {
        const Vec3 phys{(z - c[0]) * sp[0] / scale, (y - c[1]) * sp[1] / scale, (x - c[2]) * sp[2] / scale};
        // R^-1 = R^T
        Vec3 src;
        for (int i = 0; i < 3; ++i) {
          const double v = rot[0][i] * phys[0] + rot[1][i] * phys[1] + rot[2][i] * phys[2];
          src[i] = v / sp[i] + c[i];
        }
        if constexpr (std::is_floating_point_v<T>) {
          out(z, y, x) = static_cast<T>(
              sample_trilinear(img, src, EdgeMode::pad, static_cast<double>(default_pad_value<T>())));
        } else {
          out(z, y, x) = sample_nearest(img, src, EdgeMode::pad, default_pad_value<T>());
        }
      }
  return out;
}

template <class T>
Image<T> flip(const Image<T>& img, const std::array<bool, 3>& axes) {
  if (!axes[0] && !axes[1] && !axes[2]) return img;
  Image<T> out(img.geometry());
  const auto& d = img.dims();
  for (int z = 0; z < d[0]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[2]; ++x)
        out(axes[0] ? d[0] - 1 - z : z, axes[1] ? d[1] - 1 - y : y, axes[2] ? d[2] - 1 - x : x) = img(z, y, x);
  return out;
}

inline std::vector<double> gaussian_kernel(double sigma_vox) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_vox)));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * (i * i) / (sigma_vox * sigma_vox));
  for (double& v : k) v /= sum;
  return k;
}

inline Volume gaussian_blur(const Volume& img, double sigma_mm) {
  Volume cur = img;
  const auto& d = img.dims();
  for (int axis = 0; axis < 3; ++axis) {
    const auto k = gaussian_kernel(sigma_mm / img.spacing()[axis]);
    const int r = static_cast<int>(k.size() / 2);
    Volume next(img.geometry());
    for (int z = 0; z < d[0]; ++z)
      for (int y = 0; y < d[1]; ++y)
        for (int x = 0; x < d[2]; ++x) {
          double acc = 0.0;
          for (int t = -r; t <= r; ++t) {
            Index3 p{z, y, x};
            p[axis] = std::clamp(p[axis] + t, 0, d[axis] - 1);
            acc += k[t + r] * cur[p];
          }
          next(z, y, x) = static_cast<float>(acc);
        }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace detail

/// Applies one seeded random augmentation to an image/mask pair. Identical
/// (spec, seed) gives bit-identical outputs; a spec whose ranges are all
/// neutral returns the inputs unchanged.
inline std::pair<Volume, Mask> apply_augmentation(const Volume& vol, const Mask& mask, const AugSpec& spec,
                                                  std::uint64_t seed) {
  spec.validate();
  require_same_geometry(vol, mask, "apply_augmentation: volume and mask geometry differ");
  const AugDraw draw = draw_augmentation(spec, vol.dims(), seed);

  Volume v = vol;
  Mask m = mask;
  const bool rotates = draw.angles_rad[0] != 0.0 || draw.angles_rad[1] != 0.0 || draw.angles_rad[2] != 0.0;
  if (rotates || draw.scale != 1.0) {
    const auto rot = detail::rotation_zyx(draw.angles_rad);
    v = detail::warp(v, rot, draw.scale);
    m = detail::warp(m, rot, draw.scale);
  }
  v = detail::flip(v, draw.flip);
  m = detail::flip(m, draw.flip);
  if (spec.crop_size) {
    v = extract_box(v, draw.crop_start, *spec.crop_size, default_pad_value<float>());
    m = extract_box(m, draw.crop_start, *spec.crop_size, std::uint8_t{0});
  }

  if (spec.blur_sigma_mm > 0.0) v = detail::gaussian_blur(v, spec.blur_sigma_mm);
  auto px = v.voxels();
  if (draw.contrast != 1.0) {
    double mean = 0.0;
    for (float f : px) mean += f;
    mean /= static_cast<double>(px.size());
    for (float& f : px) f = static_cast<float>(mean + draw.contrast * (f - mean));
  }
  if (draw.gamma != 1.0) {
    const auto [lo_it, hi_it] = std::minmax_element(px.begin(), px.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi > lo)
      for (float& f : px) f = static_cast<float>(lo + (hi - lo) * std::pow((f - lo) / (hi - lo), draw.gamma));
  }
  if (draw.brightness != 0.0)
    for (float& f : px) f = static_cast<float>(f + draw.brightness);
  if (spec.noise_sigma_hu > 0.0) {
    Rng noise(draw.noise_seed);
    for (float& f : px) f = static_cast<float>(f + noise.normal(0.0, spec.noise_sigma_hu));
  }
  return {std::move(v), std::move(m)};
}

}  // namespace exact
