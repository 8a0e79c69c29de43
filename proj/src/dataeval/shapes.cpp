#include "dataeval/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "numcore/errors.hpp"

namespace gwsm {

namespace {

constexpr std::array<double, kShapeClasses> kHueDegrees = {0.0, 55.0, 115.0, 185.0, 250.0, 310.0};

struct Placement {
  std::size_t cls;  // 0-based
  double cx, cy, radius, angle;
};

bool covers(const Placement& s, double px, double py) {
  const double dx = px - s.cx, dy = py - s.cy;
  const double ca = std::cos(s.angle), sa = std::sin(s.angle);
  // Object frame coordinates.
  const double u = ca * dx + sa * dy;
  const double v = -sa * dx + ca * dy;
  const double r = s.radius;
  switch (s.cls) {
    case 0:  // disk
      return dx * dx + dy * dy <= r * r;
    case 1: {  // square
      const double half = 0.78 * r;
      return std::abs(u) <= half && std::abs(v) <= half;
    }
    case 2: {  // triangle, apex at v = -r, base at v = 0.8r
      if (v < -r || v > 0.8 * r) return false;
      const double half_width = (v + r) / (1.8 * r) * r;
      return std::abs(u) <= half_width;
    }
    case 3: {  // ring
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= (0.5 * r) * (0.5 * r);
    }
    case 4: {  // cross
      const double arm = 0.3 * r;
      return (std::abs(u) <= arm && std::abs(v) <= r) || (std::abs(v) <= arm && std::abs(u) <= r);
    }
    default: {  // bar
      return std::abs(u) <= r && std::abs(v) <= 0.3 * r;
    }
  }
}

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
  const int sector = static_cast<int>(h);
  const double f = h - sector;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r = v, g = t, b = p;
  switch (sector) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
  rgb[0] = r, rgb[1] = g, rgb[2] = b;
}

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

ImageSample draw_sample(const ShapesConfig& config, std::int64_t id, Rng& rng) {
  const std::size_t n = config.canvas;
  const double extent = static_cast<double>(n);

  std::vector<std::size_t> classes(kShapeClasses);
  for (std::size_t c = 0; c < kShapeClasses; ++c) classes[c] = c;
  shuffle_in_place(classes, rng);
  const std::size_t count = static_cast<std::size_t>(
      rng.range(static_cast<int>(config.min_objects), static_cast<int>(config.max_objects)));

  std::vector<std::uint8_t> mask;
  std::vector<Placement> placed;
  for (int attempt = 0; attempt < 50; ++attempt) {
    mask.assign(n * n, 0);
    placed.clear();
    for (std::size_t k = 0; k < count; ++k) {
      Placement s{};
      s.cls = classes[k];
      s.radius = rng.uniform(config.min_radius, config.max_radius) * extent;
      s.cx = rng.uniform(s.radius + 1.0, extent - s.radius - 1.0);
      s.cy = rng.uniform(s.radius + 1.0, extent - s.radius - 1.0);
      s.angle = rng.uniform(0.0, std::numbers::pi);
      placed.push_back(s);
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x)
          if (covers(s, x + 0.5, y + 0.5)) mask[y * n + x] = static_cast<std::uint8_t>(s.cls + 1);
    }
    bool visible = true;
    for (const auto& s : placed) {
      const auto pixels = std::count(mask.begin(), mask.end(), static_cast<std::uint8_t>(s.cls + 1));
      if (static_cast<std::size_t>(pixels) < config.min_visible_pixels) visible = false;
    }
    if (visible) break;
    if (attempt == 49) {
      // Fall back to the single largest object.
      placed.resize(1);
      mask.assign(n * n, 0);
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x)
          if (covers(placed[0], x + 0.5, y + 0.5)) mask[y * n + x] = static_cast<std::uint8_t>(placed[0].cls + 1);
    }
  }

  // Textured background: smooth sinusoids plus pixel noise, low saturation.
  std::vector<double> pixels(3 * n * n);
  const double base = rng.uniform(0.25, 0.6);
  double tint[3];
  for (double& t : tint) t = rng.uniform(-0.05, 0.05);
  const double fx = rng.uniform(0.2, 0.9), fy = rng.uniform(0.2, 0.9);
  const double phase_x = rng.uniform(0.0, 6.28), phase_y = rng.uniform(0.0, 6.28);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double texture = 0.06 * std::sin(fx * x + phase_x) * std::cos(fy * y + phase_y);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        pixels[ch * n * n + y * n + x] = base + tint[ch] + texture + rng.normal(0.0, 0.05);
      }
    }
  }

  // Bodies carry a faint hue cue over their whole extent; a small saturated
  // core carries a strong one.
  for (const auto& s : placed) {
    double body[3], core[3];
    const double hue = kHueDegrees[s.cls] + rng.normal(0.0, 6.0);
    hsv_to_rgb(hue, rng.uniform(0.18, 0.38), rng.uniform(0.5, 0.8), body);
    hsv_to_rgb(hue, rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0), core);
    const double core_offset = s.cls == 3 ? 0.75 * s.radius : 0.0;  // the ring's centre is a hole
    const double core_x = s.cx + core_offset * std::cos(s.angle);
    const double core_y = s.cy + core_offset * std::sin(s.angle);
    const double core_r = 0.3 * s.radius;
    const auto id = static_cast<std::uint8_t>(s.cls + 1);
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const std::size_t p = y * n + x;
        if (mask[p] != id) continue;
        const double dx = x + 0.5 - core_x, dy = y + 0.5 - core_y;
        const double* rgb = dx * dx + dy * dy <= core_r * core_r ? core : body;
        for (std::size_t ch = 0; ch < 3; ++ch) pixels[ch * n * n + p] = rgb[ch] + rng.normal(0.0, 0.06);
      }
    }
  }
  for (auto& v : pixels) v = quantize(v);

  ImageSample sample;
  sample.id = id;
  sample.height = n;
  sample.width = n;
  sample.image = Tensor({3, n, n}, std::move(pixels));
  sample.label.assign(kShapeClasses, 0);
  for (auto v : mask)
    if (v) sample.label[v - 1] = 1;
  sample.gt_mask = std::move(mask);
  return sample;
}

}  // namespace

Dataset generate_dataset(const ShapesConfig& config) {
  if (config.size == 0) throw ContractError("generate_dataset: size must be at least 1");
  if (config.canvas < 16 || config.canvas % 4 != 0) throw ContractError("generate_dataset: canvas must be a multiple of 4, >= 16");
  if (config.min_objects < 1 || config.max_objects < config.min_objects || config.max_objects > kShapeClasses) {
    throw ContractError("generate_dataset: bad object count range");
  }
  if (!(config.min_radius > 0.0 && config.min_radius <= config.max_radius && config.max_radius < 0.5)) {
    throw ContractError("generate_dataset: radius range must satisfy 0 < min <= max < 0.5");
  }
  Dataset out;
  out.reserve(config.size);
  for (std::size_t i = 0; i < config.size; ++i) {
    const auto id = config.first_id + static_cast<std::int64_t>(i);
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(id)));
    out.push_back(draw_sample(config, id, rng));
  }
  return out;
}

}  // namespace gwsm
