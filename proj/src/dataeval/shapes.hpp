#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "grouping/grouping.hpp"

namespace gwsm {

inline constexpr std::size_t kShapeClasses = 6;
inline constexpr std::array<std::string_view, kShapeClasses> kShapeNames = {"disk", "square", "triangle",
                                                                           "ring", "cross",  "bar"};

struct ShapesConfig {
  std::size_t size = 100;
  std::uint64_t seed = 0;
  std::size_t canvas = 32;
  std::size_t min_objects = 1;
  std::size_t max_objects = 3;
  std::size_t min_visible_pixels = 12;
  double min_radius = 0.25;  // fractions of the canvas side
  double max_radius = 0.38;
  std::int64_t first_id = 0;
};

// Multi-label shapes images with exact pixel masks. Classes are 1-based in
// masks (0 = background); label[c] refers to class c + 1.
Dataset generate_dataset(const ShapesConfig& config);

}  // namespace gwsm
