#pragma once

#include <string>
#include <vector>

#include "dfta/image.hpp"

namespace dfta::augment {

// The fourteen operators, in bank order. The index of an op in this enum is
// its action id everywhere (agent outputs, audit records, configs).
enum class Op : int {
  identity = 0,
  auto_contrast,
  equalize,
  rotate,
  solarize,
  color,
  posterize,
  contrast,
  brightness,
  sharpness,
  shear_x,
  shear_y,
  translate_x,
  translate_y,
};

inline constexpr int kOpCount = 14;

// lowercase snake_case, used in configs and reports
const std::string& op_name(Op op);
Op op_from_name(const std::string& name);

struct MagnitudeRange {
  double lo;
  double hi;
};
MagnitudeRange magnitude_range(Op op);

struct AugmentationAction {
  Op op = Op::identity;
  double magnitude = 0.0;
};

// Pure function; geometric ops use bilinear sampling with zero fill, pixel
// ops follow the classical definitions. Throws on out-of-range magnitude or
// an empty image.
Image apply(const AugmentationAction& action, const Image& img);

// All 14 ops at fixed default magnitudes, in bank order. `size` trims the
// bank to a prefix (the action space stays indexed 0..size-1).
std::vector<AugmentationAction> default_bank(int size = kOpCount);

}  // namespace dfta::augment
