#pragma once

#include "dfta/image.hpp"

namespace dfta {

// real = 0, fake = 1; domain identifies the generating distribution
struct LabeledImage {
  Image image;
  int label = 0;
  int domain = 0;
};

}  // namespace dfta
