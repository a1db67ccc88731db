#pragma once

#include <string>

#include "frontlab/geometry.hpp"

namespace frontlab::runner {

struct ShapeSpec {
  enum Kind { circle, ellipse, file } kind = circle;
  double a = 1.0, b = 1.0;
  std::string path;
};

ShapeSpec parse_shape_spec(const std::string& s);

/// Uniform-speed curve with m nodes.
ClosedCurve build_shape(const ShapeSpec& sp, int m);

}  // namespace frontlab::runner
