#pragma once

#include <string>

#include "detgeom/box.hpp"

namespace detgeom {

inline constexpr const char* kDefaultClassName = "Person";

/// A scored prediction on one image.
struct Detection {
  std::string image_id;
  Box box;
  double score = 0.0;  // confidence in [0, 1]
  std::string class_name = kDefaultClassName;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// An annotated object.
struct GroundTruth {
  std::string image_id;
  Box box;
  std::string class_name = kDefaultClassName;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

}  // namespace detgeom
