#pragma once

#include <stdexcept>
#include <string>

namespace detgeom {

/// Bad input data: malformed files, records or configuration. The message
/// names the offending file, line or element.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace detgeom
