#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace gsr {

// GSR_CHECK(cond, "message " << detail) throws std::runtime_error on failure.
#define GSR_CHECK(cond, msg)                                        \
  do {                                                              \
    if (!(cond)) {                                                  \
      std::ostringstream oss_;                                      \
      oss_ << "check failed (" #cond "): " << msg;                  \
      throw std::runtime_error(oss_.str());                         \
    }                                                               \
  } while (0)

#define GSR_FAIL(msg)                          \
  do {                                         \
    std::ostringstream oss_;                   \
    oss_ << msg;                               \
    throw std::runtime_error(oss_.str());      \
  } while (0)

}  // namespace gsr
