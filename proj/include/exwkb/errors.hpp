#pragma once

#include <stdexcept>
#include <string>

namespace exwkb {

/// Failure classes. The CLI maps them onto exit codes.
enum class failure_class { degeneracy = 1, input = 2, numeric = 3 };

class error : public std::runtime_error {
 public:
  error(failure_class cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  failure_class cls() const noexcept { return cls_; }

 private:
  failure_class cls_;
};

struct config_error : error {
  explicit config_error(const std::string& w) : error(failure_class::input, w) {}
};
struct input_error : error {
  explicit input_error(const std::string& w) : error(failure_class::input, w) {}
};
struct degenerate_error : error {
  explicit degenerate_error(const std::string& w) : error(failure_class::degeneracy, w) {}
};
struct tameness_error : error {
  explicit tameness_error(const std::string& w) : error(failure_class::degeneracy, w) {}
};
struct geometry_error : error {
  explicit geometry_error(const std::string& w) : error(failure_class::numeric, w) {}
};
struct numeric_error : error {
  explicit numeric_error(const std::string& w) : error(failure_class::numeric, w) {}
};

}  // namespace exwkb
