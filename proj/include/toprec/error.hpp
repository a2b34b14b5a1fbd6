// Error taxonomy shared by the library and the CLI exit-code mapping.
#pragma once

#include <stdexcept>
#include <string>

namespace toprec {

enum class ErrKind {
  kInput,     // malformed files, invalid curve data, bad CLI arguments
  kResource,  // order/depth caps exhausted
  kInternal,  // broken engine invariants (should never fire)
};

class Error : public std::runtime_error {
 public:
  Error(ErrKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrKind kind() const { return kind_; }

 private:
  ErrKind kind_;
};

inline Error input_error(const std::string& msg) {
  return Error(ErrKind::kInput, msg);
}
inline Error resource_error(const std::string& msg) {
  return Error(ErrKind::kResource, msg);
}
inline Error internal_error(const std::string& msg) {
  return Error(ErrKind::kInternal, msg);
}

}  // namespace toprec
