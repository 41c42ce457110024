#pragma once

#include <stdexcept>
#include <string>

namespace aqml {

// All library failures carry the name of the module that raised them so the
// CLI can report provenance without parsing messages.
class Error : public std::runtime_error {
public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

private:
  std::string module_;
};

}  // namespace aqml
