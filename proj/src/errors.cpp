#include "dcst/errors.hpp"

#include <utility>

namespace dcst {

DataError::DataError(const std::string& what, std::string source,
                     std::size_t line)
    : Error(source.empty() ? what
            : line == 0    ? source + ": " + what
                           : source + ":" + std::to_string(line) + ": " + what),
      source_(std::move(source)),
      line_(line) {}

}  // namespace dcst
