#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace folq {

using EntityId = int32_t;
/// Edge-relation id in [0, 2|R|): ids >= |R| denote inverse relations.
using RelationId = int32_t;
using EdgeId = int64_t;
using NodeId = int32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void concat_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void concat_into(std::ostringstream& os, const T& head, const Rest&... rest) {
  os << head;
  concat_into(os, rest...);
}
}  // namespace detail

template <typename... Parts>
std::string concat(const Parts&... parts) {
  std::ostringstream os;
  detail::concat_into(os, parts...);
  return os.str();
}

template <typename... Parts>
[[noreturn]] void raise(const Parts&... parts) {
  throw Error(concat(parts...));
}

}  // namespace folq
