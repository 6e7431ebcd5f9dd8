#include "tfmean/ext_real.hpp"

#include <array>
#include <charconv>

namespace tfm {

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) return std::to_string(x);
  return std::string(buf.data(), ptr);
}

std::string ExtReal::to_string() const {
  return infinite_ ? std::string("inf") : format_double(value_);
}

std::ostream& operator<<(std::ostream& os, ExtReal x) { return os << x.to_string(); }

}  // namespace tfm
