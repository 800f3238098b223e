#include "htgn/format.hpp"

#include <charconv>
#include <stdexcept>

namespace htgn {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("double formatting failed");
    return std::string(buf, ptr);
}

}  // namespace htgn
