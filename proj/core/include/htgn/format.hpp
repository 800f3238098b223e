#ifndef HTGN_FORMAT_HPP
#define HTGN_FORMAT_HPP

#include <string>

namespace htgn {

/// Shortest round-trip decimal form of a double; deterministic, locale-free.
std::string format_double(double v);

}  // namespace htgn

#endif  // HTGN_FORMAT_HPP
