#ifndef HTGN_CHECKPOINT_HPP
#define HTGN_CHECKPOINT_HPP

#include <string>
#include <utility>
#include <vector>

#include "htgn/tensor.hpp"

namespace htgn {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Versioned JSON parameter file: name -> shape + row-major values.
void save_checkpoint(const std::string& path, const NamedTensors& params);

/// Load values into already-constructed parameters by name. Throws on
/// missing names, shape mismatch, or an unsupported format version.
void load_checkpoint(const std::string& path, NamedTensors& params);

}  // namespace htgn

#endif  // HTGN_CHECKPOINT_HPP
