#ifndef SEACO_CHECKPOINT_HPP
#define SEACO_CHECKPOINT_HPP

#include <map>
#include <string>

#include "seaco/params.hpp"

namespace seaco {

// Binary checkpoint: magic line "SEACO-CKPT v1\n", then per parameter (in
// name-sorted order) a header line "name ndim d1 d2 ...\n" followed by the
// values as little-endian 32-bit floats.
void save_checkpoint(const ParamStore& ps, const std::string& path);
std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace seaco

#endif
