#pragma once

#include "dalbt/network.hpp"

#include <string>
#include <vector>

namespace dalbt {

/* Parameter checkpoint file, all integers little-endian:
 *
 *   char[8]  magic "DALBTCKP"
 *   u32      format version (1)
 *   u32      tensor count
 *   per tensor:
 *     u32         name length, then that many name bytes
 *     u32         rank, then rank u32 dims
 *     u64         value count (must equal the dim product)
 *     f64[count]  IEEE-754 doubles, little-endian
 *
 * Tensors appear in parameter-vector order, so concatenating the value
 * blocks reproduces the flat parameter vector.
 */

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;
};

void write_checkpoint_file(const std::vector<NamedTensor>& tensors, const std::string& path);
std::vector<NamedTensor> read_checkpoint_file(const std::string& path);

// Network parameters as named tensors and back. Loading matches tensors by
// name and checks shapes; the file must cover every parameter exactly once.
void save_checkpoint(const Network& net, const std::string& path);
void load_checkpoint(Network& net, const std::string& path);

} // namespace dalbt
