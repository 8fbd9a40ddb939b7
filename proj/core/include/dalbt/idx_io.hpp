#pragma once

#include "dalbt/sample.hpp"

#include <string>
#include <vector>

namespace dalbt {

// IDX (MNIST-family) binary format. Big-endian headers:
//   images: magic 0x00000803, then count, rows, cols, then count*rows*cols bytes
//   labels: magic 0x00000801, then count, then count bytes
// Pixels are scaled byte/255.0; ids are assigned 0..N-1 in file order.
std::vector<Sample> load_idx(const std::string& images_path, const std::string& labels_path,
                             const std::string& origin = kInDistOrigin);

// Inverse of load_idx: round(pixel*255) bytes, identical headers. Loading a
// file and saving it back reproduces the bytes exactly.
void save_idx(const std::vector<Sample>& samples, const std::string& images_path,
              const std::string& labels_path);

} // namespace dalbt
