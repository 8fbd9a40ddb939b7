#pragma once

#include "dalbt/sample.hpp"

#include <string>
#include <vector>

namespace dalbt {

// CIFAR-10 binary batches: 3073-byte records, label byte first, then
// 1024 R + 1024 G + 1024 B plane bytes. Returns 32x32x3 samples with ids
// numbered across files in path order.
std::vector<Sample> load_cifar_binary(const std::vector<std::string>& paths,
                                      const std::string& origin = kInDistOrigin);

} // namespace dalbt
