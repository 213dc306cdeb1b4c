#pragma once

#include <string>
#include <vector>

#include "fedtrace/model.hpp"

namespace fedtrace {

struct NamedTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<float> data;
};

// .ftck container: a 4-byte little-endian manifest length, a JSON manifest
// (ordered list of {name, shape}), then the tensor values as little-endian
// 32-bit floats in manifest order. The loader validates the total length.
void save_ftck(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_ftck(const std::string& path);

void save_model(const std::string& path, const BnMlpModel& model);

// Rebuilds the architecture from the manifest names and shapes.
BnMlpModel load_model(const std::string& path);

} // namespace fedtrace
