#pragma once

// Checkpoint container:
//   "MVBUCKPT" | u32 version | u64-length JSON metadata |
//   u64 count | per array: u64-length name, u32 rank, i32 dims[rank], f64 values
// All integers and reals little-endian.

#include <string>
#include <vector>

#include <json.hpp>

#include "mvbu/nn/layers.hpp"

namespace mvbu::nn {

struct StoredArray {
    std::string name;
    Shape shape;
    std::vector<double> values;
};

struct Checkpoint {
    nlohmann::json metadata;
    std::vector<StoredArray> arrays;

    const StoredArray& find(const std::string& name) const;
};

void write_checkpoint(const std::string& path, const nlohmann::json& metadata, const std::vector<NamedTensor>& params);
Checkpoint read_checkpoint(const std::string& path);

/// Copies stored arrays into `params` by name; shapes must match.
void load_into(const Checkpoint& ckpt, const std::vector<NamedTensor>& params);

} // namespace mvbu::nn
