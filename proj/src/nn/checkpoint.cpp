#include "mvbu/nn/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "mvbu/binary_io.hpp"
#include "mvbu/error.hpp"

namespace mvbu::nn {

namespace {
constexpr char kMagic[8] = {'M', 'V', 'B', 'U', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
} // namespace

const StoredArray& Checkpoint::find(const std::string& name) const
{
    const auto it = std::find_if(arrays.begin(), arrays.end(), [&](const auto& a) { return a.name == name; });
    if (it == arrays.end()) throw ValidationError("checkpoint has no array '" + name + "'");
    return *it;
}

void write_checkpoint(const std::string& path, const nlohmann::json& metadata, const std::vector<NamedTensor>& params)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint " + path);
    os.write(kMagic, sizeof kMagic);
    io::write_pod(os, kVersion);
    io::write_string(os, metadata.dump());
    io::write_pod<std::uint64_t>(os, params.size());
    for (const auto& p : params) {
        io::write_string(os, p.name);
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(p.tensor.rank()));
        for (int d : p.tensor.shape()) io::write_pod<std::int32_t>(os, d);
        io::write_array(os, p.tensor.values());
    }
    if (!os) throw IoError("failed writing checkpoint " + path);
}

Checkpoint read_checkpoint(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint " + path);
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError(path + " is not a checkpoint");
    if (io::read_pod<std::uint32_t>(is, "checkpoint version") != kVersion)
        throw IoError("unsupported checkpoint version in " + path);
    Checkpoint ck;
    try {
        ck.metadata = nlohmann::json::parse(io::read_string(is, "checkpoint metadata"));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("corrupt checkpoint metadata: " + std::string(e.what()));
    }
    const auto count = io::read_pod<std::uint64_t>(is, "checkpoint array count");
    for (std::uint64_t i = 0; i < count; ++i) {
        StoredArray a;
        a.name = io::read_string(is, "array name", 4096);
        const auto rank = io::read_pod<std::uint32_t>(is, "array rank");
        if (rank > 8) throw IoError("corrupt array rank in " + path);
        for (std::uint32_t r = 0; r < rank; ++r) {
            const auto d = io::read_pod<std::int32_t>(is, "array dims");
            if (d < 0) throw IoError("corrupt array dims in " + path);
            a.shape.push_back(d);
        }
        a.values.resize(numel(a.shape));
        io::read_array(is, std::span<double>(a.values), "array '" + a.name + "'");
        ck.arrays.push_back(std::move(a));
    }
    return ck;
}

void load_into(const Checkpoint& ckpt, const std::vector<NamedTensor>& params)
{
    for (const auto& p : params) {
        const auto& a = ckpt.find(p.name);
        require(a.shape == p.tensor.shape(), "checkpoint array '" + p.name + "' has shape " + shape_string(a.shape) +
                                                 ", model expects " + shape_string(p.tensor.shape()));
        std::copy(a.values.begin(), a.values.end(), p.tensor.node().value.begin());
    }
}

} // namespace mvbu::nn
