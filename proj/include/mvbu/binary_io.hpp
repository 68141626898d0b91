#pragma once

// Little-endian fixed-width stream helpers shared by the checkpoint and dataset
// containers. Hosts are required to be little-endian.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mvbu/error.hpp"

namespace mvbu::io {

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

template <class T>
void write_pod(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void write_array(std::ostream& os, std::span<const T> v)
{
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

template <class T>
T read_pod(std::istream& is, const std::string& what)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated " + what);
    return v;
}

template <class T>
void read_array(std::istream& is, std::span<T> out, const std::string& what)
{
    is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()));
    if (!is) throw IoError("truncated " + what);
}

inline void write_string(std::ostream& os, const std::string& s)
{
    write_pod<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const std::string& what, std::uint64_t max_len = 1ULL << 32)
{
    const auto n = read_pod<std::uint64_t>(is, what);
    if (n > max_len) throw IoError("corrupt length in " + what);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw IoError("truncated " + what);
    return s;
}

/// FNV-1a over raw bytes; used for manifest hashes, not for security.
inline std::uint64_t fnv1a(std::span<const char> bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_file(const std::string& path);
std::string hex64(std::uint64_t v);

} // namespace mvbu::io
