#pragma once

// Strict JSON config reading: unknown keys and type mismatches become
// ValidationError, missing keys keep the caller's default.

#include <algorithm>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "mvbu/error.hpp"

namespace mvbu::json_util {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where)
{
    require(j.is_object(), where + " must be an object");
    for (const auto& [key, _] : j.items())
        require(std::any_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }),
                "unknown key '" + key + "' in " + where);
}

template <class T>
T get_checked(const nlohmann::json& j, const char* key, const T& fallback)
{
    try {
        return j.value(key, fallback);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad value for '") + key + "': " + e.what());
    }
}

} // namespace mvbu::json_util
