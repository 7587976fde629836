#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "ccs/error.hpp"

namespace ccs {

// Unknown keys are errors, not warnings; typos in hyperparameter names must
// not silently fall back to defaults.
inline void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                               const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError(context + ": unknown key '" + item.key() + "'");
    }
}

template <typename T>
void maybe_get(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

} // namespace ccs
