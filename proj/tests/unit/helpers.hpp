#pragma once

#include "ads3d/error.hpp"

#include <filesystem>
#include <functional>
#include <string>

namespace testutil {

/// Error code thrown by `f`, or "" when it returns normally.
inline std::string error_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const ads3d::Error& e) {
        return e.code();
    }
    return "";
}

inline std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "ads3d_unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace testutil
