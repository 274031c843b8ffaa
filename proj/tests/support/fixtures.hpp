#pragma once

#include "wattless/bundle.hpp"

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

namespace wattless::testing {

inline std::filesystem::path fixture_root()
{
    return WATTLESS_FIXTURE_DIR;
}

/// Names of the hand-written fixture bundles, sorted.
inline std::vector<std::string> fixture_names()
{
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(fixture_root())) {
        if (e.is_directory()) {
            out.push_back(e.path().filename().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline SiteBundle load_fixture(const std::string& name)
{
    return load_bundle(fixture_root() / name);
}

} // namespace wattless::testing
