#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "meyerlab/cutproject.hpp"

namespace meyerlab {

/// { "d": int, "m": int, "basis": [[row-major]], "window": {"lo": [...], "hi": [...]} }
/// plus an optional "name".
Scheme scheme_from_json(const nlohmann::json& j);
nlohmann::json scheme_to_json(const Scheme& scheme);
Scheme load_scheme(const std::filesystem::path& path);

}  // namespace meyerlab
