// Copyright 2026 The softwalk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small helpers shared by the config readers. Internal to the library.

#ifndef SOFTWALK_SRC_JSON_UTIL_HPP_
#define SOFTWALK_SRC_JSON_UTIL_HPP_

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "softwalk/types.hpp"

namespace softwalk {

// Parses `text`; syntax errors become std::invalid_argument carrying the
// line and column of the offending character.
nlohmann::json parse_json(const std::string& text, const std::string& what);

std::string read_text_file(const std::filesystem::path& path);

Vec3 vec3_from_json(const nlohmann::json& j);
VecX vecx_from_json(const nlohmann::json& j);
// Accepts a 3x3 nested array or [ixx, iyy, izz] for a diagonal matrix.
Mat3 mat3_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Vec3& v);
nlohmann::json to_json(const VecX& v);
nlohmann::json to_json(const Mat3& m);

}  // namespace softwalk

#endif  // SOFTWALK_SRC_JSON_UTIL_HPP_
