#pragma once

#include <json.hpp>

#include "qmnum/common.hpp"

namespace qmnum::io {

// Matrix wire format: {"rows":r,"cols":c,"data":[[re,im],...]} row-major.
// Doubles round-trip bit-stable through nlohmann's shortest representation.
nlohmann::json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& j);

}  // namespace qmnum::io
