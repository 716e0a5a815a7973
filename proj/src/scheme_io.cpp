#include "meyerlab/scheme_io.hpp"

#include <fstream>

namespace meyerlab {

namespace {

Vec read_vec(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorCode::ConfigError, std::string(what) + " must be an array");
  Vec v;
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorCode::ConfigError, std::string(what) + " must hold numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

}  // namespace

Scheme scheme_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "scheme must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "d" && key != "m" && key != "basis" && key != "window" && key != "name") {
      throw Error(ErrorCode::ConfigError, "unknown scheme key '" + key + "'");
    }
  }
  for (const char* key : {"d", "m", "basis", "window"}) {
    if (!j.contains(key)) throw Error(ErrorCode::ConfigError, std::string("scheme is missing '") + key + "'");
  }
  if (!j["d"].is_number_unsigned() || !j["m"].is_number_unsigned()) {
    throw Error(ErrorCode::ConfigError, "'d' and 'm' must be positive integers");
  }
  const auto d = j["d"].get<std::size_t>();
  const auto m = j["m"].get<std::size_t>();
  if (!j["basis"].is_array()) throw Error(ErrorCode::ConfigError, "'basis' must be an array of rows");
  std::vector<Vec> rows;
  for (const auto& row : j["basis"]) rows.push_back(read_vec(row, "basis row"));
  if (rows.size() != d + m) throw Error(ErrorCode::ConfigError, "'basis' must have d + m rows");
  for (const Vec& r : rows) {
    if (r.size() != d + m) throw Error(ErrorCode::ConfigError, "'basis' rows must have d + m entries");
  }
  const auto& win = j["window"];
  if (!win.is_object() || !win.contains("lo") || !win.contains("hi")) {
    throw Error(ErrorCode::ConfigError, "'window' needs 'lo' and 'hi'");
  }
  Box box(read_vec(win["lo"], "window.lo"), read_vec(win["hi"], "window.hi"));
  return Scheme(LatticeBasis::from_rows(rows), d, m, Window(std::move(box)));
}

nlohmann::json scheme_to_json(const Scheme& scheme) {
  nlohmann::json rows = nlohmann::json::array();
  const auto& mat = scheme.basis().matrix();
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < mat.cols(); ++k) row.push_back(mat(i, k));
    rows.push_back(row);
  }
  return {{"d", scheme.d()},
          {"m", scheme.m()},
          {"basis", rows},
          {"window", {{"lo", scheme.window().box.lo()}, {"hi", scheme.window().box.hi()}}}};
}

Scheme load_scheme(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scheme file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, "malformed scheme JSON in " + path.string() + ": " + e.what());
  }
  return scheme_from_json(j);
}

}  // namespace meyerlab
