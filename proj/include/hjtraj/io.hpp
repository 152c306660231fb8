#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hjtraj/errors.hpp"
#include "hjtraj/preprocess.hpp"
#include "hjtraj/solvers.hpp"

namespace hjtraj::io {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_field(const std::string& field, const std::string& file, int line) {
  const std::string t = trim(field);
  double v{};
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw ParseError(file + ":" + std::to_string(line) + ": not a number: '" + field + "'");
  return v;
}

}  // namespace detail

/// Reads traffic measurements from a CSV file with the header `x,y,z`.
/// Parse failures carry the file name and line number.
inline std::vector<TrafficSample> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw EmptyInputError(path + ": empty file");
  ++lineno;
  {
    std::string header = detail::trim(line);
    header.erase(std::remove_if(header.begin(), header.end(),
                                [](char c) { return c == ' ' || c == '\t'; }),
                 header.end());
    if (header != "x,y,z")
      throw ParseError(path + ":1: expected header 'x,y,z', got '" + line + "'");
  }
  std::vector<TrafficSample> samples;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string fx, fy, fz, extra;
    if (!std::getline(ss, fx, ',') || !std::getline(ss, fy, ',') || !std::getline(ss, fz, ','))
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 3 comma-separated fields");
    if (std::getline(ss, extra, ','))
      throw ParseError(path + ":" + std::to_string(lineno) + ": too many fields");
    TrafficSample s{detail::parse_field(fx, path, lineno), detail::parse_field(fy, path, lineno),
                    detail::parse_field(fz, path, lineno)};
    if (s.z < 0.0)
      throw ParseError(path + ":" + std::to_string(lineno) + ": negative traffic volume");
    samples.push_back(s);
  }
  if (samples.empty()) throw EmptyInputError(path + ": no data rows");
  return samples;
}

inline nlohmann::json phase_to_json(const QuadraticPhase& p) {
  return {{"zh", {p.center.x, p.center.y}}, {"u0", p.curvature}, {"u1", p.offset}};
}

inline QuadraticPhase phase_from_json(const nlohmann::json& j) {
  return {{j.at("zh").at(0).get<double>(), j.at("zh").at(1).get<double>()},
          j.at("u0").get<double>(), j.at("u1").get<double>()};
}

inline nlohmann::json model_to_json(const FittedModel& model) {
  nlohmann::json j;
  j["phases"] = nlohmann::json::array();
  for (const auto& p : model.phases) j["phases"].push_back(phase_to_json(p));
  j["quad_error"] = model.quad_error;
  j["labels"] = model.labels;
  return j;
}

/// Loads the phases of a fitted model; quad_error and labels are optional so
/// hand-written landscape files also load.
inline std::vector<QuadraticPhase> read_model_phases(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.contains("phases") || !j["phases"].is_array() || j["phases"].empty())
    throw ParseError(path + ": missing non-empty 'phases' array");
  std::vector<QuadraticPhase> phases;
  try {
    for (const auto& p : j["phases"]) phases.push_back(phase_from_json(p));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return phases;
}

/// Writes trajectory samples as CSV with columns t,x,y,vx,vy,H,phase.
inline void write_trajectory_csv(const std::string& path,
                                 std::span<const TrajectorySample> samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "t,x,y,vx,vy,H,phase\n";
  for (const auto& s : samples) {
    out << format_double(s.t) << ',' << format_double(s.position.x) << ','
        << format_double(s.position.y) << ',' << format_double(s.velocity.x) << ','
        << format_double(s.velocity.y) << ',' << format_double(s.energy) << ',' << s.phase
        << '\n';
  }
}

}  // namespace hjtraj::io
