#pragma once

// JSONL persistence: one JSON object per line, schema version field "v" on
// every record, value-exact round-trips.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cotgen/data.hpp"
#include "json.hpp"

namespace cotgen {

inline void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& records) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open for write: " + path);
  for (const auto& r : records) out << r.dump() << "\n";
  if (!out) throw Error(Errc::io, "write failed: " + path);
}

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open for read: " + path);
  std::vector<nlohmann::json> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::io, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.contains("v") || j.at("v").get<int>() != kSchemaVersion)
      throw Error(Errc::schema_mismatch,
                  path + ":" + std::to_string(lineno) + ": unknown schema version");
    records.push_back(std::move(j));
  }
  return records;
}

template <class T>
void write_records(const std::string& path, const std::vector<T>& records) {
  std::vector<nlohmann::json> js;
  js.reserve(records.size());
  for (const auto& r : records) js.push_back(nlohmann::json(r));
  write_jsonl(path, js);
}

template <class T>
std::vector<T> read_records(const std::string& path) {
  std::vector<T> out;
  for (const auto& j : read_jsonl(path)) out.push_back(j.get<T>());
  return out;
}

}  // namespace cotgen
