#pragma once

// Workspace layout, artifact store and run manifests for the CLI.
//
//   workspace/
//     vocab.json            stable token-id table, written at init
//     params/  scorers/     content-hash filenames plus <label>.json pointers
//     data/                 curated JSONL datasets
//     runs/                 one directory per command invocation (manifests,
//                           reports, tables, transcripts)
//     .lock                 held for the duration of a mutating command

#include <chrono>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unistd.h>

#include "cotgen/error.hpp"
#include "cotgen/hash.hpp"
#include "json.hpp"

namespace cotgen {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_artifact, path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open for write: " + path);
  out << content;
  if (!out) throw Error(Errc::io, "write failed: " + path);
}

class Workspace {
 public:
  explicit Workspace(std::string root) : root_(std::move(root)) {}

  const std::string& root() const { return root_; }
  std::string dir(const std::string& sub) const { return root_ + "/" + sub; }

  void init(const nlohmann::json& vocab) const {
    for (const char* d : {"params", "scorers", "data", "runs"})
      std::filesystem::create_directories(dir(d));
    write_file(dir("vocab.json"), vocab.dump(2) + "\n");
  }

  bool initialized() const { return std::filesystem::exists(dir("vocab.json")); }

  // Content-hash artifact store: the payload lands in <kind>/<hash>.json and
  // <kind>/<label>.json points at it.
  std::string save_artifact(const std::string& kind, const std::string& label,
                            const nlohmann::json& payload) const {
    std::string body = payload.dump();
    std::string hash = content_hash(body);
    std::string path = dir(kind) + "/" + hash + ".json";
    write_file(path, body);
    write_file(dir(kind) + "/" + label + ".json",
               nlohmann::json{{"v", 1}, {"ref", hash + ".json"}}.dump() + "\n");
    return path;
  }

  // Accepts a filesystem path, a label, or a hash filename.
  std::string resolve(const std::string& kind, const std::string& name) const {
    for (const std::string candidate :
         {name, dir(kind) + "/" + name, dir(kind) + "/" + name + ".json"}) {
      if (!std::filesystem::exists(candidate)) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(candidate));
      } catch (...) {
        throw Error(Errc::io, "unreadable artifact: " + candidate);
      }
      if (j.is_object() && j.contains("ref"))
        return dir(kind) + "/" + j.at("ref").get<std::string>();
      return candidate;
    }
    throw Error(Errc::missing_artifact, name + " (searched " + dir(kind) + ")");
  }

 private:
  std::string root_;
};

// Exclusive workspace lock, released on destruction.
class WorkspaceLock {
 public:
  explicit WorkspaceLock(const Workspace& ws) : path_(ws.root() + "/.lock") {
    std::filesystem::create_directories(ws.root());
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw Error(Errc::io, "workspace is locked by another command (" + path_ +
                                "); remove the stale lock if no command is running");
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }

  ~WorkspaceLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }

  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

// Per-command provenance record: config echo, input/output hashes, seed,
// versions and timing. Deterministic apart from the timing block.
class Manifest {
 public:
  Manifest(std::string command, std::uint64_t seed, nlohmann::json config_echo)
      : start_(std::chrono::steady_clock::now()) {
    j_["v"] = 1;
    j_["command"] = std::move(command);
    j_["seed"] = seed;
    j_["config"] = std::move(config_echo);
    j_["tool_version"] = "0.1.0";
    j_["inputs"] = nlohmann::json::object();
    j_["outputs"] = nlohmann::json::object();
  }

  void input(const std::string& name, const std::string& path) {
    j_["inputs"][name] = {{"path", path}, {"hash", file_hash(path)}};
  }

  void output(const std::string& name, const std::string& path) {
    j_["outputs"][name] = {{"path", path}, {"hash", file_hash(path)}};
  }

  void note(const std::string& key, const nlohmann::json& value) { j_[key] = value; }

  // run directory name derives from the deterministic part of the manifest
  std::string write(const Workspace& ws) {
    double wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start_).count();
    std::string det = j_.dump();
    std::string run_dir =
        ws.dir("runs") + "/" + j_["command"].get<std::string>() + "-" + content_hash(det).substr(0, 12);
    nlohmann::json full = j_;
    full["timing"] = {{"wall_ms", wall_ms},
                      {"written_unix_ms",
                       std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch()).count()}};
    write_file(run_dir + "/manifest.json", full.dump(2) + "\n");
    return run_dir;
  }

 private:
  nlohmann::json j_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace cotgen
