#pragma once

#include <stdexcept>
#include <string>

namespace cotgen {

enum class Errc {
  unsatisfiable,
  empty_dataset,
  schedule_mismatch,
  incomplete_grid,
  empty_violations,
  unsupported_task,
  io,
  schema_mismatch,
  empty_pairs,
  no_valid_pairs,
  empty_prompt_set,
  missing_artifact,
  mixed_suites,
  config_invalid,
  invalid_argument,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::unsatisfiable: return "UNSATISFIABLE";
    case Errc::empty_dataset: return "EMPTY_DATASET";
    case Errc::schedule_mismatch: return "SCHEDULE_MISMATCH";
    case Errc::incomplete_grid: return "INCOMPLETE_GRID";
    case Errc::empty_violations: return "EMPTY_VIOLATIONS";
    case Errc::unsupported_task: return "UNSUPPORTED_TASK";
    case Errc::io: return "IO";
    case Errc::schema_mismatch: return "SCHEMA_MISMATCH";
    case Errc::empty_pairs: return "EMPTY_PAIRS";
    case Errc::no_valid_pairs: return "NO_VALID_PAIRS";
    case Errc::empty_prompt_set: return "EMPTY_PROMPT_SET";
    case Errc::missing_artifact: return "MISSING_ARTIFACT";
    case Errc::mixed_suites: return "MIXED_SUITES";
    case Errc::config_invalid: return "CONFIG_INVALID";
    case Errc::invalid_argument: return "INVALID_ARGUMENT";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace cotgen
