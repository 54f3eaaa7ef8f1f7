#pragma once

// Labeled dataset record types shared by curation, scorer training and
// alignment, plus their JSONL serialization (schema_version field "v").

#include <optional>
#include <string>
#include <vector>

#include "cotgen/domain.hpp"
#include "cotgen/eval.hpp"
#include "cotgen/prompt.hpp"

namespace cotgen {

constexpr int kSchemaVersion = 1;

enum class Stage : std::uint8_t { final = 0, intermediate };
enum class Task : std::uint8_t { orm = 0, prm, parm_clarity, parm_potential, parm_select, reflection };
enum class Label : std::uint8_t { no = 0, yes };

constexpr int kNumTasks = 6;

inline const char* stage_name(Stage s) { return s == Stage::final ? "final" : "intermediate"; }
inline const char* task_name(Task t) {
  static const char* names[] = {"orm", "prm", "parm_clarity", "parm_potential", "parm_select",
                                "reflection"};
  return names[static_cast<int>(t)];
}
inline Task task_from_name(const std::string& s) {
  for (int i = 0; i < kNumTasks; ++i)
    if (s == task_name(static_cast<Task>(i))) return static_cast<Task>(i);
  throw Error(Errc::config_invalid, "unknown task: " + s);
}
inline const char* label_name(Label l) { return l == Label::yes ? "yes" : "no"; }

struct RankingExample {
  PromptSpec prompt;
  TokenGrid grid;
  Stage stage = Stage::final;
  std::optional<int> step_index;  // present iff stage == intermediate
  Task task = Task::orm;
  Label label = Label::no;
  std::uint64_t seed = 0;  // stream key that generated the grid
};

struct DpoPair {
  PromptSpec prompt;
  TokenGrid y_yes;
  TokenGrid y_no;
};

struct ReflectionExample {
  PromptSpec prompt;
  TokenGrid grid;
  ReflectionReport report;
};

struct CorrectionTriple {
  PromptSpec prompt;
  TokenGrid bad;
  ReflectionReport report;
  TokenGrid good;
};

inline void to_json(nlohmann::json& j, const RankingExample& e) {
  j = nlohmann::json{{"v", kSchemaVersion},     {"prompt", e.prompt},
                     {"grid", e.grid},          {"stage", stage_name(e.stage)},
                     {"task", task_name(e.task)}, {"label", label_name(e.label)},
                     {"seed", e.seed}};
  if (e.step_index) j["step_index"] = *e.step_index;
}

inline void from_json(const nlohmann::json& j, RankingExample& e) {
  e.prompt = j.at("prompt").get<PromptSpec>();
  e.grid = j.at("grid").get<TokenGrid>();
  e.stage = j.at("stage").get<std::string>() == "final" ? Stage::final : Stage::intermediate;
  e.task = task_from_name(j.at("task").get<std::string>());
  e.label = j.at("label").get<std::string>() == "yes" ? Label::yes : Label::no;
  e.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("step_index"))
    e.step_index = j.at("step_index").get<int>();
  else
    e.step_index.reset();
}

inline void to_json(nlohmann::json& j, const DpoPair& p) {
  j = nlohmann::json{
      {"v", kSchemaVersion}, {"prompt", p.prompt}, {"y_yes", p.y_yes}, {"y_no", p.y_no}};
}

inline void from_json(const nlohmann::json& j, DpoPair& p) {
  p.prompt = j.at("prompt").get<PromptSpec>();
  p.y_yes = j.at("y_yes").get<TokenGrid>();
  p.y_no = j.at("y_no").get<TokenGrid>();
}

inline void to_json(nlohmann::json& j, const ReflectionExample& e) {
  j = nlohmann::json{
      {"v", kSchemaVersion}, {"prompt", e.prompt}, {"grid", e.grid}, {"report", e.report}};
}

inline void from_json(const nlohmann::json& j, ReflectionExample& e) {
  e.prompt = j.at("prompt").get<PromptSpec>();
  e.grid = j.at("grid").get<TokenGrid>();
  e.report = j.at("report").get<ReflectionReport>();
}

inline void to_json(nlohmann::json& j, const CorrectionTriple& t) {
  j = nlohmann::json{{"v", kSchemaVersion},
                     {"prompt", t.prompt},
                     {"bad", t.bad},
                     {"report", t.report},
                     {"good", t.good}};
}

inline void from_json(const nlohmann::json& j, CorrectionTriple& t) {
  t.prompt = j.at("prompt").get<PromptSpec>();
  t.bad = j.at("bad").get<TokenGrid>();
  t.report = j.at("report").get<ReflectionReport>();
  t.good = j.at("good").get<TokenGrid>();
}

}  // namespace cotgen
