#pragma once

// Exact prompt-grid evaluator: the ground truth behind every label, score and
// benchmark table. Checks run in a fixed order so reports are deterministic:
//   1. completeness (no MASK cells),
//   2. per-requirement component matching (exact shape AND color),
//   3. no object components beyond the requirements,
//   4. the positional relation, for position prompts.
//
// A requirement only matches components with exactly its (shape, color).
// Positional relations compare component centroids with a 0.5-cell dead zone
// so near-ties cannot flip a verdict.

#include <optional>
#include <string>
#include <vector>

#include "cotgen/domain.hpp"
#include "cotgen/objects.hpp"
#include "cotgen/prompt.hpp"

namespace cotgen {

enum class ViolationCode : std::uint8_t {
  missing_object = 0,
  extra_object,
  wrong_count,
  wrong_color,
  wrong_position,
  wrong_binding,
  incomplete_image,
};

constexpr int kNumViolationCodes = 7;

inline const char* violation_name(ViolationCode c) {
  static const char* names[] = {"missing_object", "extra_object",   "wrong_count",
                                "wrong_color",    "wrong_position", "wrong_binding",
                                "incomplete_image"};
  return names[static_cast<int>(c)];
}

struct Violation {
  ViolationCode code = ViolationCode::missing_object;
  std::string expected;
  std::string observed;
  std::vector<Coord> cells;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct EvalResult {
  bool verdict = false;
  std::vector<Violation> violations;
};

// Misalignment report consumed by the generator's self-correction path.
// Oracle reports are EvalResults verbatim; learned reports come from the
// reflection scorer heads.
enum class ReportSource : std::uint8_t { oracle = 0, learned };

struct ReflectionReport {
  bool verdict = false;
  std::vector<Violation> violations;
  ReportSource source = ReportSource::oracle;
};

inline bool relation_satisfied(double subj_row, double subj_col, double obj_row, double obj_col,
                               Direction d) {
  switch (d) {
    case Direction::left_of: return subj_col < obj_col - 0.5;
    case Direction::right_of: return subj_col > obj_col + 0.5;
    case Direction::above: return subj_row < obj_row - 0.5;
    case Direction::below: return subj_row > obj_row + 0.5;
  }
  return false;
}

namespace detail {

struct ComboGroup {
  int combo = 0;
  Shape shape = Shape::square;
  Color color = Color::red;
  int required = 0;
};

// Requirements aggregated per (shape, color) in first-appearance order.
inline std::vector<ComboGroup> combo_groups(const PromptSpec& prompt) {
  std::vector<ComboGroup> groups;
  for (const auto& r : prompt.requirements) {
    bool merged = false;
    for (auto& g : groups)
      if (g.combo == r.combo()) {
        g.required += r.count;
        merged = true;
      }
    if (!merged) groups.push_back({r.combo(), r.shape, r.color, r.count});
  }
  return groups;
}

}  // namespace detail

inline EvalResult evaluate(const PromptSpec& prompt, const TokenGrid& grid) {
  EvalResult res;
  auto add = [&](ViolationCode code, std::string expected, std::string observed,
                 std::vector<Coord> cells) {
    res.violations.push_back({code, std::move(expected), std::move(observed), std::move(cells)});
  };

  // 1. completeness
  std::vector<Coord> masked;
  for (int r = 0; r < grid.height; ++r)
    for (int c = 0; c < grid.width; ++c)
      if (is_mask(grid.at(r, c))) masked.push_back({r, c});
  if (!masked.empty())
    add(ViolationCode::incomplete_image, "fully decoded grid",
        std::to_string(masked.size()) + " masked cells", masked);

  auto components = extract_objects(grid);
  std::vector<int> claimed(components.size(), 0);  // 0 free, 1 matched, 2 impostor

  auto groups = detail::combo_groups(prompt);

  // 2. per-requirement matching
  for (const auto& g : groups) {
    std::vector<int> matched;
    for (std::size_t i = 0; i < components.size(); ++i)
      if (claimed[i] == 0 && components[i].combo() == g.combo) matched.push_back(static_cast<int>(i));
    for (int i : matched) claimed[static_cast<std::size_t>(i)] = 1;

    std::string want = (g.required > 1 ? std::to_string(g.required) + " " : "") +
                       combo_name(g.shape, g.color) + (g.required > 1 ? "s" : "");
    if (matched.empty()) {
      // Prefer a color-mismatch report when an unclaimed component has the
      // right shape: wrong_binding for attribute-binding prompts, wrong_color
      // otherwise.
      int impostor = -1;
      for (std::size_t i = 0; i < components.size(); ++i)
        if (claimed[i] == 0 && components[i].shape == g.shape && components[i].color != g.color) {
          impostor = static_cast<int>(i);
          break;
        }
      if (impostor >= 0) {
        claimed[static_cast<std::size_t>(impostor)] = 2;
        ViolationCode code = prompt.category == PromptCategory::attr_binding
                                 ? ViolationCode::wrong_binding
                                 : ViolationCode::wrong_color;
        add(code, want,
            combo_name(components[static_cast<std::size_t>(impostor)].shape,
                       components[static_cast<std::size_t>(impostor)].color),
            components[static_cast<std::size_t>(impostor)].cells);
      } else {
        add(ViolationCode::missing_object, want, "none", {});
      }
    } else if (static_cast<int>(matched.size()) != g.required) {
      // Over-count: surplus components (beyond the first `required` in scan
      // order) carry the cells to clear. Under-count carries no cells; repair
      // means placing the shortfall.
      std::vector<Coord> cells;
      for (std::size_t k = static_cast<std::size_t>(g.required); k < matched.size(); ++k)
        for (const Coord& p : components[static_cast<std::size_t>(matched[k])].cells)
          cells.push_back(p);
      add(ViolationCode::wrong_count, std::to_string(g.required),
          std::to_string(matched.size()), std::move(cells));
    }
  }

  // 3. extra components
  for (std::size_t i = 0; i < components.size(); ++i)
    if (claimed[i] == 0)
      add(ViolationCode::extra_object, "no additional objects",
          combo_name(components[i].shape, components[i].color), components[i].cells);

  // 4. positional relation
  if (prompt.category == PromptCategory::position && prompt.relation) {
    const auto& rel = *prompt.relation;
    int subj_combo = prompt.requirements[static_cast<std::size_t>(rel.subject_index)].combo();
    int obj_combo = prompt.requirements[static_cast<std::size_t>(rel.object_index)].combo();
    const ObjectInstance* subj = nullptr;
    const ObjectInstance* obj = nullptr;
    for (std::size_t i = 0; i < components.size(); ++i) {
      if (claimed[i] != 1) continue;
      if (!subj && components[i].combo() == subj_combo) subj = &components[i];
      else if (!obj && components[i].combo() == obj_combo) obj = &components[i];
    }
    if (subj && obj &&
        !relation_satisfied(subj->centroid_row, subj->centroid_col, obj->centroid_row,
                            obj->centroid_col, rel.direction)) {
      std::string expected = combo_name(subj->shape, subj->color) + " " +
                             direction_name(rel.direction) + " " + combo_name(obj->shape, obj->color);
      std::string observed = "subject centroid (" + std::to_string(subj->centroid_row) + "," +
                             std::to_string(subj->centroid_col) + ") vs object (" +
                             std::to_string(obj->centroid_row) + "," +
                             std::to_string(obj->centroid_col) + ")";
      add(ViolationCode::wrong_position, expected, observed, subj->cells);
    }
  }

  res.verdict = res.violations.empty();
  return res;
}

// True iff the grid is decoded enough to be meaningfully assessed.
inline bool clarity_oracle(const TokenGrid& grid, double threshold = 0.6) {
  if (threshold <= 0.0 || threshold > 1.0)
    throw Error(Errc::invalid_argument, "clarity threshold must be in (0,1]");
  return grid.unmasked_fraction() >= threshold;
}

// Rollout-free check over currently unmasked content: reports only violations
// that no future decoding can undo (surplus counts, extra components, wrong
// colors/bindings). Missing content and relations are left open since later
// steps can still fill or shift them. Deliberately weak on early steps.
inline std::vector<Violation> unmasked_fatal_violations(const PromptSpec& prompt,
                                                        const TokenGrid& grid) {
  EvalResult full = evaluate(prompt, grid);
  std::vector<Violation> fatal;
  for (const auto& v : full.violations) {
    switch (v.code) {
      case ViolationCode::extra_object:
      case ViolationCode::wrong_color:
      case ViolationCode::wrong_binding:
        fatal.push_back(v);
        break;
      case ViolationCode::wrong_count:
        if (!v.cells.empty()) fatal.push_back(v);  // over-count only
        break;
      default:
        break;
    }
  }
  return fatal;
}

inline void to_json(nlohmann::json& j, const Coord& p) { j = nlohmann::json{{"r", p.row}, {"c", p.col}}; }
inline void from_json(const nlohmann::json& j, Coord& p) {
  p.row = j.at("r").get<int>();
  p.col = j.at("c").get<int>();
}

inline void to_json(nlohmann::json& j, const Violation& v) {
  j = nlohmann::json{{"code", violation_name(v.code)},
                     {"expected", v.expected},
                     {"observed", v.observed},
                     {"cells", v.cells}};
}

inline void from_json(const nlohmann::json& j, Violation& v) {
  std::string code = j.at("code").get<std::string>();
  bool found = false;
  for (int i = 0; i < kNumViolationCodes; ++i)
    if (code == violation_name(static_cast<ViolationCode>(i)))
      v.code = static_cast<ViolationCode>(i), found = true;
  if (!found) throw Error(Errc::schema_mismatch, "unknown violation code: " + code);
  v.expected = j.at("expected").get<std::string>();
  v.observed = j.at("observed").get<std::string>();
  v.cells = j.at("cells").get<std::vector<Coord>>();
}

inline void to_json(nlohmann::json& j, const ReflectionReport& r) {
  j = nlohmann::json{{"verdict", r.verdict},
                     {"violations", r.violations},
                     {"source", r.source == ReportSource::oracle ? "oracle" : "learned"}};
}

inline void from_json(const nlohmann::json& j, ReflectionReport& r) {
  r.verdict = j.at("verdict").get<bool>();
  r.violations = j.at("violations").get<std::vector<Violation>>();
  r.source = j.at("source").get<std::string>() == "oracle" ? ReportSource::oracle
                                                           : ReportSource::learned;
}

inline ReflectionReport oracle_report(const PromptSpec& prompt, const TokenGrid& grid) {
  EvalResult res = evaluate(prompt, grid);
  return ReflectionReport{res.verdict, res.violations, ReportSource::oracle};
}

}  // namespace cotgen
