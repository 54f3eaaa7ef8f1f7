#pragma once

// Compositional prompts over the token universe: six categories mirroring
// object-centric text-to-image templates (single object, two objects,
// counting, colors, positional relation, attribute binding).
//
// Train and test prompts draw from disjoint (shape, color) combination pools
// per category, so evaluation prompts are never seen during curation.

#include <optional>
#include <string>
#include <vector>

#include "cotgen/domain.hpp"
#include "cotgen/error.hpp"
#include "cotgen/rng.hpp"

namespace cotgen {

enum class PromptCategory : std::uint8_t {
  single_object = 0,
  two_object,
  counting,
  colors,
  position,
  attr_binding,
};

constexpr int kNumCategories = 6;

inline const char* category_name(PromptCategory c) {
  static const char* names[] = {"single_object", "two_object", "counting",
                                "colors",        "position",   "attr_binding"};
  return names[static_cast<int>(c)];
}

inline PromptCategory category_from_name(const std::string& s) {
  for (int i = 0; i < kNumCategories; ++i) {
    PromptCategory c = static_cast<PromptCategory>(i);
    if (s == category_name(c)) return c;
  }
  throw Error(Errc::config_invalid, "unknown prompt category: " + s);
}

enum class Direction : std::uint8_t { left_of = 0, right_of, above, below };

inline const char* direction_name(Direction d) {
  static const char* names[] = {"left_of", "right_of", "above", "below"};
  return names[static_cast<int>(d)];
}

struct ObjectRequirement {
  Shape shape = Shape::square;
  Color color = Color::red;
  int count = 1;
  int combo() const { return combo_index(shape, color); }
  friend bool operator==(const ObjectRequirement&, const ObjectRequirement&) = default;
};

struct Relation {
  int subject_index = 0;
  int object_index = 1;
  Direction direction = Direction::left_of;
  friend bool operator==(const Relation&, const Relation&) = default;
};

struct PromptSpec {
  PromptCategory category = PromptCategory::single_object;
  std::vector<ObjectRequirement> requirements;
  std::optional<Relation> relation;

  friend bool operator==(const PromptSpec&, const PromptSpec&) = default;

  // Human-readable form, e.g. "two_object: a red square and a blue circle".
  std::string text() const {
    std::string s = category_name(category);
    s += ":";
    for (std::size_t i = 0; i < requirements.size(); ++i) {
      const auto& r = requirements[i];
      s += (i == 0 ? " " : " and ");
      if (r.count > 1) s += std::to_string(r.count) + " ";
      s += combo_name(r.shape, r.color);
      if (r.count > 1) s += "s";
    }
    if (relation) {
      s += " (" + std::string(combo_name(requirements[relation->subject_index].shape,
                                         requirements[relation->subject_index].color)) +
           " " + direction_name(relation->direction) + " " +
           combo_name(requirements[relation->object_index].shape,
                      requirements[relation->object_index].color) +
           ")";
    }
    return s;
  }

  // Stable key used for joins and hashing.
  std::string key() const {
    std::string s = std::to_string(static_cast<int>(category));
    for (const auto& r : requirements)
      s += "|" + std::to_string(r.combo()) + "x" + std::to_string(r.count);
    if (relation)
      s += "|R" + std::to_string(relation->subject_index) + "," +
           std::to_string(relation->object_index) + "," +
           std::to_string(static_cast<int>(relation->direction));
    return s;
  }
};

// Category structural invariants; throws on violation.
inline void validate(const PromptSpec& p) {
  const auto& reqs = p.requirements;
  auto fail = [&](const std::string& m) {
    throw Error(Errc::invalid_argument, "prompt invariant: " + m);
  };
  if (p.relation.has_value() != (p.category == PromptCategory::position))
    fail("relation present iff category is position");
  switch (p.category) {
    case PromptCategory::single_object:
    case PromptCategory::colors:
      if (reqs.size() != 1 || reqs[0].count != 1) fail("needs 1 requirement with count 1");
      break;
    case PromptCategory::two_object:
      if (reqs.size() != 2 || reqs[0].count != 1 || reqs[1].count != 1)
        fail("needs 2 requirements with counts 1");
      break;
    case PromptCategory::counting:
      if (reqs.size() != 1 || reqs[0].count < 2 || reqs[0].count > 4)
        fail("needs 1 requirement with count in [2,4]");
      break;
    case PromptCategory::position:
      if (reqs.size() != 2) fail("needs 2 requirements");
      if (!p.relation) fail("needs a relation");
      if (p.relation->subject_index == p.relation->object_index) fail("relation indices equal");
      break;
    case PromptCategory::attr_binding:
      if (reqs.size() != 2) fail("needs 2 requirements");
      if (reqs[0].color == reqs[1].color) fail("needs distinct colors");
      break;
  }
}

enum class PromptPool : std::uint8_t { train = 0, test };

// Disjoint checkerboard split of the 24 (shape, color) combos, rotated per
// category: within a category, train and test prompts never share a combo
// (the overlap filter), while every combo still occurs in some category's
// train pool, so all token behaviors are learnable.
inline bool combo_in_pool(Shape s, Color c, PromptCategory cat, PromptPool pool) {
  bool even = ((static_cast<int>(s) + static_cast<int>(c) + static_cast<int>(cat)) % 2) == 0;
  return pool == PromptPool::train ? even : !even;
}

inline std::vector<std::pair<Shape, Color>> pool_combos(PromptCategory cat, PromptPool pool) {
  std::vector<std::pair<Shape, Color>> out;
  for (int s = 0; s < kNumShapes; ++s)
    for (int c = 0; c < kNumColors; ++c)
      if (combo_in_pool(static_cast<Shape>(s), static_cast<Color>(c), cat, pool))
        out.emplace_back(static_cast<Shape>(s), static_cast<Color>(c));
  return out;
}

inline std::vector<PromptSpec> sample_prompts(PromptCategory category, int count, PromptPool pool,
                                              RngStream rng) {
  if (count < 1) throw Error(Errc::invalid_argument, "sample_prompts needs count >= 1");
  auto combos = pool_combos(category, pool);
  auto pick = [&](RngStream& r) { return combos[r.uniform_int(combos.size())]; };

  std::vector<PromptSpec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    RngStream r = rng.derive(static_cast<std::uint64_t>(i));
    PromptSpec p;
    p.category = category;
    switch (category) {
      case PromptCategory::single_object:
      case PromptCategory::colors: {
        auto [s, c] = pick(r);
        p.requirements = {{s, c, 1}};
        break;
      }
      case PromptCategory::counting: {
        auto [s, c] = pick(r);
        p.requirements = {{s, c, r.uniform_range(2, 4)}};
        break;
      }
      case PromptCategory::two_object:
      case PromptCategory::position: {
        auto [s1, c1] = pick(r);
        auto [s2, c2] = pick(r);
        while (s2 == s1) std::tie(s2, c2) = pick(r);
        p.requirements = {{s1, c1, 1}, {s2, c2, 1}};
        if (category == PromptCategory::position)
          p.relation = Relation{0, 1, static_cast<Direction>(r.uniform_int(4))};
        break;
      }
      case PromptCategory::attr_binding: {
        auto [s1, c1] = pick(r);
        auto [s2, c2] = pick(r);
        while (s2 == s1 || c2 == c1) std::tie(s2, c2) = pick(r);
        p.requirements = {{s1, c1, 1}, {s2, c2, 1}};
        break;
      }
    }
    validate(p);
    out.push_back(std::move(p));
  }
  return out;
}

inline void to_json(nlohmann::json& j, const ObjectRequirement& r) {
  j = nlohmann::json{
      {"shape", shape_name(r.shape)}, {"color", color_name(r.color)}, {"count", r.count}};
}

inline void from_json(const nlohmann::json& j, ObjectRequirement& r) {
  std::string s = j.at("shape").get<std::string>();
  std::string c = j.at("color").get<std::string>();
  bool found = false;
  for (int i = 0; i < kNumShapes; ++i)
    if (s == shape_name(static_cast<Shape>(i))) r.shape = static_cast<Shape>(i), found = true;
  if (!found) throw Error(Errc::schema_mismatch, "unknown shape: " + s);
  found = false;
  for (int i = 0; i < kNumColors; ++i)
    if (c == color_name(static_cast<Color>(i))) r.color = static_cast<Color>(i), found = true;
  if (!found) throw Error(Errc::schema_mismatch, "unknown color: " + c);
  r.count = j.at("count").get<int>();
}

inline void to_json(nlohmann::json& j, const Relation& r) {
  j = nlohmann::json{{"subject_index", r.subject_index},
                     {"object_index", r.object_index},
                     {"direction", direction_name(r.direction)}};
}

inline void from_json(const nlohmann::json& j, Relation& r) {
  r.subject_index = j.at("subject_index").get<int>();
  r.object_index = j.at("object_index").get<int>();
  std::string d = j.at("direction").get<std::string>();
  bool found = false;
  for (int i = 0; i < 4; ++i)
    if (d == direction_name(static_cast<Direction>(i)))
      r.direction = static_cast<Direction>(i), found = true;
  if (!found) throw Error(Errc::schema_mismatch, "unknown direction: " + d);
}

inline void to_json(nlohmann::json& j, const PromptSpec& p) {
  j = nlohmann::json{{"category", category_name(p.category)}, {"requirements", p.requirements}};
  if (p.relation) j["relation"] = *p.relation;
}

inline void from_json(const nlohmann::json& j, PromptSpec& p) {
  p.category = category_from_name(j.at("category").get<std::string>());
  p.requirements = j.at("requirements").get<std::vector<ObjectRequirement>>();
  if (j.contains("relation"))
    p.relation = j.at("relation").get<Relation>();
  else
    p.relation.reset();
}

}  // namespace cotgen
