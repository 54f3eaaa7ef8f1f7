#pragma once

// Token vocabulary and grids. A grid cell holds one of 26 tokens:
// id 0 = MASK (not yet decoded), id 1 = EMPTY, ids 2..25 = object tokens,
// one per (shape, color) combination: id = 2 + shape * 6 + color.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cotgen/error.hpp"
#include "json.hpp"

namespace cotgen {

using TokenId = std::uint8_t;

enum class Shape : std::uint8_t { square = 0, circle, triangle, cross };
enum class Color : std::uint8_t { red = 0, blue, green, yellow, purple, orange };

constexpr int kNumShapes = 4;
constexpr int kNumColors = 6;
constexpr int kNumCombos = kNumShapes * kNumColors;  // 24
constexpr int kVocabSize = 2 + kNumCombos;           // 26
constexpr TokenId kMask = 0;
constexpr TokenId kEmpty = 1;

inline const char* shape_name(Shape s) {
  static const char* names[] = {"square", "circle", "triangle", "cross"};
  return names[static_cast<int>(s)];
}

inline const char* color_name(Color c) {
  static const char* names[] = {"red", "blue", "green", "yellow", "purple", "orange"};
  return names[static_cast<int>(c)];
}

inline int combo_index(Shape s, Color c) {
  return static_cast<int>(s) * kNumColors + static_cast<int>(c);
}

inline TokenId object_token(Shape s, Color c) {
  return static_cast<TokenId>(2 + combo_index(s, c));
}

inline bool is_mask(TokenId t) { return t == kMask; }
inline bool is_empty(TokenId t) { return t == kEmpty; }
inline bool is_object(TokenId t) { return t >= 2 && t < kVocabSize; }
inline int combo_of(TokenId t) { return static_cast<int>(t) - 2; }
inline Shape shape_of(TokenId t) { return static_cast<Shape>(combo_of(t) / kNumColors); }
inline Color color_of(TokenId t) { return static_cast<Color>(combo_of(t) % kNumColors); }

inline std::string token_name(TokenId t) {
  if (is_mask(t)) return "mask";
  if (is_empty(t)) return "empty";
  return std::string(color_name(color_of(t))) + " " + shape_name(shape_of(t));
}

inline std::string combo_name(Shape s, Color c) {
  return std::string(color_name(c)) + " " + shape_name(s);
}

// Stable token-id table, written to vocab.json at workspace init.
inline nlohmann::json vocab_table() {
  nlohmann::json tokens = nlohmann::json::array();
  for (int id = 0; id < kVocabSize; ++id) {
    TokenId t = static_cast<TokenId>(id);
    nlohmann::json e{{"id", id}, {"name", token_name(t)}};
    if (is_object(t)) {
      e["shape"] = shape_name(shape_of(t));
      e["color"] = color_name(color_of(t));
    }
    tokens.push_back(e);
  }
  return nlohmann::json{{"vocab_size", kVocabSize}, {"tokens", tokens}};
}

struct Coord {
  int row = 0;
  int col = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
  friend auto operator<=>(const Coord&, const Coord&) = default;
};

struct TokenGrid {
  int height = 12;
  int width = 12;
  std::vector<TokenId> cells;  // row-major, size height * width

  TokenGrid() : cells(static_cast<std::size_t>(height * width), kMask) {}
  TokenGrid(int h, int w, TokenId fill = kMask)
      : height(h), width(w), cells(static_cast<std::size_t>(h) * w, fill) {}

  int size() const { return height * width; }
  bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
  TokenId at(int r, int c) const { return cells[static_cast<std::size_t>(r) * width + c]; }
  TokenId at(Coord p) const { return at(p.row, p.col); }
  void set(int r, int c, TokenId t) { cells[static_cast<std::size_t>(r) * width + c] = t; }
  void set(Coord p, TokenId t) { set(p.row, p.col, t); }

  int unmasked_count() const {
    int n = 0;
    for (TokenId t : cells) n += !is_mask(t);
    return n;
  }

  double unmasked_fraction() const {
    return size() == 0 ? 0.0 : static_cast<double>(unmasked_count()) / size();
  }

  bool complete() const { return unmasked_count() == size(); }

  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

inline void to_json(nlohmann::json& j, const TokenGrid& g) {
  std::vector<int> ids(g.cells.begin(), g.cells.end());
  j = nlohmann::json{{"h", g.height}, {"w", g.width}, {"cells", ids}};
}

inline void from_json(const nlohmann::json& j, TokenGrid& g) {
  g.height = j.at("h").get<int>();
  g.width = j.at("w").get<int>();
  std::vector<int> ids = j.at("cells").get<std::vector<int>>();
  if (static_cast<int>(ids.size()) != g.height * g.width)
    throw Error(Errc::schema_mismatch, "grid cell count does not match h*w");
  g.cells.clear();
  g.cells.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= kVocabSize) throw Error(Errc::schema_mismatch, "token id out of range");
    g.cells.push_back(static_cast<TokenId>(id));
  }
}

}  // namespace cotgen
