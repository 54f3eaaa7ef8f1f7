#pragma once

// Input map for the log-linear token model. Per masked cell it encodes the
// prompt (category one-hot + required count per combo), the cell's coarse
// 3x3 position bucket, the 8-neighborhood token counts, the per-combo
// component counts already decoded, and optional violation-code one-hots
// from a reflection report.
//
// The map intentionally carries no exact global counts and no long-range
// relation geometry, which is where the pretrained model's counting and
// position errors come from.
//
// Count-valued features are scaled to a low dynamic range (neighborhood /4,
// components /4); raw 0-8 counts make plain SGD oscillate.

#include <algorithm>
#include <array>
#include <vector>

#include "cotgen/eval.hpp"
#include "cotgen/objects.hpp"
#include "cotgen/prompt.hpp"

namespace cotgen {

constexpr int kFCategory = 0;                         // 6: prompt category one-hot
constexpr int kFRequired = kFCategory + kNumCategories;  // 24: required count per combo
constexpr int kFBucket = kFRequired + kNumCombos;        // 9: 3x3 position bucket one-hot
constexpr int kFNeighbor = kFBucket + 9;                 // 26: neighborhood count per token id
constexpr int kFComponents = kFNeighbor + kVocabSize;    // 24: decoded component count per combo
constexpr int kFReport = kFComponents + kNumCombos;      // 7: report violation-code one-hots
constexpr int kFPressure = kFReport + kNumViolationCodes;   // 24: unplaced-requirement urgency
constexpr int kFAdjSize = kFPressure + kNumCombos;  // 24: size of adjacent component per combo
constexpr int kFeatureDim = kFAdjSize + kNumCombos;         // 144

// Sparse feature vector; ~20 of the 96 slots are ever non-zero.
struct FeatureVec {
  std::vector<std::pair<int, double>> entries;

  void add(int index, double value) {
    if (value != 0.0) entries.emplace_back(index, value);
  }

  std::vector<double> dense() const {
    std::vector<double> d(kFeatureDim, 0.0);
    for (auto [i, v] : entries) d[static_cast<std::size_t>(i)] += v;
    return d;
  }
};

// Whole-grid context shared by every cell of one decoding step.
struct GridContext {
  std::array<int, kNumCombos> component_counts{};
  std::vector<int> component_size_at;  // per cell: size of its component (0 for non-object)
  double unmasked_fraction = 0.0;

  static GridContext of(const TokenGrid& grid) {
    GridContext ctx;
    ctx.component_size_at.assign(static_cast<std::size_t>(grid.size()), 0);
    for (const auto& obj : extract_objects(grid)) {
      ctx.component_counts[static_cast<std::size_t>(obj.combo())]++;
      for (const Coord& p : obj.cells)
        ctx.component_size_at[static_cast<std::size_t>(p.row) * grid.width + p.col] =
            static_cast<int>(obj.cells.size());
    }
    ctx.unmasked_fraction = grid.unmasked_fraction();
    return ctx;
  }
};

inline FeatureVec featurize_ctx(const PromptSpec& prompt, const TokenGrid& grid,
                                const GridContext& ctx, Coord cell,
                                const ReflectionReport* report = nullptr) {
  FeatureVec f;
  f.entries.reserve(24);

  f.add(kFCategory + static_cast<int>(prompt.category), 1.0);
  // presence only: a count-proportional value overshoots under sampling
  // feedback (count info flows through the pressure deficit instead)
  for (const auto& r : prompt.requirements) f.add(kFRequired + r.combo(), 1.0);

  int bucket_row = grid.height <= 1 ? 0 : cell.row * 3 / grid.height;
  int bucket_col = grid.width <= 1 ? 0 : cell.col * 3 / grid.width;
  f.add(kFBucket + bucket_row * 3 + bucket_col, 1.0);

  std::array<int, kVocabSize> neigh{};
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      int r = cell.row + dr, c = cell.col + dc;
      if (grid.in_bounds(r, c)) neigh[grid.at(r, c)]++;
    }
  for (int t = 0; t < kVocabSize; ++t)
    if (neigh[static_cast<std::size_t>(t)] > 0)
      f.add(kFNeighbor + t, static_cast<double>(neigh[static_cast<std::size_t>(t)]) / 4.0);

  for (int k = 0; k < kNumCombos; ++k)
    if (ctx.component_counts[static_cast<std::size_t>(k)] > 0)
      f.add(kFComponents + k, static_cast<double>(ctx.component_counts[static_cast<std::size_t>(k)]) / 4.0);

  // Size of the largest edge-adjacent component per combo: distinguishes a
  // small partial blob worth extending from a finished one to stop at.
  {
    std::array<int, kNumCombos> adj{};
    const int dr[] = {-1, 1, 0, 0};
    const int dc[] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      int r = cell.row + dr[k], c = cell.col + dc[k];
      if (!grid.in_bounds(r, c)) continue;
      TokenId t = grid.at(r, c);
      if (!is_object(t)) continue;
      int size = ctx.component_size_at[static_cast<std::size_t>(r) * grid.width + c];
      adj[static_cast<std::size_t>(combo_of(t))] =
          std::max(adj[static_cast<std::size_t>(combo_of(t))], size);
    }
    for (int k = 0; k < kNumCombos; ++k)
      if (adj[static_cast<std::size_t>(k)] > 0)
        f.add(kFAdjSize + k, std::min(1.0, adj[static_cast<std::size_t>(k)] / 9.0));
  }

  if (report) {
    std::array<bool, kNumViolationCodes> codes{};
    for (const auto& v : report->violations) codes[static_cast<std::size_t>(v.code)] = true;
    for (int k = 0; k < kNumViolationCodes; ++k)
      if (codes[static_cast<std::size_t>(k)]) f.add(kFReport + k, 1.0);
  }

  // Urgency of a still-unplaced requirement, growing with decode progress.
  // A static score can never win the confidence race against EMPTY as the
  // grid fills; this interaction lets training raise an object token's score
  // as room runs out. Capped at presence (not count) so multi-object
  // requirements seed one component at a time instead of flooding the grid.
  if (ctx.unmasked_fraction > 0.0)
    for (const auto& r : prompt.requirements)
      if (r.count > ctx.component_counts[static_cast<std::size_t>(r.combo())])
        f.add(kFPressure + r.combo(), ctx.unmasked_fraction);

  return f;
}

inline FeatureVec featurize(const PromptSpec& prompt, const TokenGrid& grid, Coord cell,
                            const ReflectionReport* report = nullptr) {
  return featurize_ctx(prompt, grid, GridContext::of(grid), cell, report);
}

}  // namespace cotgen
