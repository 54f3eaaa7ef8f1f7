#pragma once

// Procedural gold renderer. Places every required object as an axis-aligned
// rectangle with sides of 2-3 cells, uniformly over positions that keep at
// least one empty cell between objects. Position prompts are rejection
// sampled until the relation holds, so render_gold(p) always evaluates true.

#include <vector>

#include "cotgen/eval.hpp"
#include "cotgen/rng.hpp"

namespace cotgen {

namespace detail {

struct PlacedRect {
  int top = 0, left = 0, h = 0, w = 0;
  double centroid_row() const { return top + (h - 1) / 2.0; }
  double centroid_col() const { return left + (w - 1) / 2.0; }
};

// True if rect (expanded by a 1-cell gap) stays clear of the blocked mask.
inline bool rect_free(const std::vector<char>& blocked, int gh, int gw, const PlacedRect& rc) {
  for (int r = rc.top - 1; r <= rc.top + rc.h; ++r)
    for (int c = rc.left - 1; c <= rc.left + rc.w; ++c) {
      if (r < 0 || r >= gh || c < 0 || c >= gw) continue;
      if (blocked[static_cast<std::size_t>(r) * gw + c]) return false;
    }
  return true;
}

}  // namespace detail

constexpr int kRenderAttemptBudget = 1000;

inline TokenGrid render_gold(const PromptSpec& prompt, RngStream rng, int height = 12,
                             int width = 12) {
  int min_area = 0;
  for (const auto& r : prompt.requirements) min_area += r.count * 4;  // 2x2 minimum
  if (min_area > (height * width) * 2 / 5)
    throw Error(Errc::unsatisfiable, "total object area exceeds 40% of grid for " + prompt.text());
  validate(prompt);

  struct Instance {
    TokenId token;
    int req_index;
  };
  std::vector<Instance> instances;
  for (std::size_t i = 0; i < prompt.requirements.size(); ++i)
    for (int k = 0; k < prompt.requirements[i].count; ++k)
      instances.push_back({object_token(prompt.requirements[i].shape, prompt.requirements[i].color),
                           static_cast<int>(i)});

  int attempts = 0;
  while (true) {
    std::vector<char> blocked(static_cast<std::size_t>(height * width), 0);
    std::vector<detail::PlacedRect> rects;
    bool ok = true;
    for (const auto& inst : instances) {
      (void)inst;
      bool placed = false;
      while (!placed) {
        if (++attempts > kRenderAttemptBudget)
          throw Error(Errc::unsatisfiable, "placement attempts exhausted for " + prompt.text());
        detail::PlacedRect rc;
        rc.h = rng.uniform_range(2, 3);
        rc.w = rng.uniform_range(2, 3);
        if (height - rc.h < 0 || width - rc.w < 0) continue;
        rc.top = rng.uniform_range(0, height - rc.h);
        rc.left = rng.uniform_range(0, width - rc.w);
        if (!detail::rect_free(blocked, height, width, rc)) continue;
        for (int r = rc.top; r < rc.top + rc.h; ++r)
          for (int c = rc.left; c < rc.left + rc.w; ++c)
            blocked[static_cast<std::size_t>(r) * width + c] = 1;
        rects.push_back(rc);
        placed = true;
      }
    }

    if (prompt.relation) {
      // Requirements all have count 1 for position prompts, so instance order
      // matches requirement order.
      const auto& rel = *prompt.relation;
      const auto& subj = rects[static_cast<std::size_t>(rel.subject_index)];
      const auto& obj = rects[static_cast<std::size_t>(rel.object_index)];
      if (!relation_satisfied(subj.centroid_row(), subj.centroid_col(), obj.centroid_row(),
                              obj.centroid_col(), rel.direction))
        ok = false;
    }

    if (ok) {
      TokenGrid grid(height, width, kEmpty);
      for (std::size_t i = 0; i < instances.size(); ++i)
        for (int r = rects[i].top; r < rects[i].top + rects[i].h; ++r)
          for (int c = rects[i].left; c < rects[i].left + rects[i].w; ++c)
            grid.set(r, c, instances[i].token);
      return grid;
    }
    if (attempts > kRenderAttemptBudget)
      throw Error(Errc::unsatisfiable, "placement attempts exhausted for " + prompt.text());
  }
}

}  // namespace cotgen
