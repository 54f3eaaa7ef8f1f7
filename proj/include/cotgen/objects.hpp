#pragma once

// Connected-component extraction over object tokens. Two cells belong to the
// same component iff they hold the same object token and are linked by a
// 4-neighbor path. MASK and EMPTY cells are ignored.

#include <algorithm>
#include <vector>

#include "cotgen/domain.hpp"

namespace cotgen {

struct ObjectInstance {
  Shape shape = Shape::square;
  Color color = Color::red;
  std::vector<Coord> cells;  // sorted row-major
  int min_row = 0, min_col = 0, max_row = 0, max_col = 0;
  double centroid_row = 0.0, centroid_col = 0.0;

  int combo() const { return combo_index(shape, color); }
};

// Components are returned in scan order of their first (row-major) cell.
inline std::vector<ObjectInstance> extract_objects(const TokenGrid& g) {
  std::vector<ObjectInstance> out;
  std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
  std::vector<int> stack;

  for (int idx = 0; idx < g.size(); ++idx) {
    TokenId t = g.cells[static_cast<std::size_t>(idx)];
    if (!is_object(t) || seen[static_cast<std::size_t>(idx)]) continue;

    ObjectInstance obj;
    obj.shape = shape_of(t);
    obj.color = color_of(t);
    stack.assign(1, idx);
    seen[static_cast<std::size_t>(idx)] = 1;
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      int r = cur / g.width, c = cur % g.width;
      obj.cells.push_back({r, c});
      const int dr[] = {-1, 1, 0, 0};
      const int dc[] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int nr = r + dr[k], nc = c + dc[k];
        if (!g.in_bounds(nr, nc)) continue;
        int nidx = nr * g.width + nc;
        if (seen[static_cast<std::size_t>(nidx)] || g.at(nr, nc) != t) continue;
        seen[static_cast<std::size_t>(nidx)] = 1;
        stack.push_back(nidx);
      }
    }
    std::sort(obj.cells.begin(), obj.cells.end());
    obj.min_row = obj.max_row = obj.cells[0].row;
    obj.min_col = obj.max_col = obj.cells[0].col;
    double sr = 0, sc = 0;
    for (const Coord& p : obj.cells) {
      obj.min_row = std::min(obj.min_row, p.row);
      obj.max_row = std::max(obj.max_row, p.row);
      obj.min_col = std::min(obj.min_col, p.col);
      obj.max_col = std::max(obj.max_col, p.col);
      sr += p.row;
      sc += p.col;
    }
    obj.centroid_row = sr / static_cast<double>(obj.cells.size());
    obj.centroid_col = sc / static_cast<double>(obj.cells.size());
    out.push_back(std::move(obj));
  }
  return out;
}

}  // namespace cotgen
