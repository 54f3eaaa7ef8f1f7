#pragma once

// Parallel decoding schedule: how many cells commit at each step. Cosine
// spacing puts few cells in early tranches and many in late ones. The
// canonical tranche assignment (row-major cells split by the cumulative
// schedule) gives every complete grid a single well-defined likelihood
// factorization regardless of the adaptive order used while decoding.

#include <cmath>
#include <vector>

#include "cotgen/error.hpp"
#include "json.hpp"

namespace cotgen {

struct DecodeSchedule {
  int total_steps = 18;
  std::vector<int> cells_per_step;

  static DecodeSchedule cosine(int total_cells, int steps = 18) {
    if (steps < 1 || total_cells < 1)
      throw Error(Errc::invalid_argument, "schedule needs steps >= 1 and cells >= 1");
    if (total_cells < steps) steps = total_cells;  // keep every tranche non-empty

    DecodeSchedule s;
    s.total_steps = steps;
    std::vector<int> cum(static_cast<std::size_t>(steps) + 1, 0);
    const double pi = 3.14159265358979323846;
    for (int t = 1; t <= steps; ++t) {
      double frac = 1.0 - std::cos(pi * t / (2.0 * steps));
      cum[static_cast<std::size_t>(t)] =
          static_cast<int>(std::lround(frac * total_cells));
    }
    cum[static_cast<std::size_t>(steps)] = total_cells;
    // enforce strictly increasing while leaving room for the remaining steps
    for (int t = 1; t <= steps; ++t) {
      int lo = cum[static_cast<std::size_t>(t - 1)] + 1;
      int hi = total_cells - (steps - t);
      int v = cum[static_cast<std::size_t>(t)];
      cum[static_cast<std::size_t>(t)] = std::max(lo, std::min(v, hi));
    }
    s.cells_per_step.resize(static_cast<std::size_t>(steps));
    for (int t = 1; t <= steps; ++t)
      s.cells_per_step[static_cast<std::size_t>(t - 1)] =
          cum[static_cast<std::size_t>(t)] - cum[static_cast<std::size_t>(t - 1)];
    return s;
  }

  int total_cells() const {
    int n = 0;
    for (int c : cells_per_step) n += c;
    return n;
  }

  // cumulative()[t] = cells unmasked after step t (1-based t; [0] = 0)
  std::vector<int> cumulative() const {
    std::vector<int> cum(cells_per_step.size() + 1, 0);
    for (std::size_t t = 0; t < cells_per_step.size(); ++t) cum[t + 1] = cum[t] + cells_per_step[t];
    return cum;
  }

  friend bool operator==(const DecodeSchedule&, const DecodeSchedule&) = default;
};

inline void to_json(nlohmann::json& j, const DecodeSchedule& s) {
  j = nlohmann::json{{"total_steps", s.total_steps}, {"cells_per_step", s.cells_per_step}};
}

inline void from_json(const nlohmann::json& j, DecodeSchedule& s) {
  s.total_steps = j.at("total_steps").get<int>();
  s.cells_per_step = j.at("cells_per_step").get<std::vector<int>>();
}

}  // namespace cotgen
