#pragma once

// The trainable conditional token model: a log-linear categorical model over
// the vocabulary, decoded with parallel iterative unmasking (cosine schedule,
// confidence-ordered commits). Log-linear keeps gradients exact and training
// desk-scale, while the restricted feature map reproduces the compositional
// failure modes that verification and alignment are meant to exploit.
//
// Likelihoods for preference training use the canonical tranche assignment
// (row-major cells split by the cosine schedule): adaptive decoding order
// would make image likelihood path-dependent, so one fixed factorization is
// used for every complete grid.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cotgen/data.hpp"
#include "cotgen/features.hpp"
#include "cotgen/render.hpp"
#include "cotgen/rng.hpp"
#include "cotgen/schedule.hpp"

namespace cotgen {

struct ModelParams {
  int vocab_size = kVocabSize;
  int feature_dim = kFeatureDim;
  std::string version = "v1";
  std::string parent;                // lineage of the params this was trained from
  std::vector<TokenId> sampleable;   // tokens the model can emit; never MASK
  std::vector<double> weights;       // vocab_size x feature_dim, row-major by token

  static ModelParams zeros() {
    ModelParams m;
    m.weights.assign(static_cast<std::size_t>(m.vocab_size) * m.feature_dim, 0.0);
    for (int t = 1; t < kVocabSize; ++t) m.sampleable.push_back(static_cast<TokenId>(t));
    return m;
  }

  static ModelParams random(RngStream rng, double stddev = 0.5) {
    ModelParams m = zeros();
    for (double& w : m.weights) w = rng.normal(0.0, stddev);
    m.version = "random";
    return m;
  }

  double w(int token, int feat) const {
    return weights[static_cast<std::size_t>(token) * feature_dim + feat];
  }
  double& w(int token, int feat) {
    return weights[static_cast<std::size_t>(token) * feature_dim + feat];
  }

  bool finite() const {
    for (double x : weights)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline void to_json(nlohmann::json& j, const ModelParams& m) {
  std::vector<int> ids(m.sampleable.begin(), m.sampleable.end());
  j = nlohmann::json{{"v", kSchemaVersion}, {"vocab_size", m.vocab_size},
                     {"feature_dim", m.feature_dim}, {"version", m.version},
                     {"parent", m.parent},           {"sampleable", ids},
                     {"weights", m.weights}};
}

inline void from_json(const nlohmann::json& j, ModelParams& m) {
  m.vocab_size = j.at("vocab_size").get<int>();
  m.feature_dim = j.at("feature_dim").get<int>();
  m.version = j.at("version").get<std::string>();
  m.parent = j.at("parent").get<std::string>();
  m.sampleable.clear();
  for (int id : j.at("sampleable").get<std::vector<int>>())
    m.sampleable.push_back(static_cast<TokenId>(id));
  m.weights = j.at("weights").get<std::vector<double>>();
  if (static_cast<int>(m.weights.size()) != m.vocab_size * m.feature_dim)
    throw Error(Errc::schema_mismatch, "weight matrix size mismatch");
}

struct GenConfig {
  int height = 12;
  int width = 12;
  double temperature = 1.0;     // curation uses 1.6
  DecodeSchedule schedule = DecodeSchedule::cosine(144, 18);
  bool confidence_ordering = true;
  // Gumbel noise scale on the commit confidences, annealed to zero over the
  // schedule (the MaskGiT randomness-annealing trick). Without it, background
  // certainty outranks every object sample and all content piles into the
  // last tranches.
  double confidence_noise = 3.0;
  bool greedy = false;          // temperature -> 0+ limit; argmax, no rng use

  void check() const {
    if (temperature <= 0.0) throw Error(Errc::invalid_argument, "temperature must be > 0");
    if (schedule.total_cells() != height * width)
      throw Error(Errc::schedule_mismatch, "schedule does not cover the grid");
  }
};

struct GenerationTrace {
  PromptSpec prompt;
  std::vector<TokenGrid> steps;       // steps[i] has the first i+1 tranches unmasked
  std::vector<double> step_logprobs;  // sum of log-probs of tokens committed at each step
  DecodeSchedule schedule;
  double temperature = 1.0;
  std::uint64_t seed = 0;

  const TokenGrid& final_grid() const { return steps.back(); }
};

namespace detail {

// logits over m.sampleable for one cell
inline void token_scores(const ModelParams& m, const FeatureVec& f, std::vector<double>& out) {
  out.assign(m.sampleable.size(), 0.0);
  for (std::size_t k = 0; k < m.sampleable.size(); ++k) {
    const double* row = m.weights.data() + static_cast<std::size_t>(m.sampleable[k]) * m.feature_dim;
    double s = 0.0;
    for (auto [i, v] : f.entries) s += row[i] * v;
    out[k] = s;
  }
}

inline void softmax_inplace(std::vector<double>& scores, double temperature) {
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double z = 0.0;
  for (double& s : scores) {
    s = std::exp((s - mx) / temperature);
    z += s;
  }
  for (double& s : scores) s /= z;
}

}  // namespace detail

// One path being decoded, advanced one schedule step at a time. PRM and PARM
// searches drive this directly so their paths are bit-identical to decode()
// under the same per-step streams.
struct DecodeState {
  TokenGrid grid;
  int step = 0;  // next schedule step to run
  std::vector<double> step_logprobs;

  static DecodeState start(const GenConfig& config) {
    DecodeState s;
    s.grid = TokenGrid(config.height, config.width, kMask);
    return s;
  }

  bool done(const GenConfig& config) const { return step >= config.schedule.total_steps; }
};

// Runs schedule step `state.step`: samples a token per masked cell (row-major
// rng consumption), commits the tranche-size cells with the highest sampled
// token probability, Gumbel-perturbed by the annealed confidence noise (ties
// to the lowest cell index). Greedy mode drops both sampling and noise.
inline void advance_one_step(const ModelParams& params, const PromptSpec& prompt,
                             const GenConfig& config, DecodeState& state, RngStream step_stream,
                             const ReflectionReport* report = nullptr) {
  const int tranche = config.schedule.cells_per_step[static_cast<std::size_t>(state.step)];
  GridContext ctx = GridContext::of(state.grid);

  struct CellDraw {
    int cell;
    TokenId token;
    double confidence;
    double logprob;
  };
  std::vector<CellDraw> draws;
  draws.reserve(static_cast<std::size_t>(state.grid.size()));
  std::vector<double> probs;

  for (int idx = 0; idx < state.grid.size(); ++idx) {
    if (!is_mask(state.grid.cells[static_cast<std::size_t>(idx)])) continue;
    Coord cell{idx / state.grid.width, idx % state.grid.width};
    FeatureVec f = featurize_ctx(prompt, state.grid, ctx, cell, report);
    detail::token_scores(params, f, probs);

    std::size_t pick;
    if (config.greedy) {
      // argmax logits; confidence and logprob from the temperature-1 softmax
      pick = 0;
      for (std::size_t k = 1; k < probs.size(); ++k)
        if (probs[k] > probs[pick]) pick = k;
      detail::softmax_inplace(probs, 1.0);
    } else {
      detail::softmax_inplace(probs, config.temperature);
      double u = step_stream.uniform();
      double acc = 0.0;
      pick = probs.size() - 1;
      for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) {
          pick = k;
          break;
        }
      }
    }
    double key = std::log(probs[pick]);
    if (!config.greedy && config.confidence_noise > 0.0) {
      // anneal with the masked fraction: noisy while the canvas is open,
      // pure confidence for the final cleanup
      double anneal = 1.0 - state.grid.unmasked_fraction();
      double u = std::max(step_stream.uniform(), 0x1.0p-53);
      key += config.confidence_noise * anneal * -std::log(-std::log(u));
    }
    draws.push_back({idx, params.sampleable[pick], key, std::log(probs[pick])});
  }

  if (config.confidence_ordering) {
    std::sort(draws.begin(), draws.end(), [](const CellDraw& a, const CellDraw& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      return a.cell < b.cell;
    });
  }

  double logprob = 0.0;
  int commit = std::min<int>(tranche, static_cast<int>(draws.size()));
  for (int k = 0; k < commit; ++k) {
    state.grid.cells[static_cast<std::size_t>(draws[static_cast<std::size_t>(k)].cell)] =
        draws[static_cast<std::size_t>(k)].token;
    logprob += draws[static_cast<std::size_t>(k)].logprob;
  }
  state.step_logprobs.push_back(logprob);
  state.step++;
}

inline GenerationTrace decode(const ModelParams& params, const PromptSpec& prompt,
                              const GenConfig& config, RngStream stream,
                              const ReflectionReport* report = nullptr) {
  config.check();
  GenerationTrace trace;
  trace.prompt = prompt;
  trace.schedule = config.schedule;
  trace.temperature = config.temperature;
  trace.seed = stream.key();

  DecodeState state = DecodeState::start(config);
  while (!state.done(config)) {
    advance_one_step(params, prompt, config, state, stream.derive(static_cast<std::uint64_t>(state.step)),
                     report);
    trace.steps.push_back(state.grid);
  }
  trace.step_logprobs = state.step_logprobs;
  return trace;
}

// Completes the remaining steps from a partial grid whose unmasked-cell count
// matches the first `step_index` schedule tranches. The prefix snapshots are
// reconstructed by revealing the partial's cells in row-major order, tranche
// by tranche, with zero logprob (those cells were not sampled here).
inline GenerationTrace continue_from(const ModelParams& params, const PromptSpec& prompt,
                                     const TokenGrid& partial, int step_index,
                                     const GenConfig& config, RngStream stream) {
  config.check();
  if (partial.height != config.height || partial.width != config.width)
    throw Error(Errc::schedule_mismatch, "partial grid dimensions do not match config");
  auto cum = config.schedule.cumulative();
  if (step_index < 0 || step_index > config.schedule.total_steps)
    throw Error(Errc::schedule_mismatch, "step_index out of range");
  if (partial.unmasked_count() != cum[static_cast<std::size_t>(step_index)])
    throw Error(Errc::schedule_mismatch,
                "unmasked cell count " + std::to_string(partial.unmasked_count()) +
                    " does not match schedule prefix " +
                    std::to_string(cum[static_cast<std::size_t>(step_index)]));

  GenerationTrace trace;
  trace.prompt = prompt;
  trace.schedule = config.schedule;
  trace.temperature = config.temperature;
  trace.seed = stream.key();

  std::vector<int> unmasked;
  for (int idx = 0; idx < partial.size(); ++idx)
    if (!is_mask(partial.cells[static_cast<std::size_t>(idx)])) unmasked.push_back(idx);

  for (int i = 0; i < step_index; ++i) {
    TokenGrid snap(partial.height, partial.width, kMask);
    for (int k = 0; k < cum[static_cast<std::size_t>(i + 1)]; ++k)
      snap.cells[static_cast<std::size_t>(unmasked[static_cast<std::size_t>(k)])] =
          partial.cells[static_cast<std::size_t>(unmasked[static_cast<std::size_t>(k)])];
    trace.steps.push_back(std::move(snap));
    trace.step_logprobs.push_back(0.0);
  }

  DecodeState state;
  state.grid = partial;
  state.step = step_index;
  while (!state.done(config)) {
    advance_one_step(params, prompt, config, state, stream.derive(static_cast<std::uint64_t>(state.step)));
    trace.steps.push_back(state.grid);
  }
  for (double lp : state.step_logprobs) trace.step_logprobs.push_back(lp);
  return trace;
}

// ---------------------------------------------------------------------------
// Likelihood (canonical factorization) and its exact gradient
// ---------------------------------------------------------------------------

// Teacher-forced log-likelihood of a complete grid at temperature 1. When
// grad != nullptr, accumulates d loglik / d weights into it (size vocab_size *
// feature_dim).
inline double loglik(const ModelParams& params, const PromptSpec& prompt, const TokenGrid& grid,
                     const DecodeSchedule& schedule, const ReflectionReport* report = nullptr,
                     std::vector<double>* grad = nullptr) {
  if (!grid.complete()) throw Error(Errc::incomplete_grid, "loglik needs a complete grid");
  if (schedule.total_cells() != grid.size())
    throw Error(Errc::schedule_mismatch, "schedule does not cover the grid");
  if (grad) grad->assign(static_cast<std::size_t>(params.vocab_size) * params.feature_dim, 0.0);

  std::vector<int> tok_to_slot(static_cast<std::size_t>(params.vocab_size), -1);
  for (std::size_t k = 0; k < params.sampleable.size(); ++k)
    tok_to_slot[params.sampleable[k]] = static_cast<int>(k);

  auto cum = schedule.cumulative();
  TokenGrid context(grid.height, grid.width, kMask);
  std::vector<double> probs;
  double total = 0.0;

  for (int t = 0; t < schedule.total_steps; ++t) {
    GridContext ctx = GridContext::of(context);
    for (int idx = cum[static_cast<std::size_t>(t)]; idx < cum[static_cast<std::size_t>(t + 1)]; ++idx) {
      Coord cell{idx / grid.width, idx % grid.width};
      TokenId truth = grid.cells[static_cast<std::size_t>(idx)];
      int slot = tok_to_slot[truth];
      if (slot < 0)
        throw Error(Errc::invalid_argument, "grid holds a token outside the model's sample space");
      FeatureVec f = featurize_ctx(prompt, context, ctx, cell, report);
      detail::token_scores(params, f, probs);
      detail::softmax_inplace(probs, 1.0);
      total += std::log(probs[static_cast<std::size_t>(slot)]);
      if (grad) {
        for (std::size_t k = 0; k < params.sampleable.size(); ++k) {
          double coef = (static_cast<int>(k) == slot ? 1.0 : 0.0) - probs[k];
          if (coef == 0.0) continue;
          double* row = grad->data() + static_cast<std::size_t>(params.sampleable[k]) * params.feature_dim;
          for (auto [i, v] : f.entries) row[i] += coef * v;
        }
      }
    }
    // reveal this tranche before predicting the next
    for (int idx = cum[static_cast<std::size_t>(t)]; idx < cum[static_cast<std::size_t>(t + 1)]; ++idx)
      context.cells[static_cast<std::size_t>(idx)] = grid.cells[static_cast<std::size_t>(idx)];
  }
  return total;
}

// ---------------------------------------------------------------------------
// Pretraining: teacher-forced masked-token cross-entropy on gold grids
// ---------------------------------------------------------------------------

struct PretrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean per-cell CE seen during each epoch
};

namespace detail {

// CE over `targets` cells of `gold`, predicted from `context`; accumulates the
// SGD step directly into params when lr > 0. Returns summed loss and count.
inline std::pair<double, int> ce_update(ModelParams& params, const PromptSpec& prompt,
                                        const TokenGrid& context, const TokenGrid& gold,
                                        const std::vector<int>& targets, double lr,
                                        const ReflectionReport* report = nullptr) {
  if (targets.empty()) return {0.0, 0};
  std::vector<int> tok_to_slot(static_cast<std::size_t>(params.vocab_size), -1);
  for (std::size_t k = 0; k < params.sampleable.size(); ++k)
    tok_to_slot[params.sampleable[k]] = static_cast<int>(k);

  GridContext ctx = GridContext::of(context);
  std::vector<double> probs;
  double loss = 0.0;
  const double scale = lr / static_cast<double>(targets.size());
  // gradient applied cell by cell (equivalent to a mean-gradient step because
  // features are computed before any update... they are, updates touch weights
  // only after all features of this call are used per cell)
  struct Pending {
    FeatureVec f;
    int slot;
    std::vector<double> probs;
  };
  std::vector<Pending> pending;
  pending.reserve(targets.size());

  for (int idx : targets) {
    Coord cell{idx / context.width, idx % context.width};
    TokenId truth = gold.cells[static_cast<std::size_t>(idx)];
    int slot = tok_to_slot[truth];
    if (slot < 0) throw Error(Errc::invalid_argument, "gold token outside sample space");
    FeatureVec f = featurize_ctx(prompt, context, ctx, cell, report);
    detail::token_scores(params, f, probs);
    detail::softmax_inplace(probs, 1.0);
    loss -= std::log(probs[static_cast<std::size_t>(slot)]);
    if (lr > 0.0) pending.push_back({std::move(f), slot, probs});
  }

  for (const auto& p : pending) {
    for (std::size_t k = 0; k < params.sampleable.size(); ++k) {
      double coef = p.probs[k] - (static_cast<int>(k) == p.slot ? 1.0 : 0.0);
      if (coef == 0.0) continue;
      double* row = params.weights.data() + static_cast<std::size_t>(params.sampleable[k]) * params.feature_dim;
      for (auto [i, v] : p.f.entries) row[i] -= scale * coef * v;
    }
  }
  return {loss, static_cast<int>(targets.size())};
}

}  // namespace detail

// Teacher forcing over schedule prefixes of a random reveal order: every
// tranche of the order is predicted from the prefix before it. Most orders
// are uniform (the states noised confidence-ordered decoding visits); a
// minority are empty-first, covering the late-fill-with-missing-content
// states that corrections and unlucky decodes land in.
inline PretrainResult pretrain(const std::vector<std::pair<PromptSpec, TokenGrid>>& pairs,
                               int epochs, double lr, RngStream stream) {
  if (pairs.empty()) throw Error(Errc::empty_dataset, "pretrain needs a non-empty dataset");
  for (const auto& [prompt, grid] : pairs)
    if (!evaluate(prompt, grid).verdict)
      throw Error(Errc::invalid_argument, "pretrain gold grid fails evaluation: " + prompt.text());

  PretrainResult out;
  out.params = ModelParams::zeros();

  for (int e = 0; e < epochs; ++e) {
    RngStream es = stream.derive(static_cast<std::uint64_t>(e));
    std::vector<int> order(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) order[i] = static_cast<int>(i);
    RngStream shuffle_stream = es.derive(0);
    shuffle_stream.shuffle(order);

    double loss_sum = 0.0;
    long cell_count = 0;
    for (std::size_t n = 0; n < order.size(); ++n) {
      const auto& [prompt, gold] = pairs[static_cast<std::size_t>(order[n])];
      RngStream r = es.derive(1).derive(n);
      std::vector<int> cells(static_cast<std::size_t>(gold.size()));
      for (int i = 0; i < gold.size(); ++i) cells[static_cast<std::size_t>(i)] = i;
      r.shuffle(cells);
      if (r.uniform() < 0.3)
        std::stable_sort(cells.begin(), cells.end(), [&](int a, int b) {
          return !is_object(gold.cells[static_cast<std::size_t>(a)]) &&
                 is_object(gold.cells[static_cast<std::size_t>(b)]);
        });

      DecodeSchedule sched = DecodeSchedule::cosine(gold.size(), 18);
      auto cum = sched.cumulative();

      TokenGrid context(gold.height, gold.width, kMask);
      for (int t = 0; t < sched.total_steps; ++t) {
        std::vector<int> targets(cells.begin() + cum[static_cast<std::size_t>(t)],
                                 cells.begin() + cum[static_cast<std::size_t>(t + 1)]);
        std::sort(targets.begin(), targets.end());
        auto [loss, n_cells] = detail::ce_update(out.params, prompt, context, gold, targets, lr);
        loss_sum += loss;
        cell_count += n_cells;
        for (int idx : targets)
          context.cells[static_cast<std::size_t>(idx)] = gold.cells[static_cast<std::size_t>(idx)];
      }
    }
    out.epoch_loss.push_back(cell_count > 0 ? loss_sum / static_cast<double>(cell_count) : 0.0);
  }
  out.params.version = "pretrained";
  return out;
}

// ---------------------------------------------------------------------------
// Report-conditioned correction
// ---------------------------------------------------------------------------

namespace detail {

// Cells to re-decode for a report: violation cells plus a 1-cell margin;
// missing objects (and under-counts, which are missing instances) get a
// freshly sampled empty rectangle per missing instance. Falls back to
// re-masking all empty cells if no clear rectangle can be found.
inline std::vector<char> correction_mask(const TokenGrid& bad, const ReflectionReport& report,
                                         RngStream rng) {
  std::vector<char> mask(static_cast<std::size_t>(bad.size()), 0);
  auto mask_with_margin = [&](const std::vector<Coord>& cells) {
    for (const Coord& p : cells)
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          if (bad.in_bounds(p.row + dr, p.col + dc))
            mask[static_cast<std::size_t>(p.row + dr) * bad.width + (p.col + dc)] = 1;
  };

  int rects_needed = 0;
  for (const auto& v : report.violations) {
    if (v.code == ViolationCode::missing_object) {
      rects_needed += 1;
    } else if (v.code == ViolationCode::wrong_count && v.cells.empty()) {
      int expected = 1, observed = 0;
      try {
        expected = std::stoi(v.expected);
        observed = std::stoi(v.observed);
      } catch (...) {
      }
      rects_needed += std::max(1, std::min(4, expected - observed));
    } else {
      mask_with_margin(v.cells);
    }
  }

  for (int n = 0; n < rects_needed; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      int h = rng.uniform_range(2, 3), w = rng.uniform_range(2, 3);
      if (bad.height < h || bad.width < w) break;
      int top = rng.uniform_range(0, bad.height - h);
      int left = rng.uniform_range(0, bad.width - w);
      bool clear = true;
      for (int r = top - 1; r <= top + h && clear; ++r)
        for (int c = left - 1; c <= left + w && clear; ++c) {
          if (!bad.in_bounds(r, c)) continue;
          if (is_object(bad.at(r, c)) &&
              !mask[static_cast<std::size_t>(r) * bad.width + c])
            clear = false;
        }
      if (!clear) continue;
      for (int r = top; r < top + h; ++r)
        for (int c = left; c < left + w; ++c)
          mask[static_cast<std::size_t>(r) * bad.width + c] = 1;
      placed = true;
    }
    if (!placed) {
      for (int idx = 0; idx < bad.size(); ++idx)
        if (is_empty(bad.cells[static_cast<std::size_t>(idx)])) mask[static_cast<std::size_t>(idx)] = 1;
      break;
    }
  }
  return mask;
}

}  // namespace detail

// Re-masks the offending regions and re-decodes them with the report's
// violation codes active in the feature map.
inline GenerationTrace correct(const ModelParams& params, const PromptSpec& prompt,
                               const TokenGrid& bad, const ReflectionReport& report,
                               const GenConfig& config, RngStream stream) {
  if (!bad.complete()) throw Error(Errc::incomplete_grid, "correct needs a complete grid");
  if (report.verdict || report.violations.empty())
    throw Error(Errc::empty_violations, "correct needs a failing report with violations");

  std::vector<char> mask = detail::correction_mask(bad, report, stream.derive(0));
  TokenGrid masked_bad = bad;
  int n_masked = 0;
  for (int idx = 0; idx < bad.size(); ++idx)
    if (mask[static_cast<std::size_t>(idx)]) {
      masked_bad.cells[static_cast<std::size_t>(idx)] = kMask;
      ++n_masked;
    }

  GenerationTrace trace;
  trace.prompt = prompt;
  trace.temperature = config.temperature;
  trace.seed = stream.key();

  if (n_masked == 0) {
    trace.schedule = DecodeSchedule{1, {0}};
    trace.steps.push_back(bad);
    trace.step_logprobs.push_back(0.0);
    return trace;
  }

  GenConfig corr = config;
  corr.schedule = DecodeSchedule::cosine(n_masked, std::min(config.schedule.total_steps, n_masked));
  trace.schedule = corr.schedule;

  DecodeState state;
  state.grid = masked_bad;
  while (state.step < corr.schedule.total_steps) {
    advance_one_step(params, prompt, corr, state, stream.derive(1 + static_cast<std::uint64_t>(state.step)),
                     &report);
    trace.steps.push_back(state.grid);
  }
  trace.step_logprobs = state.step_logprobs;
  return trace;
}

// ---------------------------------------------------------------------------
// Self-correction fine-tuning
// ---------------------------------------------------------------------------

struct FinetuneResult {
  ModelParams params;
  std::vector<double> epoch_loss;
};

// Report-conditioned CE on the good grid's tokens inside the re-mask region
// of the bad grid, with random prefixes of the region teacher-forced from the
// good grid so training contexts match what correct() sees mid-decode.
inline FinetuneResult finetune_self_correction(const ModelParams& base,
                                               const std::vector<CorrectionTriple>& triples,
                                               int epochs, double lr, RngStream stream) {
  if (triples.empty()) throw Error(Errc::empty_dataset, "finetune needs a non-empty dataset");

  FinetuneResult out;
  out.params = base;
  out.params.parent = base.version;
  out.params.version = base.version + "+selfcorrect";

  for (int e = 0; e < epochs; ++e) {
    RngStream es = stream.derive(static_cast<std::uint64_t>(e));
    std::vector<int> order(triples.size());
    for (std::size_t i = 0; i < triples.size(); ++i) order[i] = static_cast<int>(i);
    RngStream shuffle_stream = es.derive(0);
    shuffle_stream.shuffle(order);

    double loss_sum = 0.0;
    long cell_count = 0;
    for (std::size_t n = 0; n < order.size(); ++n) {
      const CorrectionTriple& tr = triples[static_cast<std::size_t>(order[n])];
      RngStream r = es.derive(1).derive(n);
      std::vector<char> mask = detail::correction_mask(tr.bad, tr.report, r.derive(0));

      std::vector<int> region;
      for (int idx = 0; idx < tr.bad.size(); ++idx)
        if (mask[static_cast<std::size_t>(idx)]) region.push_back(idx);
      if (region.empty()) continue;

      RngStream rr = r.derive(1);
      rr.shuffle(region);
      DecodeSchedule sched =
          DecodeSchedule::cosine(static_cast<int>(region.size()),
                                 std::min<int>(18, static_cast<int>(region.size())));
      auto cum = sched.cumulative();
      int t = static_cast<int>(rr.uniform_int(static_cast<std::uint64_t>(sched.total_steps)));

      TokenGrid context = tr.bad;
      for (int idx : region) context.cells[static_cast<std::size_t>(idx)] = kMask;
      for (int k = 0; k < cum[static_cast<std::size_t>(t)]; ++k)
        context.cells[static_cast<std::size_t>(region[static_cast<std::size_t>(k)])] =
            tr.good.cells[static_cast<std::size_t>(region[static_cast<std::size_t>(k)])];
      std::vector<int> targets(region.begin() + cum[static_cast<std::size_t>(t)],
                               region.begin() + cum[static_cast<std::size_t>(t + 1)]);
      std::sort(targets.begin(), targets.end());

      auto [loss, n_cells] =
          detail::ce_update(out.params, tr.prompt, context, tr.good, targets, lr, &tr.report);
      loss_sum += loss;
      cell_count += n_cells;
    }
    out.epoch_loss.push_back(cell_count > 0 ? loss_sum / static_cast<double>(cell_count) : 0.0);
  }
  return out;
}

}  // namespace cotgen
