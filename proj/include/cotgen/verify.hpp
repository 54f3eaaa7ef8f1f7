#pragma once

// Test-time verification strategies:
//   - outcome best-of-N over complete decodes,
//   - step-level best-of-N (expand N one-step continuations, keep the
//     scorer's argmax, repeat),
//   - the potential-assessment pipeline: per path, skip steps until the
//     clarity head says the grid is assessable, then truncate the path the
//     moment the potential head says it cannot end well; survivors run to
//     completion and the selection head picks among their finals, with a
//     lowest-no-probability fallback when nothing survives,
//   - a reflection loop that re-masks and re-decodes reported misalignments,
//     capped at a fixed number of iterations.
//
// Candidate/path i consumes stream.derive(i), and its step t consumes
// stream.derive(i).derive(t) -- exactly what decode() does internally -- so
// strategies that degenerate into one another produce bit-identical grids.
// Ties always break toward the lowest candidate index.

#include <functional>
#include <vector>

#include "cotgen/model.hpp"
#include "cotgen/scorer.hpp"

namespace cotgen {

enum class Strategy : std::uint8_t { orm_bon = 0, prm_step_bon, parm, parm_pp };

inline const char* strategy_name(Strategy s) {
  static const char* names[] = {"orm_bon", "prm_step_bon", "parm", "parm_pp"};
  return names[static_cast<int>(s)];
}

struct VerifyConfig {
  int n = 20;
  Strategy strategy = Strategy::orm_bon;
  GenConfig gen;
  double clarity_threshold = 0.6;  // rho used when constructing oracle scorers
  int max_reflection_iters = 3;

  void check() const {
    if (n < 1) throw Error(Errc::invalid_argument, "verification needs N >= 1");
    if (max_reflection_iters < 0)
      throw Error(Errc::invalid_argument, "max_reflection_iters must be >= 0");
    gen.check();
  }
};

struct PathLog {
  int first_clear_step = -1;                       // 0-based step of first clarity yes
  std::vector<std::pair<int, double>> potential;   // (step, p_yes) per assessment
  bool truncated = false;
  int truncation_step = -1;
  int steps_run = 0;
};

struct ReflectionEvent {
  int iteration = 0;
  ReflectionReport report;
  TokenGrid corrected;
};

struct VerifyResult {
  TokenGrid chosen;
  int chosen_index = -1;
  std::vector<std::pair<TokenGrid, double>> candidates;  // (final grid, final score)
  int n_prime = 0;                                       // PARM only
  std::vector<PathLog> truncation_log;
  std::vector<ReflectionEvent> reflection_log;  // reflection loop only
  long decode_steps = 0;                        // schedule steps actually executed
};

// Optional audit sink; one JSON object per decision event.
using TranscriptSink = std::function<void(const nlohmann::json&)>;

namespace detail {

inline void emit(TranscriptSink* sink, nlohmann::json j) {
  if (sink && *sink) (*sink)(std::move(j));
}

}  // namespace detail

inline VerifyResult best_of_n_orm(const ModelParams& params, const PromptSpec& prompt,
                                  const ScorerParams& scorer, const VerifyConfig& config,
                                  RngStream stream, TranscriptSink* transcript = nullptr) {
  config.check();
  VerifyResult out;
  for (int i = 0; i < config.n; ++i) {
    GenerationTrace trace = decode(params, prompt, config.gen, stream.derive(static_cast<std::uint64_t>(i)));
    out.decode_steps += config.gen.schedule.total_steps;
    double p = score(scorer, {prompt, trace.final_grid(), Stage::final, Task::orm}).p_yes;
    detail::emit(transcript, {{"event", "orm_score"}, {"candidate", i}, {"p_yes", p}});
    out.candidates.emplace_back(trace.final_grid(), p);
    if (out.chosen_index < 0 || p > out.candidates[static_cast<std::size_t>(out.chosen_index)].second)
      out.chosen_index = i;
  }
  out.chosen = out.candidates[static_cast<std::size_t>(out.chosen_index)].first;
  detail::emit(transcript, {{"event", "select"}, {"candidate", out.chosen_index}});
  return out;
}

// Expands the surviving prefix into N one-step continuations at every step
// and keeps the scorer's argmax. With N=1 this is plain decoding on the same
// per-step streams.
inline VerifyResult step_best_of_n_prm(const ModelParams& params, const PromptSpec& prompt,
                                       const ScorerParams& scorer, const VerifyConfig& config,
                                       RngStream stream, TranscriptSink* transcript = nullptr) {
  config.check();
  VerifyResult out;
  DecodeState state = DecodeState::start(config.gen);
  double last_score = 0.0;

  for (int t = 0; t < config.gen.schedule.total_steps; ++t) {
    int best = -1;
    double best_p = -1.0;
    DecodeState best_state;
    for (int i = 0; i < config.n; ++i) {
      DecodeState candidate = state;
      advance_one_step(params, prompt, config.gen, candidate,
                       stream.derive(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t)));
      out.decode_steps += 1;
      bool final_step = t + 1 == config.gen.schedule.total_steps;
      double p = score(scorer, {prompt, candidate.grid,
                                final_step ? Stage::final : Stage::intermediate, Task::prm})
                     .p_yes;
      detail::emit(transcript, {{"event", "prm_score"}, {"step", t}, {"candidate", i}, {"p_yes", p}});
      if (p > best_p) {
        best_p = p;
        best = i;
        best_state = std::move(candidate);
      }
    }
    state = std::move(best_state);
    last_score = best_p;
    detail::emit(transcript, {{"event", "prm_keep"}, {"step", t}, {"candidate", best}});
  }

  out.chosen = state.grid;
  out.chosen_index = 0;
  out.candidates.emplace_back(state.grid, last_score);
  return out;
}

inline VerifyResult parm_pipeline(const ModelParams& params, const PromptSpec& prompt,
                                  const ScorerParams& scorer, const VerifyConfig& config,
                                  RngStream stream, TranscriptSink* transcript = nullptr) {
  config.check();
  const int T = config.gen.schedule.total_steps;
  VerifyResult out;
  out.truncation_log.resize(static_cast<std::size_t>(config.n));

  struct Path {
    DecodeState state;
    bool alive = true;
    double max_no_prob = 0.0;  // max over assessed steps of 1 - p_yes(potential)
    bool assessed = false;
  };
  std::vector<Path> paths(static_cast<std::size_t>(config.n));
  for (auto& p : paths) p.state = DecodeState::start(config.gen);

  for (int i = 0; i < config.n; ++i) {
    Path& path = paths[static_cast<std::size_t>(i)];
    PathLog& log = out.truncation_log[static_cast<std::size_t>(i)];
    RngStream path_stream = stream.derive(static_cast<std::uint64_t>(i));
    for (int t = 0; t < T && path.alive; ++t) {
      advance_one_step(params, prompt, config.gen, path.state,
                       path_stream.derive(static_cast<std::uint64_t>(t)));
      out.decode_steps += 1;
      log.steps_run += 1;

      bool last = t + 1 == T;
      Stage stage = last ? Stage::final : Stage::intermediate;
      bool clear =
          score(scorer, {prompt, path.state.grid, stage, Task::parm_clarity}).label;
      detail::emit(transcript, {{"event", "clarity"}, {"path", i}, {"step", t}, {"clear", clear}});
      if (!clear) continue;  // not assessable yet; keep decoding
      if (log.first_clear_step < 0) log.first_clear_step = t;

      double p_pot = score(scorer, {prompt, path.state.grid, stage, Task::parm_potential}).p_yes;
      log.potential.emplace_back(t, p_pot);
      path.assessed = true;
      path.max_no_prob = std::max(path.max_no_prob, 1.0 - p_pot);
      detail::emit(transcript, {{"event", "potential"}, {"path", i}, {"step", t}, {"p_yes", p_pot}});
      if (p_pot < 0.5) {
        path.alive = false;
        log.truncated = true;
        log.truncation_step = t;
        detail::emit(transcript, {{"event", "truncate"}, {"path", i}, {"step", t}});
      }
    }
  }

  // survivors: alive paths that completed all T steps
  int best = -1;
  double best_p = -1.0;
  for (int i = 0; i < config.n; ++i) {
    Path& path = paths[static_cast<std::size_t>(i)];
    if (!path.alive || !path.state.done(config.gen)) continue;
    out.n_prime += 1;
    double p = score(scorer, {prompt, path.state.grid, Stage::final, Task::parm_select}).p_yes;
    out.candidates.emplace_back(path.state.grid, p);
    detail::emit(transcript, {{"event", "select_score"}, {"path", i}, {"p_yes", p}});
    if (p > best_p) {
      best_p = p;
      best = i;
      out.chosen_index = static_cast<int>(out.candidates.size()) - 1;
      out.chosen = path.state.grid;
    }
  }

  if (out.n_prime == 0) {
    // fallback: complete the path whose worst assessed no-probability is
    // lowest (paths are all truncated at a clear step here, so all assessed)
    int pick = 0;
    for (int i = 1; i < config.n; ++i)
      if (paths[static_cast<std::size_t>(i)].max_no_prob <
          paths[static_cast<std::size_t>(pick)].max_no_prob)
        pick = i;
    Path& path = paths[static_cast<std::size_t>(pick)];
    RngStream path_stream = stream.derive(static_cast<std::uint64_t>(pick));
    while (!path.state.done(config.gen)) {
      advance_one_step(params, prompt, config.gen, path.state,
                       path_stream.derive(static_cast<std::uint64_t>(path.state.step)));
      out.decode_steps += 1;
      out.truncation_log[static_cast<std::size_t>(pick)].steps_run += 1;
    }
    double p = score(scorer, {prompt, path.state.grid, Stage::final, Task::parm_select}).p_yes;
    out.candidates.emplace_back(path.state.grid, p);
    out.chosen_index = static_cast<int>(out.candidates.size()) - 1;
    out.chosen = path.state.grid;
    detail::emit(transcript, {{"event", "fallback_complete"}, {"path", pick}, {"p_yes", p}});
  }
  detail::emit(transcript, {{"event", "select"}, {"n_prime", out.n_prime}});
  return out;
}

// Reflection loop: evaluate the chosen grid; while the report says no,
// re-mask and re-decode the offending regions (report-conditioned), up to
// max_reflection_iters times. On exhaustion the best-scoring iterate wins;
// the returned grid never scores below the original.
inline VerifyResult reflect_loop(const ModelParams& params, const PromptSpec& prompt,
                                 const ScorerParams& scorer, VerifyResult base,
                                 const VerifyConfig& config, RngStream stream,
                                 TranscriptSink* transcript = nullptr) {
  config.check();
  if (!base.chosen.complete())
    throw Error(Errc::incomplete_grid, "reflect_loop needs a complete chosen grid");

  auto select_score = [&](const TokenGrid& g) {
    return score(scorer, {prompt, g, Stage::final, Task::parm_select}).p_yes;
  };

  TokenGrid current = base.chosen;
  const double original_score = select_score(current);
  double best_score = original_score;
  TokenGrid best_grid = current;

  ReflectionReport report = reflect_eval(scorer, prompt, current);
  detail::emit(transcript, {{"event", "reflection"}, {"iteration", 0}, {"verdict", report.verdict}});
  if (report.verdict) return base;  // already passes; zero corrections

  bool accepted = false;
  for (int iter = 0; iter < config.max_reflection_iters; ++iter) {
    GenerationTrace corr = correct(params, prompt, current, report, config.gen,
                                   stream.derive(static_cast<std::uint64_t>(iter)));
    base.decode_steps += corr.schedule.total_steps;
    current = corr.final_grid();
    base.reflection_log.push_back({iter, report, current});
    double s = select_score(current);
    if (s > best_score) {
      best_score = s;
      best_grid = current;
    }
    report = reflect_eval(scorer, prompt, current);
    detail::emit(transcript,
                 {{"event", "reflection"}, {"iteration", iter + 1}, {"verdict", report.verdict}});
    if (report.verdict) {
      accepted = true;
      break;
    }
  }
  // First-yes iterate wins unless it would score below the original; on
  // exhaustion take the best-scoring iterate seen (the original included).
  if (accepted && select_score(current) >= original_score)
    base.chosen = current;
  else
    base.chosen = best_grid;
  return base;
}

}  // namespace cotgen
