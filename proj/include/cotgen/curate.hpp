#pragma once

// Dataset curation: outcome ranking data from high-temperature sampling,
// step-wise data via rollout annotation (a step is good iff any of k sampled
// completions from it ends well), the three potential-assessment subsets,
// reflection data at an 80:20 negative:positive ratio, self-correction
// triples, and preference pairs with the same-label exclusion rule.

#include <map>
#include <vector>

#include "cotgen/data.hpp"
#include "cotgen/model.hpp"
#include "cotgen/scorer.hpp"

namespace cotgen {

struct RolloutConfig {
  int k = 4;               // rollouts per annotated step
  bool exhaustive = false;  // enumerate every completion (tiny universes only)
};

namespace detail {

inline Label label_of(const ScorerParams& labeler, const PromptSpec& prompt, const TokenGrid& grid) {
  RewardScore s = score(labeler, ScoreQuery{prompt, grid, Stage::final, Task::orm});
  return s.label ? Label::yes : Label::no;
}

}  // namespace detail

// Final-stage outcome examples: per prompt, `per_prompt` complete decodes
// labeled by the labeler on the final grid.
inline std::vector<RankingExample> curate_orm(const ModelParams& params,
                                              const std::vector<PromptSpec>& prompts,
                                              int per_prompt, const GenConfig& config,
                                              const ScorerParams& labeler, RngStream stream) {
  std::vector<RankingExample> out;
  out.reserve(prompts.size() * static_cast<std::size_t>(per_prompt));
  for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
    for (int s = 0; s < per_prompt; ++s) {
      RngStream r = stream.derive(pi, static_cast<std::uint64_t>(s));
      GenerationTrace trace = decode(params, prompts[pi], config, r);
      RankingExample e;
      e.prompt = prompts[pi];
      e.grid = trace.final_grid();
      e.stage = Stage::final;
      e.task = Task::orm;
      e.label = detail::label_of(labeler, prompts[pi], e.grid);
      e.seed = r.key();
      out.push_back(std::move(e));
    }
  }
  return out;
}

// Math-Shepherd-style step annotation: yes iff any of k completions from the
// step grid passes the labeler. Exhaustive mode enumerates every completion
// of the masked cells instead (reachability), for tiny universes.
inline Label annotate_step(const ModelParams& params, const PromptSpec& prompt,
                           const GenerationTrace& trace, int step_index,
                           const RolloutConfig& rollout, const ScorerParams& labeler,
                           RngStream stream) {
  if (step_index < 0 || step_index >= static_cast<int>(trace.steps.size()))
    throw Error(Errc::invalid_argument, "annotate_step: step_index out of range");
  const TokenGrid& step_grid = trace.steps[static_cast<std::size_t>(step_index)];

  GenConfig config;
  config.height = step_grid.height;
  config.width = step_grid.width;
  config.temperature = trace.temperature;
  config.schedule = trace.schedule;

  if (rollout.exhaustive) {
    std::vector<int> masked;
    for (int idx = 0; idx < step_grid.size(); ++idx)
      if (is_mask(step_grid.cells[static_cast<std::size_t>(idx)])) masked.push_back(idx);
    double combos = std::pow(static_cast<double>(params.sampleable.size()),
                             static_cast<double>(masked.size()));
    if (combos > 2e6)
      throw Error(Errc::invalid_argument, "exhaustive annotation is only for tiny universes");
    TokenGrid work = step_grid;
    std::vector<std::size_t> slot(masked.size(), 0);
    for (int idx : masked) work.cells[static_cast<std::size_t>(idx)] = params.sampleable[0];
    while (true) {
      bool pass = detail::label_of(labeler, prompt, work) == Label::yes;
      if (pass) return Label::yes;
      std::size_t d = 0;
      while (d < masked.size()) {
        if (++slot[d] < params.sampleable.size()) break;
        slot[d] = 0;
        ++d;
      }
      if (d == masked.size()) break;
      for (std::size_t i = 0; i <= d; ++i)
        work.cells[static_cast<std::size_t>(masked[i])] = params.sampleable[slot[i]];
    }
    return Label::no;
  }

  for (int k = 0; k < rollout.k; ++k) {
    GenerationTrace completion = continue_from(params, prompt, step_grid, step_index + 1, config,
                                               stream.derive(static_cast<std::uint64_t>(k)));
    if (detail::label_of(labeler, prompt, completion.final_grid()) == Label::yes) return Label::yes;
  }
  return Label::no;
}

// One trace per prompt; every step grid becomes a step-wise example labeled
// by rollout annotation.
inline std::vector<RankingExample> curate_prm(const ModelParams& params,
                                              const std::vector<PromptSpec>& prompts,
                                              const RolloutConfig& rollout, const GenConfig& config,
                                              const ScorerParams& labeler, RngStream stream) {
  std::vector<RankingExample> out;
  for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
    RngStream r = stream.derive(pi);
    GenerationTrace trace = decode(params, prompts[pi], config, r.derive(0));
    for (int t = 0; t < static_cast<int>(trace.steps.size()); ++t) {
      RankingExample e;
      e.prompt = prompts[pi];
      e.grid = trace.steps[static_cast<std::size_t>(t)];
      e.stage = Stage::intermediate;
      e.step_index = t;
      e.task = Task::prm;
      e.label = annotate_step(params, prompts[pi], trace, t, rollout, labeler,
                              r.derive(1).derive(static_cast<std::uint64_t>(t)));
      e.seed = r.key();
      out.push_back(std::move(e));
    }
  }
  return out;
}

// Static clarity labeling rule, in 1-indexed steps: yes from `yes_from` on,
// no before `no_until`; the gap in between is skipped.
struct ClarityBounds {
  int yes_from = 12;
  int no_until = 10;
};

struct ParmDatasets {
  std::vector<RankingExample> clarity;
  std::vector<RankingExample> potential;
  std::vector<RankingExample> select;
};

// Clarity from the static step rule; potential for steps >= yes_from labeled
// by the trace's own final outcome; selection re-tags the outcome ranking
// dataset.
inline ParmDatasets curate_parm(const ModelParams& params, const std::vector<PromptSpec>& prompts,
                                const std::vector<RankingExample>& orm_examples,
                                const ClarityBounds& bounds, const GenConfig& config,
                                const ScorerParams& labeler, RngStream stream) {
  if (bounds.yes_from < 1 || bounds.yes_from > config.schedule.total_steps ||
      bounds.no_until < 1 || bounds.no_until > config.schedule.total_steps)
    throw Error(Errc::invalid_argument, "clarity bounds out of range");

  ParmDatasets out;
  for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
    RngStream r = stream.derive(pi);
    GenerationTrace trace = decode(params, prompts[pi], config, r);
    Label outcome = detail::label_of(labeler, prompts[pi], trace.final_grid());
    for (int t = 0; t < static_cast<int>(trace.steps.size()); ++t) {
      int step_1idx = t + 1;
      RankingExample e;
      e.prompt = prompts[pi];
      e.grid = trace.steps[static_cast<std::size_t>(t)];
      e.stage = Stage::intermediate;
      e.step_index = t;
      e.seed = r.key();
      if (step_1idx >= bounds.yes_from) {
        RankingExample c = e;
        c.task = Task::parm_clarity;
        c.label = Label::yes;
        out.clarity.push_back(std::move(c));
        e.task = Task::parm_potential;
        e.label = outcome;
        out.potential.push_back(std::move(e));
      } else if (step_1idx < bounds.no_until) {
        e.task = Task::parm_clarity;
        e.label = Label::no;
        out.clarity.push_back(std::move(e));
      }
    }
  }
  for (const auto& orm : orm_examples) {
    RankingExample e = orm;
    e.task = Task::parm_select;
    out.select.push_back(std::move(e));
  }
  return out;
}

// One preference pair per prompt that has both labels; prompts where all
// samples got the same label are excluded.
inline std::vector<DpoPair> curate_dpo(const std::vector<RankingExample>& orm_examples,
                                       RngStream stream) {
  std::map<std::string, std::pair<std::vector<const RankingExample*>, std::vector<const RankingExample*>>>
      by_prompt;
  std::vector<std::string> order;
  for (const auto& e : orm_examples) {
    std::string key = e.prompt.key();
    if (!by_prompt.count(key)) order.push_back(key);
    auto& bucket = by_prompt[key];
    (e.label == Label::yes ? bucket.first : bucket.second).push_back(&e);
  }

  std::vector<DpoPair> pairs;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& [yes, no] = by_prompt[order[i]];
    if (yes.empty() || no.empty()) continue;
    RngStream r = stream.derive(i);
    const RankingExample* y = yes[r.uniform_int(yes.size())];
    const RankingExample* n = no[r.uniform_int(no.size())];
    pairs.push_back(DpoPair{y->prompt, y->grid, n->grid});
  }
  return pairs;
}

// Negatives get oracle reports, positives empty-violation reports; the set is
// subsampled toward the target negative fraction (default 80:20).
inline std::vector<ReflectionExample> curate_reflection(const std::vector<RankingExample>& orm_examples,
                                                        double negative_ratio, RngStream stream,
                                                        bool* insufficient_negatives = nullptr) {
  std::vector<const RankingExample*> neg, pos;
  for (const auto& e : orm_examples)
    (e.label == Label::no ? neg : pos).push_back(&e);

  if (insufficient_negatives) *insufficient_negatives = false;
  std::size_t want_neg = pos.empty()
                             ? neg.size()
                             : static_cast<std::size_t>(
                                   std::lround(negative_ratio / (1.0 - negative_ratio) *
                                               static_cast<double>(pos.size())));
  if (neg.size() < want_neg) {
    if (insufficient_negatives) *insufficient_negatives = true;
    std::fprintf(stderr, "[curate_reflection] INSUFFICIENT_NEGATIVES: have %zu, wanted %zu; keeping all\n",
                 neg.size(), want_neg);
  } else if (want_neg < neg.size()) {
    RngStream r = stream.derive(0);
    r.shuffle(neg);
    neg.resize(want_neg);
  }

  std::vector<ReflectionExample> out;
  out.reserve(neg.size() + pos.size());
  for (const auto* e : neg)
    out.push_back(ReflectionExample{e->prompt, e->grid, oracle_report(e->prompt, e->grid)});
  for (const auto* e : pos)
    out.push_back(ReflectionExample{e->prompt, e->grid,
                                    ReflectionReport{true, {}, ReportSource::oracle}});
  return out;
}

// Joins each negative reflection example with a same-prompt positive grid,
// falling back to a freshly rendered gold grid when none exists.
inline std::vector<CorrectionTriple> curate_correction_triples(
    const std::vector<ReflectionExample>& reflections, RngStream stream) {
  std::map<std::string, std::vector<const TokenGrid*>> positives;
  for (const auto& e : reflections)
    if (e.report.verdict) positives[e.prompt.key()].push_back(&e.grid);

  std::vector<CorrectionTriple> out;
  std::size_t i = 0;
  for (const auto& e : reflections) {
    if (e.report.verdict) continue;
    RngStream r = stream.derive(i++);
    auto it = positives.find(e.prompt.key());
    TokenGrid good;
    if (it != positives.end() && !it->second.empty())
      good = *it->second[r.uniform_int(it->second.size())];
    else
      good = render_gold(e.prompt, r.derive(1), e.grid.height, e.grid.width);
    out.push_back(CorrectionTriple{e.prompt, e.grid, e.report, std::move(good)});
  }
  return out;
}

}  // namespace cotgen
