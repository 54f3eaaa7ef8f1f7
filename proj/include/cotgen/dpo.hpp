#pragma once

// Direct preference optimization over the generator's canonical likelihood:
//   loss = -log sigmoid( beta * [ (L_theta(y+) - L_theta(y-))
//                               - (L_ref(y+)   - L_ref(y-)) ] )
// with the reference policy a frozen copy of the starting policy. Iterative
// training refreshes pairs from the current policy (same-label prompts are
// excluded) and re-freezes the reference each round. Reward guidance mixes in
// on-policy best-of-2 pairs scored online by a reward model, weighted lambda.

#include <cstdio>
#include <vector>

#include "cotgen/curate.hpp"
#include "cotgen/model.hpp"
#include "cotgen/scorer.hpp"

namespace cotgen {

struct DpoConfig {
  double beta = 0.1;
  double lr = 0.05;   // desk-scale default; the paper's 1e-5 suits 7B models
  int batch = 10;     // paper setting
  int epochs = 1;     // paper setting
  double guidance_weight = 0.0;        // lambda; 0 disables reward guidance
  int guidance_samples_per_prompt = 2;
  int iter_samples_per_prompt = 12;   // fresh decodes per prompt per extra round
  double iter_temperature = 1.0;
  GenConfig gen;  // decoding settings for refreshed / on-policy samples
};

struct PolicyPair {
  ModelParams policy;
  ModelParams reference;  // frozen for the duration of a round

  static PolicyPair from(const ModelParams& base) {
    PolicyPair pp{base, base};
    pp.policy.parent = base.version;
    return pp;
  }
};

// Loss and (optionally) its exact gradient w.r.t. policy weights.
inline double dpo_loss(const PolicyPair& pp, const DpoPair& pair, double beta,
                       std::vector<double>* grad = nullptr) {
  DecodeSchedule sched = DecodeSchedule::cosine(pair.y_yes.size());
  std::vector<double> gy, gn;
  double ly = loglik(pp.policy, pair.prompt, pair.y_yes, sched, nullptr, grad ? &gy : nullptr);
  double ln = loglik(pp.policy, pair.prompt, pair.y_no, sched, nullptr, grad ? &gn : nullptr);
  double ry = loglik(pp.reference, pair.prompt, pair.y_yes, sched);
  double rn = loglik(pp.reference, pair.prompt, pair.y_no, sched);
  double margin = beta * ((ly - ln) - (ry - rn));
  // -log sigmoid(m) = softplus(-m), computed stably
  double loss = margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
  if (grad) {
    double coef = -beta / (1.0 + std::exp(margin));  // d loss / d margin * beta
    grad->assign(gy.size(), 0.0);
    for (std::size_t i = 0; i < gy.size(); ++i) (*grad)[i] = coef * (gy[i] - gn[i]);
  }
  return loss;
}

struct DpoTrainResult {
  ModelParams policy;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double initial_margin = 0.0;  // mean loglik(y+) - loglik(y-) under the policy
  double final_margin = 0.0;
  int rounds_completed = 0;
  bool no_valid_pairs_warning = false;
};

namespace detail {

struct RefCache {
  std::vector<double> ref_delta;  // loglik_ref(y+) - loglik_ref(y-) per pair
};

inline double policy_margin(const ModelParams& policy, const std::vector<DpoPair>& pairs) {
  double m = 0.0;
  for (const auto& p : pairs) {
    DecodeSchedule sched = DecodeSchedule::cosine(p.y_yes.size());
    m += loglik(policy, p.prompt, p.y_yes, sched) - loglik(policy, p.prompt, p.y_no, sched);
  }
  return m / static_cast<double>(pairs.size());
}

// Shared training core. Guidance draws come from a dedicated substream so a
// lambda=0 run consumes exactly the same shuffle stream as plain training.
inline DpoTrainResult train_dpo_core(const PolicyPair& pp, const std::vector<DpoPair>& pairs,
                                     const std::vector<PromptSpec>& prompt_only,
                                     const ScorerParams* reward, const DpoConfig& cfg,
                                     RngStream stream) {
  if (pairs.empty()) throw Error(Errc::empty_pairs, "train_dpo needs preference pairs");
  bool guided = cfg.guidance_weight > 0.0;
  if (guided && prompt_only.empty())
    throw Error(Errc::empty_prompt_set, "reward guidance needs a prompt-only dataset");
  if (guided && (!reward || !reward->supports(Task::orm)))
    throw Error(Errc::unsupported_task, "reward guidance needs an orm-capable scorer");

  RngStream shuffle_stream = stream.derive(0);
  RngStream guidance_stream = stream.derive(1);

  DpoTrainResult out;
  out.policy = pp.policy;
  out.initial_margin = policy_margin(out.policy, pairs);

  RefCache cache;
  cache.ref_delta.reserve(pairs.size());
  for (const auto& p : pairs) {
    DecodeSchedule sched = DecodeSchedule::cosine(p.y_yes.size());
    cache.ref_delta.push_back(loglik(pp.reference, p.prompt, p.y_yes, sched) -
                              loglik(pp.reference, p.prompt, p.y_no, sched));
  }

  const std::size_t wsize = out.policy.weights.size();
  std::vector<double> grad(wsize), gy, gn;
  std::vector<int> order(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) order[i] = static_cast<int>(i);

  std::uint64_t guidance_draw = 0;
  bool first_batch = true;
  double last_loss = 0.0;

  for (int e = 0; e < cfg.epochs; ++e) {
    RngStream es = shuffle_stream.derive(static_cast<std::uint64_t>(e));
    es.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;

      for (std::size_t n = start; n < end; ++n) {
        const DpoPair& pair = pairs[static_cast<std::size_t>(order[n])];
        DecodeSchedule sched = DecodeSchedule::cosine(pair.y_yes.size());
        double ly = loglik(out.policy, pair.prompt, pair.y_yes, sched, nullptr, &gy);
        double ln = loglik(out.policy, pair.prompt, pair.y_no, sched, nullptr, &gn);
        double margin =
            cfg.beta * ((ly - ln) - cache.ref_delta[static_cast<std::size_t>(order[n])]);
        double loss = margin > 0 ? std::log1p(std::exp(-margin))
                                 : -margin + std::log1p(std::exp(margin));
        batch_loss += loss;
        double coef = -cfg.beta / (1.0 + std::exp(margin)) / static_cast<double>(end - start);
        for (std::size_t i = 0; i < wsize; ++i) grad[i] += coef * (gy[i] - gn[i]);
      }
      batch_loss /= static_cast<double>(end - start);

      if (guided) {
        RngStream gs = guidance_stream.derive(guidance_draw++);
        const PromptSpec& prompt = prompt_only[gs.uniform_int(prompt_only.size())];
        std::vector<TokenGrid> samples;
        std::vector<double> p_yes;
        for (int s = 0; s < cfg.guidance_samples_per_prompt; ++s) {
          GenerationTrace t = decode(out.policy, prompt, cfg.gen, gs.derive(static_cast<std::uint64_t>(s)));
          samples.push_back(t.final_grid());
          p_yes.push_back(score(*reward, {prompt, samples.back(), Stage::final, Task::orm}).p_yes);
        }
        std::size_t best = 0, worst = 0;
        for (std::size_t s = 1; s < samples.size(); ++s) {
          if (p_yes[s] > p_yes[best]) best = s;
          if (p_yes[s] < p_yes[worst]) worst = s;
        }
        if (p_yes[best] - p_yes[worst] > 1e-6) {  // ties carry no preference signal
          DpoPair online{prompt, samples[best], samples[worst]};
          PolicyPair cur{out.policy, pp.reference};
          std::vector<double> ggrad;
          double gloss = dpo_loss(cur, online, cfg.beta, &ggrad);
          batch_loss += cfg.guidance_weight * gloss;
          for (std::size_t i = 0; i < wsize; ++i) grad[i] += cfg.guidance_weight * ggrad[i];
        }
      }

      if (first_batch) {
        out.initial_loss = batch_loss;
        first_batch = false;
      }
      last_loss = batch_loss;
      for (std::size_t i = 0; i < wsize; ++i) out.policy.weights[i] -= cfg.lr * grad[i];
    }
  }

  out.final_loss = last_loss;
  out.final_margin = policy_margin(out.policy, pairs);
  out.rounds_completed = 1;
  out.policy.parent = pp.policy.version;
  out.policy.version = pp.policy.version + "+dpo";
  return out;
}

}  // namespace detail

inline DpoTrainResult train_dpo(const PolicyPair& pp, const std::vector<DpoPair>& pairs,
                                const DpoConfig& cfg, RngStream stream) {
  DpoConfig plain = cfg;
  plain.guidance_weight = 0.0;
  return detail::train_dpo_core(pp, pairs, {}, nullptr, plain, stream);
}

inline DpoTrainResult train_dpo_guided(const PolicyPair& pp, const std::vector<DpoPair>& pairs,
                                       const std::vector<PromptSpec>& prompt_only,
                                       const ScorerParams& reward, const DpoConfig& cfg,
                                       RngStream stream) {
  return detail::train_dpo_core(pp, pairs, prompt_only, &reward, cfg, stream);
}

// Extra alignment rounds: regenerate samples with the current policy, re-pair
// (the exclusion rule drops same-label prompts), retrain against a freshly
// frozen reference. Stops early with a warning when no valid pairs remain.
inline DpoTrainResult iterate_dpo(const PolicyPair& pp, const std::vector<PromptSpec>& prompts,
                                  const ScorerParams& labeler, int extra_rounds,
                                  const DpoConfig& cfg, RngStream stream,
                                  const ScorerParams* guidance_reward = nullptr) {
  if (extra_rounds < 1) throw Error(Errc::invalid_argument, "iterate_dpo needs rounds >= 1");

  DpoTrainResult out;
  out.policy = pp.policy;
  out.rounds_completed = 0;

  GenConfig sample_cfg = cfg.gen;
  sample_cfg.temperature = cfg.iter_temperature;

  for (int round = 0; round < extra_rounds; ++round) {
    RngStream rs = stream.derive(static_cast<std::uint64_t>(round));
    std::vector<RankingExample> fresh =
        curate_orm(out.policy, prompts, cfg.iter_samples_per_prompt, sample_cfg, labeler, rs.derive(0));
    std::vector<DpoPair> pairs = curate_dpo(fresh, rs.derive(1));
    if (pairs.empty()) {
      out.no_valid_pairs_warning = true;
      std::fprintf(stderr, "[iterate_dpo] NO_VALID_PAIRS at round %d; returning current policy\n",
                   round + 1);
      return out;
    }
    PolicyPair fresh_pp{out.policy, out.policy};  // fresh frozen reference
    DpoTrainResult r =
        guidance_reward
            ? detail::train_dpo_core(fresh_pp, pairs, prompts, guidance_reward, cfg, rs.derive(2))
            : train_dpo(fresh_pp, pairs, cfg, rs.derive(2));
    out.policy = r.policy;
    out.initial_loss = round == 0 ? r.initial_loss : out.initial_loss;
    out.final_loss = r.final_loss;
    out.initial_margin = round == 0 ? r.initial_margin : out.initial_margin;
    out.final_margin = r.final_margin;
    out.rounds_completed++;
  }
  return out;
}

}  // namespace cotgen
