// Acceptance suite: exactness checks, seed-fixed ordering reproductions, and
// the pruning-efficiency criterion, printed one pass/fail line each.
//
// The full pipeline (pretraining, curation, scorer training, alignment,
// self-correction) is rebuilt from fixed streams at artifact seed 0; ordering
// comparisons run on the 600-prompt test suite with best-of-20 verifiers.
// An ordering that fails at suite seed 0 is re-benched at seeds 1-4 and must
// hold in at least 4 of the 5.
//
//   usage: acceptance [--ppc N] [--n N] [--jobs N] [--skip-exactness]

#include <cstdio>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "cotgen/cotgen.hpp"

using namespace cotgen;

namespace {

int g_pass = 0, g_fail = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %-44s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  (ok ? g_pass : g_fail)++;
}

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof(b), "%.3f", x);
  return b;
}

// ---------------------------------------------------------------------------
// Pipeline artifacts
// ---------------------------------------------------------------------------

struct Artifacts {
  ModelParams base;
  ModelParams dpo1, it_dpo, guided, sc;
  ScorerParams zs, ft_orm, ft_prm, ft_parm, parm_reward, parm_pp, oracle;
  std::vector<PromptSpec> train_prompts;
  std::vector<RankingExample> orm_examples;
};

GenConfig curation_gen() {
  GenConfig g;
  g.temperature = 1.6;
  return g;
}

Artifacts build_artifacts(std::uint64_t seed, int jobs) {
  (void)jobs;
  Artifacts a;
  a.oracle = ScorerParams::oracle(0.0);
  a.zs = ScorerParams::zero_shot();
  RngStream root(seed);

  std::fprintf(stderr, "[build] pretraining baseline...\n");
  {
    RngStream rng = root.derive(1);
    std::vector<std::pair<PromptSpec, TokenGrid>> pairs;
    for (int i = 0; i < 1200; ++i) {
      auto cat = static_cast<PromptCategory>(i % kNumCategories);
      auto p = sample_prompts(cat, 1, PromptPool::train, rng.derive(static_cast<std::uint64_t>(i)))[0];
      pairs.emplace_back(p, render_gold(p, rng.derive(100000 + static_cast<std::uint64_t>(i))));
    }
    a.base = pretrain(pairs, 18, 0.22, root.derive(2)).params;
  }

  {
    RngStream rng = root.derive(3);
    for (int i = 0; i < 500; ++i) {
      auto cat = static_cast<PromptCategory>(i % kNumCategories);
      a.train_prompts.push_back(
          sample_prompts(cat, 1, PromptPool::train, rng.derive(static_cast<std::uint64_t>(i)))[0]);
    }
  }

  std::fprintf(stderr, "[build] curating outcome ranking data...\n");
  a.orm_examples = curate_orm(a.base, a.train_prompts, 20, curation_gen(), a.oracle, root.derive(4));

  std::fprintf(stderr, "[build] training scorers...\n");
  {
    ScorerTrainConfig cfg{1, 8, 0.008};
    a.ft_orm = train_scorer(ScorerParams{}, a.orm_examples, Task::orm, cfg, root.derive(5)).params;
  }
  {
    std::vector<PromptSpec> prm_prompts(a.train_prompts.begin(), a.train_prompts.begin() + 300);
    auto prm_examples =
        curate_prm(a.base, prm_prompts, RolloutConfig{4, false}, curation_gen(), a.oracle, root.derive(6));
    ScorerTrainConfig cfg{1, 8, 0.001};
    a.ft_prm = train_scorer(ScorerParams{}, prm_examples, Task::prm, cfg, root.derive(7)).params;
  }
  std::vector<ReflectionExample> reflections;
  {
    std::vector<PromptSpec> parm_prompts(a.train_prompts.begin(), a.train_prompts.begin() + 400);
    auto parm_data = curate_parm(a.base, parm_prompts, a.orm_examples, ClarityBounds{},
                                 curation_gen(), a.oracle, root.derive(8));
    ScorerParams sp;
    sp = train_scorer(sp, parm_data.clarity, Task::parm_clarity, ScorerTrainConfig{2, 8, 0.1},
                      root.derive(9)).params;
    sp = train_scorer(sp, parm_data.potential, Task::parm_potential, ScorerTrainConfig{1, 8, 0.03},
                      root.derive(10)).params;
    sp = train_scorer(sp, parm_data.select, Task::parm_select, ScorerTrainConfig{1, 8, 0.008},
                      root.derive(11)).params;
    a.ft_parm = sp;

    a.parm_reward = a.ft_parm;  // selection head doubles as the outcome head
    a.parm_reward.task_weights[Task::orm] = a.ft_parm.task_weights.at(Task::parm_select);

    reflections = curate_reflection(a.orm_examples, 0.8, root.derive(12));
    a.parm_pp = train_reflection(a.ft_parm, reflections, ScorerTrainConfig{2, 8, 0.1},
                                 root.derive(13)).params;
  }

  std::fprintf(stderr, "[build] preference alignment...\n");
  {
    DpoConfig cfg;
    cfg.gen = GenConfig{};
    auto pairs = curate_dpo(a.orm_examples, root.derive(14));
    PolicyPair pp = PolicyPair::from(a.base);
    a.dpo1 = train_dpo(pp, pairs, cfg, root.derive(15)).policy;
    PolicyPair pp2{a.dpo1, a.dpo1};
    a.it_dpo = iterate_dpo(pp2, a.train_prompts, a.oracle, 1, cfg, root.derive(16)).policy;

    DpoConfig gcfg = cfg;
    gcfg.guidance_weight = 0.5;
    PolicyPair pg = PolicyPair::from(a.base);
    ModelParams g1 =
        train_dpo_guided(pg, pairs, a.train_prompts, a.ft_orm, gcfg, root.derive(17)).policy;
    PolicyPair pg2{g1, g1};
    a.guided =
        iterate_dpo(pg2, a.train_prompts, a.oracle, 1, gcfg, root.derive(18), &a.ft_orm).policy;
  }

  std::fprintf(stderr, "[build] self-correction fine-tuning...\n");
  {
    auto triples = curate_correction_triples(reflections, root.derive(19));
    if (triples.size() > 1000) triples.resize(1000);
    a.sc = finetune_self_correction(a.base, triples, 2, 0.1, root.derive(20)).params;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Bench wrappers
// ---------------------------------------------------------------------------

struct Suite {
  int ppc = 100;
  int n = 20;
  int jobs = 2;
};

BenchReport bench(const Suite& s, std::uint64_t suite_seed, const std::string& method,
                  const ModelParams& params, const ScorerParams* scorer, Strategy strategy,
                  int n, bool reflection = false) {
  BenchConfig cfg;
  cfg.prompts_per_category = s.ppc;
  cfg.method = method;
  cfg.seed = suite_seed;
  cfg.jobs = s.jobs;
  cfg.use_verifier = scorer != nullptr;
  cfg.reflection = reflection;
  cfg.verify.strategy = strategy;
  cfg.verify.n = n;
  BenchReport r = run_benchmark(cfg, params, scorer);
  std::fprintf(stderr, "  [bench seed %llu] %-18s overall=%.3f steps=%ld\n",
               static_cast<unsigned long long>(suite_seed), method.c_str(), r.overall,
               r.decode_steps);
  return r;
}

struct MethodSet {
  std::map<std::string, BenchReport> r;
  double operator[](const std::string& k) const { return r.at(k).overall; }
};

MethodSet run_methods(const Artifacts& a, const Suite& s, std::uint64_t seed,
                      const std::set<std::string>& only = {}) {
  MethodSet m;
  auto want = [&](const char* k) { return only.empty() || only.count(k); };
  if (want("baseline")) m.r["baseline"] = bench(s, seed, "baseline", a.base, nullptr, Strategy::orm_bon, 1);
  if (want("zs_orm")) m.r["zs_orm"] = bench(s, seed, "zs_orm", a.base, &a.zs, Strategy::orm_bon, s.n);
  if (want("ft_orm")) m.r["ft_orm"] = bench(s, seed, "ft_orm", a.base, &a.ft_orm, Strategy::orm_bon, s.n);
  if (want("zs_prm")) m.r["zs_prm"] = bench(s, seed, "zs_prm", a.base, &a.zs, Strategy::prm_step_bon, s.n);
  if (want("ft_prm")) m.r["ft_prm"] = bench(s, seed, "ft_prm", a.base, &a.ft_prm, Strategy::prm_step_bon, s.n);
  if (want("parm")) m.r["parm"] = bench(s, seed, "parm", a.base, &a.ft_parm, Strategy::parm, s.n);
  if (want("dpo")) m.r["dpo"] = bench(s, seed, "dpo", a.dpo1, nullptr, Strategy::orm_bon, 1);
  if (want("it_dpo")) m.r["it_dpo"] = bench(s, seed, "it_dpo", a.it_dpo, nullptr, Strategy::orm_bon, 1);
  if (want("guided")) m.r["guided"] = bench(s, seed, "guided", a.guided, nullptr, Strategy::orm_bon, 1);
  if (want("orm_after_dpo"))
    m.r["orm_after_dpo"] = bench(s, seed, "orm_after_dpo", a.it_dpo, &a.ft_orm, Strategy::orm_bon, s.n);
  if (want("orm_after_guided"))
    m.r["orm_after_guided"] =
        bench(s, seed, "orm_after_guided", a.guided, &a.ft_orm, Strategy::orm_bon, s.n);
  if (want("parm_after_dpo"))
    m.r["parm_after_dpo"] = bench(s, seed, "parm_after_dpo", a.it_dpo, &a.ft_parm, Strategy::parm, s.n);
  if (want("parm_after_guided"))
    m.r["parm_after_guided"] =
        bench(s, seed, "parm_after_guided", a.guided, &a.ft_parm, Strategy::parm, s.n);
  if (want("sc_baseline"))
    m.r["sc_baseline"] = bench(s, seed, "sc_baseline", a.sc, nullptr, Strategy::orm_bon, 1);
  if (want("parm_pp_plain"))
    m.r["parm_pp_plain"] = bench(s, seed, "parm_pp_plain", a.sc, &a.parm_pp, Strategy::parm, s.n);
  if (want("parm_pp_reflect"))
    m.r["parm_pp_reflect"] =
        bench(s, seed, "parm_pp_reflect", a.sc, &a.parm_pp, Strategy::parm, s.n, true);
  return m;
}

// Ordering predicate over a method set; re-tested at seeds 1-4 on failure.
struct Ordering {
  std::string name;
  std::set<std::string> methods;
  std::function<bool(const MethodSet&)> holds;
  std::function<std::string(const MethodSet&)> describe;
};

void check_orderings(const Artifacts& a, const Suite& s, const std::vector<Ordering>& orderings,
                     MethodSet& seed0) {
  std::vector<const Ordering*> failed;
  for (const auto& o : orderings) {
    if (o.holds(seed0)) {
      report(o.name, true, o.describe(seed0) + " [seed 0]");
    } else {
      failed.push_back(&o);
    }
  }
  if (failed.empty()) return;

  // sampling-sensitivity fallback: the ordering must hold in >= 4 of 5 seeds
  std::set<std::string> methods;
  for (const auto* o : failed)
    for (const auto& mname : o->methods) methods.insert(mname);
  std::vector<MethodSet> reruns;
  for (std::uint64_t seed = 1; seed <= 4; ++seed)
    reruns.push_back(run_methods(a, s, seed, methods));
  for (const auto* o : failed) {
    int holds = 0;
    for (const auto& m : reruns) holds += o->holds(m);
    report(o->name, holds >= 4,
           o->describe(seed0) + " [seed 0 failed; holds in " + std::to_string(holds) +
               "/4 reruns at seeds 1-4]");
  }
}

// ---------------------------------------------------------------------------
// Exactness suite
// ---------------------------------------------------------------------------

// brute-force flood fill, independent of extract_objects
std::vector<std::set<std::pair<int, int>>> floodfill_oracle(const TokenGrid& g) {
  std::vector<std::set<std::pair<int, int>>> comps;
  std::set<std::pair<int, int>> visited;
  for (int r0 = 0; r0 < g.height; ++r0)
    for (int c0 = 0; c0 < g.width; ++c0) {
      if (!is_object(g.at(r0, c0)) || visited.count({r0, c0})) continue;
      std::set<std::pair<int, int>> comp{{r0, c0}};
      bool grew = true;
      while (grew) {
        grew = false;
        for (int r = 0; r < g.height; ++r)
          for (int c = 0; c < g.width; ++c) {
            if (comp.count({r, c}) || g.at(r, c) != g.at(r0, c0)) continue;
            if (comp.count({r - 1, c}) || comp.count({r + 1, c}) || comp.count({r, c - 1}) ||
                comp.count({r, c + 1})) {
              comp.insert({r, c});
              grew = true;
            }
          }
      }
      for (auto& pc : comp) visited.insert(pc);
      comps.push_back(std::move(comp));
    }
  return comps;
}

void exactness_suite(const Suite& s) {
  // DPO loss at policy = reference is exactly ln 2
  {
    ModelParams m = ModelParams::random(RngStream(41), 0.2);
    PolicyPair pp{m, m};
    auto p = sample_prompts(PromptCategory::two_object, 1, PromptPool::train, RngStream(42))[0];
    DpoPair pair{p, render_gold(p, RngStream(43)), render_gold(p, RngStream(44))};
    double worst = 0.0;
    for (double beta : {0.05, 0.1, 1.0, 7.3})
      worst = std::max(worst, std::abs(dpo_loss(pp, pair, beta) - std::log(2.0)));
    report("dpo loss at policy=reference = ln 2", worst < 1e-12, "max |err| " + fmt(worst * 1e12) + "e-12");
  }

  // dpo_loss and loglik gradients vs central finite differences, 20 instances
  {
    const double h = 1e-5;
    double worst = 0.0;
    RngStream rng(50);
    for (int inst = 0; inst < 20; ++inst) {
      auto cat = static_cast<PromptCategory>(inst % kNumCategories);
      auto p = sample_prompts(cat, 1, PromptPool::train, rng.derive(static_cast<std::uint64_t>(inst)))[0];
      ModelParams policy = ModelParams::random(rng.derive(1000 + static_cast<std::uint64_t>(inst)), 0.2);
      ModelParams ref = ModelParams::random(rng.derive(2000 + static_cast<std::uint64_t>(inst)), 0.2);
      DpoPair pair{p, render_gold(p, rng.derive(3000 + static_cast<std::uint64_t>(inst))),
                   render_gold(p, rng.derive(4000 + static_cast<std::uint64_t>(inst)))};
      DecodeSchedule sched = DecodeSchedule::cosine(pair.y_yes.size());

      if (inst % 2 == 0) {
        PolicyPair pp{policy, ref};
        std::vector<double> grad;
        dpo_loss(pp, pair, 0.1, &grad);
        RngStream pick = rng.derive(5000 + static_cast<std::uint64_t>(inst));
        for (int k = 0; k < 3; ++k) {
          std::size_t idx = static_cast<std::size_t>(pick.uniform_int(policy.weights.size()));
          PolicyPair hi{policy, ref}, lo{policy, ref};
          hi.policy.weights[idx] += h;
          lo.policy.weights[idx] -= h;
          double fd = (dpo_loss(hi, pair, 0.1) - dpo_loss(lo, pair, 0.1)) / (2 * h);
          if (std::abs(grad[idx]) < 1e-6 && std::abs(fd) < 1e-6) continue;
          worst = std::max(worst, std::abs(fd - grad[idx]) /
                                      std::max({std::abs(grad[idx]), std::abs(fd), 1e-4}));
        }
      } else {
        std::vector<double> grad;
        loglik(policy, p, pair.y_yes, sched, nullptr, &grad);
        RngStream pick = rng.derive(6000 + static_cast<std::uint64_t>(inst));
        for (int k = 0; k < 3; ++k) {
          std::size_t idx = static_cast<std::size_t>(pick.uniform_int(policy.weights.size()));
          ModelParams hi = policy, lo = policy;
          hi.weights[idx] += h;
          lo.weights[idx] -= h;
          double fd = (loglik(hi, p, pair.y_yes, sched) - loglik(lo, p, pair.y_yes, sched)) / (2 * h);
          if (std::abs(grad[idx]) < 1e-6 && std::abs(fd) < 1e-6) continue;
          worst = std::max(worst, std::abs(fd - grad[idx]) /
                                      std::max({std::abs(grad[idx]), std::abs(fd), 1e-4}));
        }
      }
    }
    report("dpo/loglik gradients match finite differences", worst < 1e-5,
           "max rel err " + fmt(worst * 1e6) + "e-6 over 20 instances");
  }

  // likelihood normalizes on the 2x2 / 3-token / T=2 universe
  {
    ModelParams m = ModelParams::zeros();
    m.sampleable = {kEmpty, object_token(Shape::square, Color::red)};
    RngStream rng(60);
    for (auto& w : m.weights) w = rng.normal(0.0, 0.8);
    PromptSpec p;
    p.category = PromptCategory::single_object;
    p.requirements = {{Shape::square, Color::red, 1}};
    DecodeSchedule sched = DecodeSchedule::cosine(4, 2);
    double total = 0.0;
    for (int bits = 0; bits < 16; ++bits) {
      TokenGrid g(2, 2, kEmpty);
      for (int i = 0; i < 4; ++i)
        if (bits & (1 << i)) g.cells[static_cast<std::size_t>(i)] = m.sampleable[1];
      total += std::exp(loglik(m, p, g, sched));
    }
    report("exp(loglik) sums to 1 on the tiny universe", std::abs(total - 1.0) < 1e-9,
           "sum " + fmt(total));
  }

  // extract_objects vs brute-force flood fill on 10^4 random 6x6 grids
  {
    RngStream rng(61);
    const TokenId vocab[4] = {kMask, kEmpty, object_token(Shape::square, Color::red),
                              object_token(Shape::circle, Color::blue)};
    bool ok = true;
    for (int n = 0; n < 10000 && ok; ++n) {
      TokenGrid g(6, 6);
      for (auto& c : g.cells) c = vocab[rng.uniform_int(4)];
      auto got = extract_objects(g);
      auto want = floodfill_oracle(g);
      std::set<std::set<std::pair<int, int>>> gs, ws(want.begin(), want.end());
      for (const auto& comp : got) {
        std::set<std::pair<int, int>> cells;
        for (const Coord& pc : comp.cells) cells.insert({pc.row, pc.col});
        gs.insert(std::move(cells));
      }
      ok = gs == ws;
    }
    report("extract_objects == flood-fill oracle (10^4)", ok, ok ? "all grids agree" : "mismatch");
  }

  // exhaustive rollout annotation == brute-force reachability (tiny universe)
  {
    ModelParams m = ModelParams::zeros();
    m.sampleable = {kEmpty, object_token(Shape::square, Color::red)};
    RngStream rng(62);
    for (auto& w : m.weights) w = rng.normal(0.0, 0.5);
    PromptSpec p;
    p.category = PromptCategory::single_object;
    p.requirements = {{Shape::square, Color::red, 1}};
    GenConfig cfg;
    cfg.height = cfg.width = 2;
    cfg.schedule = DecodeSchedule::cosine(4, 2);
    ScorerParams oracle = ScorerParams::oracle(0.0);
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      GenerationTrace t = decode(m, p, cfg, RngStream(100 + static_cast<std::uint64_t>(trial)));
      for (int step = 0; step < 2 && ok; ++step) {
        Label got = annotate_step(m, p, t, step, RolloutConfig{1, true}, oracle, RngStream(1));
        // independent reachability: enumerate all completions of the step grid
        const TokenGrid& sg = t.steps[static_cast<std::size_t>(step)];
        std::vector<int> masked;
        for (int i = 0; i < sg.size(); ++i)
          if (is_mask(sg.cells[static_cast<std::size_t>(i)])) masked.push_back(i);
        bool reachable = false;
        for (int bits = 0; bits < (1 << masked.size()); ++bits) {
          TokenGrid w2 = sg;
          for (std::size_t i = 0; i < masked.size(); ++i)
            w2.cells[static_cast<std::size_t>(masked[i])] = m.sampleable[(bits >> i) & 1];
          if (evaluate(p, w2).verdict) reachable = true;
        }
        ok = (got == Label::yes) == reachable;
      }
    }
    report("exhaustive annotate_step == reachability", ok, ok ? "20 traces agree" : "mismatch");
  }

  // PARM with an all-yes scorer is best_of_n_orm, bit-identical
  {
    ModelParams m = ModelParams::random(RngStream(63), 0.3);
    ScorerParams all_yes;
    all_yes.mode = ScorerMode::fine_tuned;
    for (int t = 0; t < kNumTasks; ++t) {
      std::vector<double> w(kScorerFeatureDim, 0.0);
      w[kSFBias] = 50.0;
      all_yes.task_weights[static_cast<Task>(t)] = w;
    }
    VerifyConfig vc;
    vc.n = 6;
    bool ok = true;
    for (int trial = 0; trial < 6 && ok; ++trial) {
      auto cat = static_cast<PromptCategory>(trial % kNumCategories);
      auto p = sample_prompts(cat, 1, PromptPool::test, RngStream(200 + static_cast<std::uint64_t>(trial)))[0];
      VerifyResult bon = best_of_n_orm(m, p, all_yes, vc, RngStream(300 + static_cast<std::uint64_t>(trial)));
      VerifyResult parm = parm_pipeline(m, p, all_yes, vc, RngStream(300 + static_cast<std::uint64_t>(trial)));
      ok = parm.n_prime == vc.n && parm.chosen == bon.chosen &&
           parm.candidates.size() == bon.candidates.size();
      for (std::size_t i = 0; ok && i < bon.candidates.size(); ++i)
        ok = parm.candidates[i].first == bon.candidates[i].first;
    }
    report("all-yes PARM == best-of-N, bit-identical", ok, ok ? "grids identical" : "diverged");
  }

  // serialization round-trips value-exact; repeated benchmark runs
  // byte-identical
  {
    ModelParams m = ModelParams::random(RngStream(64), 0.41);
    nlohmann::json jm = m;
    bool ok = jm.get<ModelParams>().weights == m.weights &&
              nlohmann::json(jm.get<ModelParams>()).dump() == jm.dump();

    ScorerParams sp = ScorerParams::zero_shot();
    sp.oracle_noise = 0.125;
    nlohmann::json js = sp;
    ScorerParams sp2 = js.get<ScorerParams>();
    ok = ok && nlohmann::json(sp2).dump() == js.dump();

    RngStream rng(65);
    std::vector<RankingExample> recs;
    for (int i = 0; i < 50; ++i) {
      auto p = sample_prompts(PromptCategory::counting, 1, PromptPool::train,
                              rng.derive(static_cast<std::uint64_t>(i)))[0];
      RankingExample e;
      e.prompt = p;
      e.grid = render_gold(p, rng.derive(100 + static_cast<std::uint64_t>(i)));
      e.task = Task::orm;
      e.label = i % 2 ? Label::yes : Label::no;
      if (i % 3 == 0) {
        e.stage = Stage::intermediate;
        e.step_index = i % 18;
      }
      recs.push_back(e);
    }
    std::string path = "/tmp/cotgen_acceptance_roundtrip.jsonl";
    write_records(path, recs);
    auto back = read_records<RankingExample>(path);
    ok = ok && back.size() == recs.size();
    for (std::size_t i = 0; ok && i < recs.size(); ++i)
      ok = back[i].prompt == recs[i].prompt && back[i].grid == recs[i].grid &&
           back[i].label == recs[i].label && back[i].step_index == recs[i].step_index;

    BenchConfig bc;
    bc.prompts_per_category = 4;
    bc.method = "determinism-probe";
    bc.jobs = s.jobs;
    bc.use_verifier = false;
    ModelParams probe = ModelParams::random(RngStream(66), 0.3);
    std::string r1 = report_to_json(run_benchmark(bc, probe, nullptr)).dump();
    bc.jobs = 1;  // parallelism must not change the bytes either
    std::string r2 = report_to_json(run_benchmark(bc, probe, nullptr)).dump();
    ok = ok && r1 == r2;
    report("serialization exact; reports byte-identical", ok, ok ? "round-trips + reports match" : "mismatch");
  }
}

}  // namespace

int main(int argc, char** argv) {
  Suite s;
  bool skip_exactness = false;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--ppc") && i + 1 < argc) s.ppc = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--n") && i + 1 < argc) s.n = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc) s.jobs = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--skip-exactness")) skip_exactness = true;
  }
  std::printf("== acceptance: %d prompts/category, best-of-%d, %d jobs ==\n", s.ppc, s.n, s.jobs);

  if (!skip_exactness) exactness_suite(s);

  Artifacts a = build_artifacts(0, s.jobs);

  MethodSet m = run_methods(a, s, 0);

  // calibration anchor: enough headroom for every comparison
  report("baseline overall in (0.2, 0.8)", m["baseline"] > 0.2 && m["baseline"] < 0.8,
         fmt(m["baseline"]));

  std::vector<Ordering> orderings;
  orderings.push_back({"ft-ORM best-of-N >= baseline + 5 points",
                       {"ft_orm", "baseline"},
                       [](const MethodSet& x) { return x["ft_orm"] >= x["baseline"] + 0.05; },
                       [](const MethodSet& x) { return fmt(x["ft_orm"]) + " vs " + fmt(x["baseline"]); }});
  orderings.push_back({"ft-ORM gain > ft-PRM gain >= 0",
                       {"ft_orm", "ft_prm", "baseline"},
                       [](const MethodSet& x) {
                         return x["ft_orm"] - x["baseline"] > x["ft_prm"] - x["baseline"] &&
                                x["ft_prm"] >= x["baseline"];
                       },
                       [](const MethodSet& x) {
                         return "orm +" + fmt(x["ft_orm"] - x["baseline"]) + ", prm +" +
                                fmt(x["ft_prm"] - x["baseline"]);
                       }});
  orderings.push_back({"fine-tuned >= zero-shot (ORM and PRM)",
                       {"ft_orm", "zs_orm", "ft_prm", "zs_prm"},
                       [](const MethodSet& x) {
                         return x["ft_orm"] >= x["zs_orm"] && x["ft_prm"] >= x["zs_prm"];
                       },
                       [](const MethodSet& x) {
                         return "orm " + fmt(x["ft_orm"]) + ">=" + fmt(x["zs_orm"]) + ", prm " +
                                fmt(x["ft_prm"]) + ">=" + fmt(x["zs_prm"]);
                       }});
  orderings.push_back({"DPO >= baseline + 4 points; it.DPO >= DPO",
                       {"dpo", "it_dpo", "baseline"},
                       [](const MethodSet& x) {
                         return x["dpo"] >= x["baseline"] + 0.04 && x["it_dpo"] >= x["dpo"];
                       },
                       [](const MethodSet& x) {
                         return fmt(x["baseline"]) + " -> " + fmt(x["dpo"]) + " -> " + fmt(x["it_dpo"]);
                       }});
  orderings.push_back(
      {"integrations >= individuals; 3rd is max",
       {"guided", "orm_after_dpo", "orm_after_guided", "ft_orm", "it_dpo"},
       [](const MethodSet& x) {
         double indiv = std::max(x["ft_orm"], x["it_dpo"]);
         return x["guided"] >= indiv && x["orm_after_dpo"] >= indiv &&
                x["orm_after_guided"] >= indiv && x["orm_after_guided"] >= x["guided"] &&
                x["orm_after_guided"] >= x["orm_after_dpo"];
       },
       [](const MethodSet& x) {
         return "indiv " + fmt(std::max(x["ft_orm"], x["it_dpo"])) + "; 1st " + fmt(x["guided"]) +
                ", 2nd " + fmt(x["orm_after_dpo"]) + ", 3rd " + fmt(x["orm_after_guided"]);
       }});
  orderings.push_back({"PARM >= ft-ORM + 2 points",
                       {"parm", "ft_orm"},
                       [](const MethodSet& x) { return x["parm"] >= x["ft_orm"] + 0.02; },
                       [](const MethodSet& x) { return fmt(x["parm"]) + " vs " + fmt(x["ft_orm"]); }});
  orderings.push_back({"PARM integrations >= ORM integrations",
                       {"parm_after_dpo", "orm_after_dpo", "parm_after_guided", "orm_after_guided"},
                       [](const MethodSet& x) {
                         return x["parm_after_dpo"] >= x["orm_after_dpo"] &&
                                x["parm_after_guided"] >= x["orm_after_guided"];
                       },
                       [](const MethodSet& x) {
                         return fmt(x["parm_after_dpo"]) + ">=" + fmt(x["orm_after_dpo"]) + ", " +
                                fmt(x["parm_after_guided"]) + ">=" + fmt(x["orm_after_guided"]);
                       }});
  orderings.push_back(
      {"reflection >= no-reflection + 3 points",
       {"parm_pp_reflect", "parm_pp_plain"},
       [](const MethodSet& x) { return x["parm_pp_reflect"] >= x["parm_pp_plain"] + 0.03; },
       [](const MethodSet& x) { return fmt(x["parm_pp_reflect"]) + " vs " + fmt(x["parm_pp_plain"]); }});
  orderings.push_back(
      {"self-correction FT costs <= 4 points",
       {"sc_baseline", "baseline"},
       [](const MethodSet& x) { return x["sc_baseline"] >= x["baseline"] - 0.04; },
       [](const MethodSet& x) { return fmt(x["sc_baseline"]) + " vs " + fmt(x["baseline"]); }});

  check_orderings(a, s, orderings, m);

  // oracle-ORM scaling curve with shared candidate pools
  {
    BenchConfig cfg;
    cfg.prompts_per_category = s.ppc;
    cfg.method = "oracle_orm";
    cfg.seed = 0;
    cfg.jobs = s.jobs;
    cfg.verify.n = s.n;
    auto series = scaling_curve(cfg, a.base, a.oracle, {1, 2, 4, 8, 16, 20});
    bool monotone = true;
    std::string vals;
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (i > 0 && series[i].second.overall < series[i - 1].second.overall) monotone = false;
      vals += (i ? " " : "") + fmt(series[i].second.overall);
    }
    report("oracle-ORM curve non-decreasing in N", monotone, vals);
  }

  // efficiency: PARM prunes decode steps at equal-or-better quality
  {
    const BenchReport& parm = m.r.at("parm");
    const BenchReport& orm = m.r.at("ft_orm");
    double ratio = static_cast<double>(parm.decode_steps) / static_cast<double>(orm.decode_steps);
    bool ok = ratio <= 0.85 && parm.overall >= orm.overall;
    report("PARM decode steps <= 85% of ORM best-of-N", ok,
           "ratio " + fmt(ratio) + ", overall " + fmt(parm.overall) + " vs " + fmt(orm.overall));
  }

  std::printf("== %d passed, %d failed ==\n", g_pass, g_fail);
  return g_fail == 0 ? 0 : 1;
}
