#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "cotgen/bench.hpp"
#include "cotgen/render.hpp"

using namespace cotgen;

namespace {

const ModelParams& pretrained() {
  static ModelParams params = [] {
    RngStream rng(1000);
    std::vector<std::pair<PromptSpec, TokenGrid>> pairs;
    for (int i = 0; i < 600; ++i) {
      auto cat = static_cast<PromptCategory>(i % kNumCategories);
      auto p = sample_prompts(cat, 1, PromptPool::train, rng.derive(static_cast<std::uint64_t>(i)))[0];
      pairs.emplace_back(p, render_gold(p, rng.derive(10000 + static_cast<std::uint64_t>(i))));
    }
    return pretrain(pairs, 14, 0.22, RngStream(2000)).params;
  }();
  return params;
}

}  // namespace

TEST_CASE("benchmark reports are byte-identical across runs and parallelism") {
  BenchConfig cfg;
  cfg.prompts_per_category = 6;
  cfg.method = "baseline";
  cfg.seed = 3;
  cfg.use_verifier = false;

  cfg.jobs = 1;
  BenchReport a = run_benchmark(cfg, pretrained(), nullptr);
  cfg.jobs = 2;
  BenchReport b = run_benchmark(cfg, pretrained(), nullptr);
  CHECK(report_to_json(a).dump() == report_to_json(b).dump());

  // overall is the exact unweighted mean of the six category rates
  double sum = 0;
  for (const auto& [k, v] : a.category_rates) sum += v;
  CHECK(a.overall == sum / 6.0);
  CHECK(a.category_rates.size() == 6);
}

TEST_CASE("baseline ignores scorer settings") {
  BenchConfig cfg;
  cfg.prompts_per_category = 5;
  cfg.method = "baseline";
  cfg.seed = 1;
  cfg.use_verifier = false;

  ScorerParams oracle = ScorerParams::oracle(0.0);
  ScorerParams zs = ScorerParams::zero_shot();
  BenchReport a = run_benchmark(cfg, pretrained(), &oracle);
  BenchReport b = run_benchmark(cfg, pretrained(), &zs);
  BenchReport c = run_benchmark(cfg, pretrained(), nullptr);
  CHECK(report_to_json(a).dump() == report_to_json(b).dump());
  CHECK(report_to_json(a).dump() == report_to_json(c).dump());
}

TEST_CASE("bench prompts come from the test pool only") {
  auto prompts = bench_suite(PromptCategory::colors, 50, 0);
  for (const auto& p : prompts)
    for (const auto& r : p.requirements)
      CHECK(combo_in_pool(r.shape, r.color, p.category, PromptPool::test));
}

TEST_CASE("scaling curve shares pools and matches the single-N benchmark") {
  BenchConfig cfg;
  cfg.prompts_per_category = 6;
  cfg.method = "oracle_orm";
  cfg.seed = 0;
  cfg.jobs = 2;
  cfg.use_verifier = true;
  cfg.verify.strategy = Strategy::orm_bon;
  ScorerParams oracle = ScorerParams::oracle(0.0);

  auto series = scaling_curve(cfg, pretrained(), oracle, {1, 2, 4, 8});
  REQUIRE(series.size() == 4);

  // N=1 equals the plain N=1 benchmark run
  cfg.verify.n = 1;
  BenchReport bon1 = run_benchmark(cfg, pretrained(), &oracle);
  CHECK(series[0].second.overall == bon1.overall);
  for (const auto& [cat, rate] : bon1.category_rates)
    CHECK(series[0].second.category_rates.at(cat) == rate);

  // an exact-oracle curve with shared pools is monotone
  for (std::size_t i = 1; i < series.size(); ++i)
    CHECK(series[i].second.overall >= series[i - 1].second.overall);

  CHECK_THROWS_AS(scaling_curve(cfg, pretrained(), oracle, {4, 2}), Error);
  CHECK_THROWS_AS(scaling_curve(cfg, pretrained(), oracle, {}), Error);
}

TEST_CASE("comparison tables format the fixed category order") {
  BenchConfig cfg;
  cfg.prompts_per_category = 4;
  cfg.method = "baseline";
  cfg.seed = 2;
  cfg.use_verifier = false;
  BenchReport a = run_benchmark(cfg, pretrained(), nullptr);

  auto single = compare_table({a});
  CHECK(single.markdown.find("| baseline") != std::string::npos);
  CHECK(single.csv.find("method,single_object,two_object,counting,colors,position,attr_binding,overall") == 0);

  BenchReport b = a;
  b.method = "better";
  b.overall = a.overall + 0.1;
  auto table = compare_table({a, b});
  CHECK(table.markdown.find("**better**") != std::string::npos);

  BenchReport other = a;
  other.seed = 99;
  CHECK_THROWS_AS(compare_table({a, other}), Error);
}

TEST_CASE("content hashes track artifact changes") {
  std::string dir = "/tmp/cotgen_test_hash";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir + "/a.json");
    f << "{\"x\":1}";
  }
  std::string h1 = file_hash(dir + "/a.json");
  CHECK(h1 == file_hash(dir + "/a.json"));
  {
    std::ofstream f(dir + "/a.json");
    f << "{\"x\":2}";
  }
  CHECK(h1 != file_hash(dir + "/a.json"));
  CHECK_THROWS_AS(file_hash(dir + "/missing.json"), Error);

  // reports echo the provided input hashes
  BenchConfig cfg;
  cfg.prompts_per_category = 2;
  cfg.method = "baseline";
  cfg.use_verifier = false;
  cfg.input_hashes["params"] = h1;
  BenchReport r = run_benchmark(cfg, pretrained(), nullptr);
  CHECK(report_to_json(r).at("input_hashes").at("params") == h1);
}
