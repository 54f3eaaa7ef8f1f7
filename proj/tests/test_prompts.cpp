#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "cotgen/prompt.hpp"

using namespace cotgen;

TEST_CASE("sampling is deterministic given the seed") {
  for (int c = 0; c < kNumCategories; ++c) {
    auto cat = static_cast<PromptCategory>(c);
    auto a = sample_prompts(cat, 5, PromptPool::train, RngStream(7));
    auto b = sample_prompts(cat, 5, PromptPool::train, RngStream(7));
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("sampled prompts honor the category invariants") {
  RngStream rng(99);
  for (int c = 0; c < kNumCategories; ++c) {
    auto cat = static_cast<PromptCategory>(c);
    auto prompts = sample_prompts(cat, 200, PromptPool::test, rng.derive(static_cast<std::uint64_t>(c)));
    for (const auto& p : prompts) {
      CHECK_NOTHROW(validate(p));
      CHECK(p.category == cat);
      switch (cat) {
        case PromptCategory::position:
          REQUIRE(p.requirements.size() == 2);
          REQUIRE(p.relation.has_value());
          CHECK(p.requirements[0].shape != p.requirements[1].shape);
          break;
        case PromptCategory::two_object:
          CHECK(p.requirements[0].shape != p.requirements[1].shape);
          CHECK_FALSE(p.relation.has_value());
          break;
        case PromptCategory::attr_binding:
          CHECK(p.requirements[0].color != p.requirements[1].color);
          CHECK(p.requirements[0].shape != p.requirements[1].shape);
          break;
        case PromptCategory::counting:
          CHECK(p.requirements[0].count >= 2);
          CHECK(p.requirements[0].count <= 4);
          break;
        default:
          CHECK(p.requirements.size() == 1);
      }
    }
  }
}

TEST_CASE("train and test pools never share a combination") {
  // 1000 draws per category per pool
  for (int c = 0; c < kNumCategories; ++c) {
    auto cat = static_cast<PromptCategory>(c);
    std::set<int> train_combos, test_combos;
    auto train = sample_prompts(cat, 1000, PromptPool::train, RngStream(1));
    auto test = sample_prompts(cat, 1000, PromptPool::test, RngStream(2));
    for (const auto& p : train)
      for (const auto& r : p.requirements) train_combos.insert(r.combo());
    for (const auto& p : test)
      for (const auto& r : p.requirements) test_combos.insert(r.combo());
    for (int combo : train_combos) CHECK_FALSE(test_combos.count(combo));
    // both pools see real variety
    CHECK(train_combos.size() >= 8);
    CHECK(test_combos.size() >= 8);
  }
}

TEST_CASE("prompt serialization round-trips") {
  RngStream rng(3);
  for (int c = 0; c < kNumCategories; ++c) {
    auto cat = static_cast<PromptCategory>(c);
    for (const auto& p : sample_prompts(cat, 20, PromptPool::train, rng.derive(static_cast<std::uint64_t>(c)))) {
      nlohmann::json j = p;
      CHECK(j.get<PromptSpec>() == p);
    }
  }
}

TEST_CASE("prompt keys are stable joins") {
  auto a = sample_prompts(PromptCategory::position, 50, PromptPool::train, RngStream(4));
  for (const auto& p : a) {
    nlohmann::json j = p;
    CHECK(j.get<PromptSpec>().key() == p.key());
  }
}
