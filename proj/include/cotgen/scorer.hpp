#pragma once

// Reward scoring heads. One parameter bundle plays ORM, PRM, the three
// potential-assessment tasks and the reflection evaluator, in one of three
// modes:
//   oracle     - exact evaluator (optionally with a seeded flip noise eps),
//   zero_shot  - fixed hand-set weights over the scorer features,
//   fine_tuned - logistic weights trained on curated ranking data.
//
// The oracle's per-task semantics: final-grid tasks use the full evaluator;
// step-level tasks use the rollout-free unmasked check (weak early on, by
// construction); clarity uses the unmasked-fraction threshold.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "cotgen/data.hpp"
#include "cotgen/eval.hpp"
#include "cotgen/objects.hpp"
#include "cotgen/rng.hpp"

namespace cotgen {

struct ScoreQuery {
  PromptSpec prompt;
  TokenGrid grid;
  Stage stage = Stage::final;
  Task task = Task::orm;
};

struct RewardScore {
  double p_yes = 0.0;
  bool label = false;  // p_yes >= 0.5, ties resolve to yes
};

enum class ScorerMode : std::uint8_t { oracle = 0, zero_shot, fine_tuned };

inline const char* scorer_mode_name(ScorerMode m) {
  static const char* names[] = {"oracle", "zero_shot", "fine_tuned"};
  return names[static_cast<int>(m)];
}

// ---------------------------------------------------------------------------
// Scorer features (what the scoring heads "see")
// ---------------------------------------------------------------------------

// Learned scorers do not get the raw grid: they see a perceived view in which
// each cell is visible with a fixed probability, seeded by the (prompt, grid)
// contents so every look at the same image is identical. This is the desk
// analog of scoring rendered pixels with a perception-limited model; it is
// what keeps trained heads meaningfully imperfect and makes step-wise
// assessment (several looks along a path) genuinely more informative than a
// single final look. The exact evaluator and oracle mode never use it.
#ifndef COTGEN_SCORER_PERCEPTION
#define COTGEN_SCORER_PERCEPTION 0.75
#endif
constexpr double kScorerPerception = COTGEN_SCORER_PERCEPTION;

inline TokenGrid perceived_view(const PromptSpec& prompt, const TokenGrid& grid) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : prompt.key()) h = mix64(h ^ static_cast<std::uint64_t>(c));
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    acc = acc * 31 + grid.cells[i];
    if ((i & 7) == 7) h = mix64(h ^ acc);
  }
  h = mix64(h ^ acc);
  RngStream stream(h);
  TokenGrid view = grid;
  for (auto& c : view.cells)
    if (stream.uniform() > kScorerPerception) c = kMask;
  return view;
}

constexpr int kSFUnmasked = 0;   // unmasked fraction (of the true grid)
constexpr int kSFSlot = 1;       // 2 requirement slots x (satisfied, over, under)
constexpr int kSFShapeDelta = 7;   // 4: observed minus required components per shape
constexpr int kSFColorDelta = 11;  // 6: observed minus required components per color
constexpr int kSFRelation = 17;    // +1 satisfied / -1 violated / 0 not determinable
constexpr int kSFExtra = 18;       // count of components matching no requirement
constexpr int kSFBias = 19;
constexpr int kScorerFeatureDim = 20;

// Computed on the visible cells of the perceived view only; intermediate
// grids naturally yield noisy values (the blur analog), and even final grids
// are read imperfectly.
inline std::vector<double> scorer_features(const ScoreQuery& q) {
  std::vector<double> f(kScorerFeatureDim, 0.0);
  f[kSFUnmasked] = q.grid.unmasked_fraction();
  f[kSFBias] = 1.0;

  TokenGrid view = perceived_view(q.prompt, q.grid);
  auto components = extract_objects(view);
  auto groups = detail::combo_groups(q.prompt);

  std::array<int, kNumShapes> shape_obs{}, shape_req{};
  std::array<int, kNumColors> color_obs{}, color_req{};
  for (const auto& c : components) {
    shape_obs[static_cast<std::size_t>(c.shape)]++;
    color_obs[static_cast<std::size_t>(c.color)]++;
  }

  std::vector<char> claimed(components.size(), 0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    shape_req[static_cast<std::size_t>(groups[g].shape)] += groups[g].required;
    color_req[static_cast<std::size_t>(groups[g].color)] += groups[g].required;
    int matched = 0;
    for (std::size_t i = 0; i < components.size(); ++i)
      if (!claimed[i] && components[i].combo() == groups[g].combo) {
        claimed[i] = 1;
        ++matched;
      }
    if (g < 2) {
      int base = kSFSlot + static_cast<int>(g) * 3;
      f[static_cast<std::size_t>(base + 0)] = matched == groups[g].required ? 1.0 : 0.0;
      f[static_cast<std::size_t>(base + 1)] = matched > groups[g].required ? 1.0 : 0.0;
      f[static_cast<std::size_t>(base + 2)] = matched < groups[g].required ? 1.0 : 0.0;
    }
  }

  for (int s = 0; s < kNumShapes; ++s)
    f[static_cast<std::size_t>(kSFShapeDelta + s)] =
        static_cast<double>(shape_obs[static_cast<std::size_t>(s)] - shape_req[static_cast<std::size_t>(s)]);
  for (int c = 0; c < kNumColors; ++c)
    f[static_cast<std::size_t>(kSFColorDelta + c)] =
        static_cast<double>(color_obs[static_cast<std::size_t>(c)] - color_req[static_cast<std::size_t>(c)]);

  if (q.prompt.relation) {
    const auto& rel = *q.prompt.relation;
    int subj_combo = q.prompt.requirements[static_cast<std::size_t>(rel.subject_index)].combo();
    int obj_combo = q.prompt.requirements[static_cast<std::size_t>(rel.object_index)].combo();
    const ObjectInstance* subj = nullptr;
    const ObjectInstance* obj = nullptr;
    for (const auto& c : components) {
      if (!subj && c.combo() == subj_combo) subj = &c;
      else if (!obj && c.combo() == obj_combo) obj = &c;
    }
    if (subj && obj)
      f[kSFRelation] = relation_satisfied(subj->centroid_row, subj->centroid_col,
                                          obj->centroid_row, obj->centroid_col, rel.direction)
                           ? 1.0
                           : -1.0;
  }

  int extra = 0;
  for (std::size_t i = 0; i < components.size(); ++i) extra += !claimed[i];
  f[kSFExtra] = static_cast<double>(extra);
  return f;
}

// ---------------------------------------------------------------------------
// Scorer parameters
// ---------------------------------------------------------------------------

struct ScorerParams {
  ScorerMode mode = ScorerMode::oracle;
  double oracle_noise = 0.0;      // flip probability eps in [0, 0.5)
  double clarity_threshold = 0.6;  // rho for the clarity oracle
  std::map<Task, std::vector<double>> task_weights;
  // one-vs-rest reflection heads, indexed by ViolationCode
  std::array<std::vector<double>, kNumViolationCodes> reflection_code_weights{};

  static ScorerParams oracle(double eps = 0.0, double rho = 0.6) {
    ScorerParams p;
    p.mode = ScorerMode::oracle;
    p.oracle_noise = eps;
    p.clarity_threshold = rho;
    return p;
  }

  // Hand-set heuristic weights. The outcome heads reward a satisfied first
  // requirement and punish extras but ignore second slots, relations and
  // histogram detail; the step heads
  // only track decode progress, which cancels between same-step candidates
  // (so a zero-shot step verifier rides along with plain decoding, as a
  // perception model with no step-wise training would).
  static ScorerParams zero_shot() {
    ScorerParams p;
    p.mode = ScorerMode::zero_shot;
    auto outcome = std::vector<double>(kScorerFeatureDim, 0.0);
    outcome[kSFUnmasked] = 0.5;
    outcome[kSFSlot + 0] = 1.2;   // judges the first requirement only
    outcome[kSFSlot + 1] = -1.0;
    outcome[kSFExtra] = -0.8;
    outcome[kSFBias] = -1.2;
    auto step = std::vector<double>(kScorerFeatureDim, 0.0);
    step[kSFUnmasked] = 1.0;
    step[kSFBias] = -0.5;
    auto clarity = std::vector<double>(kScorerFeatureDim, 0.0);
    clarity[kSFUnmasked] = 8.0;
    clarity[kSFBias] = -4.8;
    p.task_weights[Task::orm] = outcome;
    p.task_weights[Task::parm_select] = outcome;
    p.task_weights[Task::reflection] = outcome;
    p.task_weights[Task::prm] = step;
    p.task_weights[Task::parm_potential] = step;
    p.task_weights[Task::parm_clarity] = clarity;
    return p;
  }

  bool supports(Task t) const {
    return mode == ScorerMode::oracle || task_weights.count(t) > 0;
  }
};

inline void to_json(nlohmann::json& j, const ScorerParams& p) {
  nlohmann::json tw = nlohmann::json::object();
  for (const auto& [task, w] : p.task_weights) tw[task_name(task)] = w;
  nlohmann::json rc = nlohmann::json::object();
  for (int i = 0; i < kNumViolationCodes; ++i)
    if (!p.reflection_code_weights[static_cast<std::size_t>(i)].empty())
      rc[violation_name(static_cast<ViolationCode>(i))] =
          p.reflection_code_weights[static_cast<std::size_t>(i)];
  j = nlohmann::json{{"v", kSchemaVersion},
                     {"mode", scorer_mode_name(p.mode)},
                     {"oracle_noise", p.oracle_noise},
                     {"clarity_threshold", p.clarity_threshold},
                     {"task_weights", tw},
                     {"reflection_code_weights", rc}};
}

inline void from_json(const nlohmann::json& j, ScorerParams& p) {
  std::string mode = j.at("mode").get<std::string>();
  if (mode == "oracle") p.mode = ScorerMode::oracle;
  else if (mode == "zero_shot") p.mode = ScorerMode::zero_shot;
  else if (mode == "fine_tuned") p.mode = ScorerMode::fine_tuned;
  else throw Error(Errc::schema_mismatch, "unknown scorer mode: " + mode);
  p.oracle_noise = j.at("oracle_noise").get<double>();
  p.clarity_threshold = j.at("clarity_threshold").get<double>();
  p.task_weights.clear();
  for (const auto& [key, val] : j.at("task_weights").items())
    p.task_weights[task_from_name(key)] = val.get<std::vector<double>>();
  p.reflection_code_weights = {};
  for (const auto& [key, val] : j.at("reflection_code_weights").items()) {
    for (int i = 0; i < kNumViolationCodes; ++i)
      if (key == violation_name(static_cast<ViolationCode>(i)))
        p.reflection_code_weights[static_cast<std::size_t>(i)] = val.get<std::vector<double>>();
  }
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double dot(const std::vector<double>& w, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size() && i < f.size(); ++i) s += w[i] * f[i];
  return s;
}

// Per-query noise stream: a hash of the query contents, so repeated scoring
// of the same query flips (or not) identically regardless of call order.
inline std::uint64_t query_hash(const ScoreQuery& q) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&](std::uint64_t x) { h = mix64(h ^ x); };
  feed(static_cast<std::uint64_t>(q.task));
  feed(static_cast<std::uint64_t>(q.stage));
  feed(static_cast<std::uint64_t>(q.prompt.category));
  for (const auto& r : q.prompt.requirements)
    feed(static_cast<std::uint64_t>(r.combo()) * 16 + static_cast<std::uint64_t>(r.count));
  if (q.prompt.relation)
    feed(static_cast<std::uint64_t>(q.prompt.relation->direction) * 4 +
         static_cast<std::uint64_t>(q.prompt.relation->subject_index));
  feed(static_cast<std::uint64_t>(q.grid.height) << 32 | static_cast<std::uint64_t>(q.grid.width));
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < q.grid.cells.size(); ++i) {
    acc = acc * 31 + q.grid.cells[i];
    if ((i & 7) == 7) feed(acc);
  }
  feed(acc);
  return h;
}

inline bool oracle_truth(const ScorerParams& p, const ScoreQuery& q) {
  switch (q.task) {
    case Task::orm:
    case Task::parm_select:
    case Task::reflection:
      return evaluate(q.prompt, q.grid).verdict;
    case Task::prm:
    case Task::parm_potential:
      return unmasked_fatal_violations(q.prompt, q.grid).empty();
    case Task::parm_clarity:
      return clarity_oracle(q.grid, p.clarity_threshold);
  }
  return false;
}

}  // namespace detail

inline RewardScore score(const ScorerParams& params, const ScoreQuery& query) {
  if ((query.task == Task::orm || query.task == Task::parm_select ||
       query.task == Task::reflection) &&
      query.stage == Stage::final && !query.grid.complete())
    throw Error(Errc::incomplete_grid,
                std::string("final-stage ") + task_name(query.task) + " query needs a complete grid");

  double p_yes = 0.0;
  switch (params.mode) {
    case ScorerMode::oracle: {
      bool truth = detail::oracle_truth(params, query);
      if (params.oracle_noise > 0.0) {
        RngStream noise(detail::query_hash(query));
        if (noise.uniform() < params.oracle_noise) truth = !truth;
        p_yes = truth ? 1.0 - params.oracle_noise : params.oracle_noise;
      } else {
        p_yes = truth ? 1.0 : 0.0;
      }
      break;
    }
    case ScorerMode::zero_shot:
    case ScorerMode::fine_tuned: {
      auto it = params.task_weights.find(query.task);
      if (it == params.task_weights.end())
        throw Error(Errc::unsupported_task, std::string("no weights for task ") + task_name(query.task));
      p_yes = detail::sigmoid(detail::dot(it->second, scorer_features(query)));
      break;
    }
  }
  return RewardScore{p_yes, p_yes >= 0.5};
}

// ---------------------------------------------------------------------------
// Training (logistic regression, mini-batch gradient descent on BCE)
// ---------------------------------------------------------------------------

struct ScorerTrainConfig {
  int epochs = 2;
  int batch = 8;      // paper setting
  double lr = 0.05;   // desk-scale; the paper's 1e-5 is far too small here
};

struct ScorerTrainResult {
  ScorerParams params;
  std::vector<double> epoch_loss;
  bool single_class_warning = false;
};

namespace detail {

inline std::vector<double> train_logistic(const std::vector<std::vector<double>>& feats,
                                          const std::vector<double>& labels,
                                          const ScorerTrainConfig& cfg, RngStream stream,
                                          std::vector<double>* epoch_loss) {
  std::vector<double> w(kScorerFeatureDim, 0.0);
  std::vector<int> order(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i) order[i] = static_cast<int>(i);

  for (int e = 0; e < cfg.epochs; ++e) {
    RngStream es = stream.derive(static_cast<std::uint64_t>(e));
    es.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      std::vector<double> grad(kScorerFeatureDim, 0.0);
      for (std::size_t n = start; n < end; ++n) {
        const auto& f = feats[static_cast<std::size_t>(order[n])];
        double y = labels[static_cast<std::size_t>(order[n])];
        double p = sigmoid(dot(w, f));
        double pc = std::min(1.0 - 1e-12, std::max(1e-12, p));
        loss_sum -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
        double coef = p - y;
        for (std::size_t i = 0; i < f.size(); ++i) grad[i] += coef * f[i];
      }
      double scale = cfg.lr / static_cast<double>(end - start);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= scale * grad[i];
    }
    if (epoch_loss) epoch_loss->push_back(loss_sum / static_cast<double>(order.size()));
  }
  return w;
}

inline std::vector<double> prior_only_weights(double yes_fraction_laplace) {
  std::vector<double> w(kScorerFeatureDim, 0.0);
  w[kSFBias] = std::log(yes_fraction_laplace / (1.0 - yes_fraction_laplace));
  return w;
}

}  // namespace detail

// Fine-tunes the head for `task` on ranking examples carrying that task tag.
// Single-class data warns and falls back to prior-only weights.
inline ScorerTrainResult train_scorer(ScorerParams base, const std::vector<RankingExample>& examples,
                                      Task task, const ScorerTrainConfig& cfg, RngStream stream) {
  ScorerTrainResult out;
  out.params = std::move(base);
  out.params.mode = ScorerMode::fine_tuned;

  std::vector<std::vector<double>> feats;
  std::vector<double> labels;
  int n_yes = 0;
  for (const auto& e : examples) {
    if (e.task != task)
      throw Error(Errc::invalid_argument, "example task tag does not match trained task");
    feats.push_back(scorer_features({e.prompt, e.grid, e.stage, e.task}));
    labels.push_back(e.label == Label::yes ? 1.0 : 0.0);
    n_yes += e.label == Label::yes;
  }
  if (feats.empty()) throw Error(Errc::empty_dataset, "train_scorer needs examples");

  if (n_yes == 0 || n_yes == static_cast<int>(feats.size())) {
    out.single_class_warning = true;
    double prior = (n_yes + 1.0) / (static_cast<double>(feats.size()) + 2.0);
    out.params.task_weights[task] = detail::prior_only_weights(prior);
    return out;
  }
  out.params.task_weights[task] = detail::train_logistic(feats, labels, cfg, stream, &out.epoch_loss);
  return out;
}

// Trains the reflection verdict head plus one-vs-rest violation-code heads.
inline ScorerTrainResult train_reflection(ScorerParams base,
                                          const std::vector<ReflectionExample>& examples,
                                          const ScorerTrainConfig& cfg, RngStream stream) {
  if (examples.empty()) throw Error(Errc::empty_dataset, "train_reflection needs examples");
  ScorerTrainResult out;
  out.params = std::move(base);
  out.params.mode = ScorerMode::fine_tuned;

  std::vector<std::vector<double>> feats;
  std::vector<double> verdicts;
  for (const auto& e : examples) {
    feats.push_back(scorer_features({e.prompt, e.grid, Stage::final, Task::reflection}));
    verdicts.push_back(e.report.verdict ? 1.0 : 0.0);
  }
  out.params.task_weights[Task::reflection] =
      detail::train_logistic(feats, verdicts, cfg, stream.derive(0), &out.epoch_loss);

  for (int code = 0; code < kNumViolationCodes; ++code) {
    if (static_cast<ViolationCode>(code) == ViolationCode::incomplete_image) continue;
    std::vector<double> labels;
    labels.reserve(examples.size());
    int n_pos = 0;
    for (const auto& e : examples) {
      bool has = false;
      for (const auto& v : e.report.violations)
        if (v.code == static_cast<ViolationCode>(code)) has = true;
      labels.push_back(has ? 1.0 : 0.0);
      n_pos += has;
    }
    if (n_pos == 0 || n_pos == static_cast<int>(examples.size())) {
      double prior = (n_pos + 1.0) / (static_cast<double>(examples.size()) + 2.0);
      out.params.reflection_code_weights[static_cast<std::size_t>(code)] =
          detail::prior_only_weights(prior);
      continue;
    }
    out.params.reflection_code_weights[static_cast<std::size_t>(code)] = detail::train_logistic(
        feats, labels, cfg, stream.derive(static_cast<std::uint64_t>(1 + code)), nullptr);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reflection reports
// ---------------------------------------------------------------------------

namespace detail {

// Cell attribution for learned reports: nearest-component heuristics.
// Exactness is not required because correct() re-masks with a margin.
inline std::vector<Coord> code_cells(ViolationCode code, const PromptSpec& prompt,
                                     const TokenGrid& grid) {
  auto components = extract_objects(grid);
  std::vector<char> exact(components.size(), 0);
  for (std::size_t i = 0; i < components.size(); ++i)
    for (const auto& r : prompt.requirements)
      if (components[i].combo() == r.combo()) exact[i] = 1;

  switch (code) {
    case ViolationCode::wrong_color:
    case ViolationCode::wrong_binding:
      for (std::size_t i = 0; i < components.size(); ++i)
        if (!exact[i])
          for (const auto& r : prompt.requirements)
            if (components[i].shape == r.shape && components[i].color != r.color)
              return components[i].cells;
      break;
    case ViolationCode::extra_object:
    case ViolationCode::wrong_count:
      for (std::size_t i = 0; i < components.size(); ++i)
        if (!exact[i]) return components[i].cells;
      // all exact: blame the last component of an over-represented combo
      if (!components.empty()) return components.back().cells;
      break;
    case ViolationCode::wrong_position:
      if (prompt.relation) {
        int subj_combo =
            prompt.requirements[static_cast<std::size_t>(prompt.relation->subject_index)].combo();
        for (const auto& c : components)
          if (c.combo() == subj_combo) return c.cells;
      }
      break;
    default:
      break;
  }
  return {};
}

}  // namespace detail

// Examines prompt-image alignment of a complete grid and reports the
// misalignments. Oracle mode converts the exact evaluation verbatim; learned
// mode uses the reflection verdict head plus per-code heads.
inline ReflectionReport reflect_eval(const ScorerParams& params, const PromptSpec& prompt,
                                     const TokenGrid& grid) {
  if (!grid.complete()) throw Error(Errc::incomplete_grid, "reflect_eval needs a complete grid");

  if (params.mode == ScorerMode::oracle) return oracle_report(prompt, grid);

  ScoreQuery q{prompt, grid, Stage::final, Task::reflection};
  RewardScore verdict = score(params, q);
  ReflectionReport report;
  report.source = ReportSource::learned;
  report.verdict = verdict.label;
  if (report.verdict) return report;

  auto feats = scorer_features(q);
  double best_p = -1.0;
  ViolationCode best_code = ViolationCode::missing_object;
  for (int code = 0; code < kNumViolationCodes; ++code) {
    if (static_cast<ViolationCode>(code) == ViolationCode::incomplete_image) continue;
    const auto& w = params.reflection_code_weights[static_cast<std::size_t>(code)];
    if (w.empty()) continue;
    double p = detail::sigmoid(detail::dot(w, feats));
    if (p > best_p) {
      best_p = p;
      best_code = static_cast<ViolationCode>(code);
    }
    if (p >= 0.5) {
      ViolationCode vc = static_cast<ViolationCode>(code);
      report.violations.push_back({vc, "prompt-aligned content", "predicted " + std::string(violation_name(vc)),
                                   detail::code_cells(vc, prompt, grid)});
    }
  }
  // a failing report must carry at least one violation for correct() to act on
  if (report.violations.empty())
    report.violations.push_back({best_code, "prompt-aligned content",
                                 "predicted " + std::string(violation_name(best_code)),
                                 detail::code_cells(best_code, prompt, grid)});
  return report;
}

}  // namespace cotgen
