#include "streetlabel/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "json.hpp"
#include "streetlabel/error.hpp"

namespace streetlabel::eval {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<PredictionRecord> parse_predictions(std::string_view text, const std::string& source) {
  std::vector<PredictionRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      const json j = json::parse(line);
      PredictionRecord p{j.at("sample_id").get<std::string>(), parse_task(j.at("task").get<std::string>()),
                         j.at("value").get<double>()};
      if (!std::isfinite(p.value)) throw DataError("non-finite prediction");
      if (is_categorical(p.task) && (p.value < 0.0 || p.value > 1.0)) {
        throw DataError("probability outside [0, 1]");
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw RecordError(source, line_no, e.what());
    } catch (const Error& e) {
      throw RecordError(source, line_no, e.what());
    }
  }
  return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("missing predictions file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_predictions(ss.str(), path.string());
}

std::string to_jsonl(const std::vector<PredictionRecord>& preds) {
  std::string out;
  for (const auto& p : preds) {
    ordered_json j;
    j["sample_id"] = p.sample_id;
    j["task"] = to_string(p.task);
    j["value"] = p.value;
    out += j.dump() + "\n";
  }
  return out;
}

namespace {

using SampleIndex = std::unordered_map<std::string_view, const LabeledSample*>;

SampleIndex index_samples(const dataset::Manifest& m) {
  SampleIndex idx;
  idx.reserve(m.samples.size());
  for (const auto& s : m.samples) idx.emplace(s.sample_id, &s);
  return idx;
}

// Prediction/label pairs of `task`, validated.
std::vector<std::pair<const PredictionRecord*, const LabeledSample*>> pairs_for(
    const std::vector<PredictionRecord>& preds, const SampleIndex& idx, Task task, bool skip_duplicates) {
  std::vector<std::pair<const PredictionRecord*, const LabeledSample*>> out;
  for (const auto& p : preds) {
    if (p.task != task) continue;
    auto it = idx.find(p.sample_id);
    if (it == idx.end()) throw DataError("prediction for unknown sample_id " + p.sample_id);
    if (it->second->task() != task) {
      throw DataError("prediction task " + std::string(to_string(task)) + " does not match sample " +
                      p.sample_id);
    }
    if (skip_duplicates && is_duplicate_id(p.sample_id)) continue;
    out.emplace_back(&p, it->second);
  }
  return out;
}

double accuracy_of(const std::vector<std::pair<const PredictionRecord*, const LabeledSample*>>& pairs,
                   double threshold) {
  std::size_t correct = 0;
  for (const auto& [p, s] : pairs) {
    if ((p->value >= threshold) == s->label.flag()) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(pairs.size());
}

double mae_of(const std::vector<std::pair<const PredictionRecord*, const LabeledSample*>>& pairs) {
  double sum = 0.0;
  for (const auto& [p, s] : pairs) sum += std::abs(p->value - s->label.as_double());
  return sum / static_cast<double>(pairs.size());
}

}  // namespace

double accuracy(const std::vector<PredictionRecord>& preds, const dataset::Manifest& manifest, Task task,
                double decision_threshold) {
  if (!is_categorical(task)) throw ValidationError("accuracy needs a binary task");
  const auto pairs = pairs_for(preds, index_samples(manifest), task, false);
  if (pairs.empty()) throw DataError("no predictions for task " + std::string(to_string(task)));
  return accuracy_of(pairs, decision_threshold);
}

double mae(const std::vector<PredictionRecord>& preds, const dataset::Manifest& manifest, Task task) {
  if (is_categorical(task)) throw ValidationError("mae needs a numeric task");
  const auto pairs = pairs_for(preds, index_samples(manifest), task, false);
  if (pairs.empty()) throw DataError("no predictions for task " + std::string(to_string(task)));
  return mae_of(pairs);
}

MetricsReport evaluate(const std::vector<PredictionRecord>& preds, const dataset::Manifest& manifest,
                       double decision_threshold) {
  const SampleIndex idx = index_samples(manifest);
  std::set<Task> present;
  for (const auto& p : preds) present.insert(p.task);
  MetricsReport r;
  for (Task t : kAllTasks) {
    if (!present.contains(t)) continue;
    const auto all = pairs_for(preds, idx, t, false);
    const auto originals = pairs_for(preds, idx, t, true);
    TaskMetrics tm;
    tm.task = t;
    tm.samples = all.size();
    tm.unbalanced_samples = originals.size();
    if (is_categorical(t)) {
      tm.value = accuracy_of(all, decision_threshold);
      if (!originals.empty()) tm.unbalanced_value = accuracy_of(originals, decision_threshold);
    } else {
      tm.value = mae_of(all);
      if (!originals.empty()) tm.unbalanced_value = mae_of(originals);
    }
    r.tasks.push_back(tm);
  }
  return r;
}

std::string metrics_table(const MetricsReport& r) {
  std::string out = fmt::format("{:<22} {:>10} {:>12} {:>8} {:>12} {:>8}\n", "task", "metric", "balanced",
                                "n", "unbalanced", "n");
  for (const auto& t : r.tasks) {
    out += fmt::format("{:<22} {:>10} {:>12.4f} {:>8} {:>12.4f} {:>8}\n", to_string(t.task),
                       is_categorical(t.task) ? "accuracy%" : "mae", t.value, t.samples, t.unbalanced_value,
                       t.unbalanced_samples);
  }
  return out;
}

std::string metrics_jsonl(const MetricsReport& r) {
  std::string out;
  for (const auto& t : r.tasks) {
    ordered_json j;
    j["task"] = to_string(t.task);
    j["metric"] = is_categorical(t.task) ? "accuracy_percent" : "mae";
    j["value"] = t.value;
    j["samples"] = t.samples;
    j["unbalanced_value"] = t.unbalanced_value;
    j["unbalanced_samples"] = t.unbalanced_samples;
    out += j.dump() + "\n";
  }
  return out;
}

std::string_view to_string(RecommendationKind k) {
  return k == RecommendationKind::kSpeedLimitReview ? "speed-limit-review" : "two-way-marking-review";
}

std::vector<RecommendationRecord> recommend(const std::vector<PredictionRecord>& preds,
                                            const dataset::Manifest& manifest, const RecommendOptions& opts) {
  const SampleIndex idx = index_samples(manifest);
  std::vector<RecommendationRecord> out;
  for (const auto& [p, s] : pairs_for(preds, idx, Task::kSpeedLimit, true)) {
    const double gt = s->label.real();
    const double dev = std::abs(p->value - gt);
    if (dev >= opts.speed_delta_mph) {
      out.push_back({s->sample_id, s->way_id, RecommendationKind::kSpeedLimitReview, gt, p->value, dev});
    }
  }
  for (const auto& [p, s] : pairs_for(preds, idx, Task::kOneWay, true)) {
    if (!s->label.flag() && p->value >= opts.oneway_prob) {
      out.push_back(
          {s->sample_id, s->way_id, RecommendationKind::kTwoWayMarkingReview, 0.0, p->value, p->value});
    }
  }
  std::sort(out.begin(), out.end(), [](const RecommendationRecord& a, const RecommendationRecord& b) {
    if (a.severity != b.severity) return a.severity > b.severity;
    return a.sample_id < b.sample_id;
  });
  return out;
}

std::string recommendations_jsonl(const std::vector<RecommendationRecord>& recs) {
  std::string out;
  for (const auto& r : recs) {
    ordered_json j;
    j["sample_id"] = r.sample_id;
    j["way_id"] = r.way_id;
    j["kind"] = to_string(r.kind);
    j["ground_truth"] = r.ground_truth;
    j["model_value"] = r.model_value;
    j["severity"] = r.severity;
    out += j.dump() + "\n";
  }
  return out;
}

std::string recommendations_table(const std::vector<RecommendationRecord>& recs) {
  std::string out = fmt::format("{:<24} {:>12} {:<24} {:>12} {:>12} {:>10}\n", "sample_id", "way_id", "kind",
                                "truth", "model", "severity");
  for (const auto& r : recs) {
    out += fmt::format("{:<24} {:>12} {:<24} {:>12.3f} {:>12.3f} {:>10.3f}\n", r.sample_id, r.way_id,
                       to_string(r.kind), r.ground_truth, r.model_value, r.severity);
  }
  return out;
}

}  // namespace streetlabel::eval
