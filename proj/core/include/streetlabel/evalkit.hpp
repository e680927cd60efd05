#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streetlabel/labels.hpp"
#include "streetlabel/manifest.hpp"

namespace streetlabel::eval {

/// One model output: a probability in [0, 1] for binary tasks, a value in
/// task units for numeric tasks.
struct PredictionRecord {
  std::string sample_id;
  Task task = Task::kIntersection;
  double value = 0.0;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// JSON Lines with sample_id, task, value. Probabilities of binary tasks
/// must lie in [0, 1].
std::vector<PredictionRecord> parse_predictions(std::string_view text, const std::string& source = "<memory>");
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<PredictionRecord>& preds);

/// Percent of predictions of `task` whose thresholded class (value >=
/// threshold means positive) equals the manifest label. Throws DataError for
/// an unknown sample id, a task mismatch, or no predictions of `task`.
double accuracy(const std::vector<PredictionRecord>& preds, const dataset::Manifest& manifest, Task task,
                double decision_threshold = 0.5);

/// Mean absolute error in task units. Same error rules as accuracy().
double mae(const std::vector<PredictionRecord>& preds, const dataset::Manifest& manifest, Task task);

struct TaskMetrics {
  Task task = Task::kIntersection;
  /// Accuracy percent for binary tasks, MAE for numeric tasks.
  double value = 0.0;
  std::size_t samples = 0;
  /// Same metric without balancing duplicates.
  double unbalanced_value = 0.0;
  std::size_t unbalanced_samples = 0;
};

struct MetricsReport {
  std::vector<TaskMetrics> tasks;
};

/// Metrics for every task that has predictions.
MetricsReport evaluate(const std::vector<PredictionRecord>& preds, const dataset::Manifest& manifest,
                       double decision_threshold = 0.5);
std::string metrics_table(const MetricsReport& r);
std::string metrics_jsonl(const MetricsReport& r);

enum class RecommendationKind { kSpeedLimitReview, kTwoWayMarkingReview };
std::string_view to_string(RecommendationKind k);

struct RecommendationRecord {
  std::string sample_id;
  osm::WayId way_id = 0;
  RecommendationKind kind = RecommendationKind::kSpeedLimitReview;
  double ground_truth = 0.0;
  double model_value = 0.0;
  /// |prediction - ground truth| for speed limits, the one-way probability
  /// for marking reviews.
  double severity = 0.0;

  friend bool operator==(const RecommendationRecord&, const RecommendationRecord&) = default;
};

struct RecommendOptions {
  double speed_delta_mph = 10.0;
  double oneway_prob = 0.9;
};

/// Speed-limit reviews where |prediction - limit| >= speed_delta_mph and
/// marking reviews for two-way roads predicted one-way with probability >=
/// oneway_prob. Balancing duplicates are ignored. Sorted by severity,
/// highest first, then by sample id.
std::vector<RecommendationRecord> recommend(const std::vector<PredictionRecord>& preds,
                                            const dataset::Manifest& manifest,
                                            const RecommendOptions& opts = {});
std::string recommendations_jsonl(const std::vector<RecommendationRecord>& recs);
std::string recommendations_table(const std::vector<RecommendationRecord>& recs);

}  // namespace streetlabel::eval
