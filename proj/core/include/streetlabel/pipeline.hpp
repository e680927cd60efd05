#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "streetlabel/config.hpp"
#include "streetlabel/labelgen.hpp"
#include "streetlabel/osm.hpp"
#include "streetlabel/panograph.hpp"
#include "streetlabel/roadmatch.hpp"
#include "streetlabel/synthkit.hpp"

namespace streetlabel::pipeline {

namespace fs = std::filesystem;

/// Settings shared by every stage. Empty paths fall back to the stage
/// defaults inside out_dir (see the `*_path` helpers).
struct PipelineConfig {
  fs::path osm_path;      ///< raw extract for ingest-osm
  fs::path panos_path;    ///< panos.jsonl or a fixture directory (crawl)
  fs::path images_dir;    ///< <pano_id>.png files (crop)
  fs::path out_dir = "out";
  fs::path manifest_path;     ///< stats / eval / recommend input
  fs::path predictions_path;  ///< eval / recommend input
  fs::path truth_path;        ///< run-all: check labels against this truth file

  ThresholdConfig thresholds;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  osm::JunctionMode junction_mode = osm::JunctionMode::kContinuationFiltered;
  labelgen::LabelOptions label;
  bool include_service = false;

  std::optional<std::string> seed_pano;
  std::optional<pano::GeoBounds> bounds;
  std::size_t crawl_limit = 1000000;

  double decision_threshold = 0.5;
  double speed_delta_mph = 10.0;
  double oneway_prob = 0.9;
  bool skip_crop = false;

  synth::CityParams city;
  synth::PanoParams panos;
  bool render_images = true;

  /// Checks thresholds and worker count; throws ValidationError.
  void validate() const;
  std::uint64_t require_seed(std::string_view stage) const;

  fs::path network_path() const { return out_dir / "network.osm"; }
  fs::path crawled_panos_path() const { return out_dir / "panos.jsonl"; }
  fs::path matches_path() const { return out_dir / "matches.jsonl"; }
  fs::path offroad_path() const { return out_dir / "offroad.jsonl"; }
  fs::path labels_path() const { return out_dir / "labels.jsonl"; }
  fs::path crops_dir() const { return out_dir / "crops"; }
  fs::path split_path() const { return out_dir / "split.jsonl"; }
  fs::path final_manifest_path() const { return out_dir / "manifest.jsonl"; }
};

/// Ordered key/value record printed after every stage. Values are stored as
/// JSON literals.
class Summary {
 public:
  explicit Summary(std::string stage) : stage_(std::move(stage)) {}

  Summary& add(std::string key, double v);
  Summary& add(std::string key, std::size_t v);
  Summary& add(std::string key, std::string_view v);
  Summary& add(std::string key, const char* v) { return add(std::move(key), std::string_view(v)); }
  Summary& add(std::string key, bool v);
  Summary& add_raw(std::string key, std::string json_literal);

  const std::string& stage() const { return stage_; }
  /// Single-line JSON object, stage first.
  std::string to_json() const;
  std::optional<std::string> get(std::string_view key) const;

 private:
  std::string stage_;
  std::vector<std::pair<std::string, std::string>> fields_;
};

/// Match record as stored in matches.jsonl.
std::string matches_to_jsonl(const std::vector<match::MatchResult>& matches);
std::vector<match::MatchResult> parse_matches(std::string_view text, const std::string& source);

Summary ingest_osm(const PipelineConfig& cfg);
Summary crawl(const PipelineConfig& cfg);
Summary match_stage(const PipelineConfig& cfg);
Summary label(const PipelineConfig& cfg);
Summary crop(const PipelineConfig& cfg);
Summary split(const PipelineConfig& cfg);
Summary balance(const PipelineConfig& cfg);
Summary stats(const PipelineConfig& cfg);
Summary eval(const PipelineConfig& cfg);
Summary recommend(const PipelineConfig& cfg);
/// Writes city.osm, panos/panos.jsonl, panos/images/*.png and truth.json
/// into out_dir.
Summary synth(const PipelineConfig& cfg);
/// ingest-osm, crawl, match, label, crop, split, balance, stats. Each
/// stage's summary is appended to `log` when given.
Summary run_all(const PipelineConfig& cfg, std::vector<Summary>* log = nullptr);

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace streetlabel::pipeline
