#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "streetlabel/config.hpp"
#include "streetlabel/diagnostics.hpp"
#include "streetlabel/labels.hpp"
#include "streetlabel/panograph.hpp"

namespace streetlabel::dataset {

inline constexpr std::string_view kManifestFormat = "streetlabel-manifest";
inline constexpr int kManifestVersion = 1;

struct SourceDigest {
  std::string kind;  ///< "osm", "panos", ...
  std::string path;
  std::string sha256;

  friend bool operator==(const SourceDigest&, const SourceDigest&) = default;
};

struct ManifestHeader {
  int version = kManifestVersion;
  std::uint64_t seed = 0;
  ThresholdConfig thresholds;
  std::vector<SourceDigest> sources;
  /// A final manifest has every sample assigned to train or test.
  bool final = false;

  friend bool operator==(const ManifestHeader&, const ManifestHeader&) = default;
};

struct Manifest {
  ManifestHeader header;
  std::vector<LabeledSample> samples;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// JSON Lines: a header record, then one sample per line sorted by
/// sample_id. Numbers carry 6 decimals, so identical manifests serialize to
/// identical bytes. Throws DataError on duplicate sample ids, or on
/// unassigned splits in a final manifest.
std::string to_jsonl(const Manifest& m);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

Manifest parse_manifest(std::string_view text, const std::string& source = "<memory>");
Manifest read_manifest(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);
SourceDigest digest_source(std::string kind, const std::filesystem::path& path);

/// Compares the header digest of `kind` with the file at `path`; records a
/// "digest_mismatch" warning and returns false when they differ.
bool check_source(const Manifest& m, std::string_view kind, const std::filesystem::path& path,
                  Diagnostics& diag);

struct SplitResult {
  double boundary_lon = 0.0;
  std::size_t train_panos = 0;
  std::size_t test_panos = 0;
  std::vector<LabeledSample> samples;
};

/// Sorts the panos that have samples by longitude and puts the boundary at
/// the ceil(train_fraction * N)-th of them. Panos at or west of the boundary
/// go to train (ties included), the rest to test. Throws DataError when a
/// sample's pano has no metadata or fewer than two distinct longitudes exist.
SplitResult split_by_longitude(std::vector<LabeledSample> samples,
                               const std::vector<pano::PanoMeta>& panos, double train_fraction = 0.8);

struct BalanceResult {
  std::vector<LabeledSample> samples;
  std::size_t duplicates_added = 0;
};

/// Equalizes the class counts of one binary task inside split `scope` by
/// duplicating random minority samples (with replacement, seeded).
/// Duplicates get derived ids; samples outside the scope pass through.
/// Throws DataError for a non-categorical or mixed task set, or when a class
/// has no instances in scope.
BalanceResult balance(std::vector<LabeledSample> samples, std::uint64_t seed, Split scope);

/// balance() for every categorical task in both train and test. A task/split
/// that cannot be balanced is left as is with a "balance_skipped" warning.
BalanceResult balance_manifest(std::vector<LabeledSample> samples, std::uint64_t seed,
                               Diagnostics& diag);

struct TaskStats {
  std::size_t count = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t unassigned = 0;
  std::size_t duplicates = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;

  friend bool operator==(const TaskStats&, const TaskStats&) = default;
};

struct Stats {
  std::size_t total = 0;
  std::map<Task, TaskStats> tasks;  ///< always holds all nine tasks
};

Stats stats(const Manifest& m);
std::string stats_table(const Stats& s);
std::string stats_json(const Stats& s);

}  // namespace streetlabel::dataset
