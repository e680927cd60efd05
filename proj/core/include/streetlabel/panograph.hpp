#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streetlabel/geo.hpp"
#include "streetlabel/image.hpp"

namespace streetlabel::pano {

inline constexpr std::size_t kPanoWidth = 832;
inline constexpr std::size_t kPanoHeight = 416;

struct YearMonth {
  int year = 0;
  int month = 0;

  friend bool operator==(const YearMonth&, const YearMonth&) = default;
};

/// "YYYY-MM"; throws ValidationError otherwise.
YearMonth parse_year_month(std::string_view s);
std::string to_string(const YearMonth& ym);

struct PanoMeta {
  std::string pano_id;
  geo::GeoPoint loc;
  /// Capture vehicle heading, clockwise from north, [0, 360).
  double azimuth_deg = 0.0;
  std::vector<std::string> neighbors;
  std::optional<YearMonth> capture_date;

  friend bool operator==(const PanoMeta&, const PanoMeta&) = default;
};

void validate(const PanoMeta& meta);

/// Source of panorama metadata and imagery. Implementations must be
/// deterministic for a fixed backing store and callable from several threads.
class PanoProvider {
 public:
  virtual ~PanoProvider() = default;
  virtual std::optional<PanoMeta> fetch_meta(std::string_view pano_id) const = 0;
  virtual std::optional<Image> fetch_image(std::string_view pano_id) const = 0;
};

/// Provider over an in-memory record set, with optional images.
class MemoryProvider : public PanoProvider {
 public:
  explicit MemoryProvider(std::vector<PanoMeta> panos);

  void add_image(const std::string& pano_id, Image img);
  std::optional<PanoMeta> fetch_meta(std::string_view pano_id) const override;
  std::optional<Image> fetch_image(std::string_view pano_id) const override;

 private:
  std::map<std::string, PanoMeta, std::less<>> panos_;
  std::map<std::string, Image, std::less<>> images_;
};

/// Fixture directory layout: `<dir>/panos.jsonl` plus `<dir>/images/<pano_id>.png`.
class DirectoryProvider : public PanoProvider {
 public:
  explicit DirectoryProvider(std::filesystem::path dir);

  std::optional<PanoMeta> fetch_meta(std::string_view pano_id) const override;
  std::optional<Image> fetch_image(std::string_view pano_id) const override;
  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path image_path(std::string_view pano_id) const;

 private:
  std::filesystem::path dir_;
  MemoryProvider meta_;
};

struct GeoBounds {
  double min_lat = -90.0;
  double min_lon = -180.0;
  double max_lat = 90.0;
  double max_lon = 180.0;

  bool contains(const geo::GeoPoint& p) const {
    return p.lat_deg >= min_lat && p.lat_deg <= max_lat && p.lon_deg >= min_lon &&
           p.lon_deg <= max_lon;
  }
};

struct CrawlResult {
  /// Emission order is the FIFO breadth-first order from the seed.
  std::vector<PanoMeta> panos;
  std::size_t missing_neighbors = 0;
  std::size_t outside_bounds = 0;
};

/// Breadth-first crawl over neighbor links. Panoramas outside `bounds` are
/// marked visited but neither emitted nor expanded. With `workers` > 1 the
/// metadata of each BFS layer is fetched concurrently; output order is the
/// same as the sequential crawl. Throws MissingInputError if the seed does
/// not resolve.
CrawlResult bfs_crawl(const PanoProvider& provider, const std::string& seed,
                      const std::optional<GeoBounds>& bounds, std::size_t limit,
                      std::size_t workers = 1);

/// JSON Lines, one panorama per line. Errors name the offending line.
std::vector<PanoMeta> load_pano_file(const std::filesystem::path& path);
std::vector<PanoMeta> parse_pano_jsonl(std::string_view text, const std::string& source = "<memory>");
/// Writes records sorted by pano_id.
void save_pano_file(std::vector<PanoMeta> panos, const std::filesystem::path& path);
std::string to_pano_jsonl(std::vector<PanoMeta> panos);

}  // namespace streetlabel::pano
