#include "streetlabel/panograph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "streetlabel/error.hpp"

namespace streetlabel::pano {

using nlohmann::json;

YearMonth parse_year_month(std::string_view s) {
  auto digits = [](std::string_view d) {
    return !d.empty() && std::all_of(d.begin(), d.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (s.size() != 7 || s[4] != '-' || !digits(s.substr(0, 4)) || !digits(s.substr(5, 2))) {
    throw ValidationError("capture_date must be YYYY-MM, got '" + std::string(s) + "'");
  }
  YearMonth ym{std::stoi(std::string(s.substr(0, 4))), std::stoi(std::string(s.substr(5, 2)))};
  if (ym.month < 1 || ym.month > 12) throw ValidationError("capture_date month out of range");
  return ym;
}

std::string to_string(const YearMonth& ym) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", ym.year, ym.month);
  return buf;
}

void validate(const PanoMeta& meta) {
  if (meta.pano_id.empty()) throw ValidationError("empty pano_id");
  geo::validate(meta.loc);
  if (!std::isfinite(meta.azimuth_deg) || meta.azimuth_deg < 0.0 || meta.azimuth_deg >= 360.0) {
    throw ValidationError("pano " + meta.pano_id + ": azimuth out of [0, 360)");
  }
}

MemoryProvider::MemoryProvider(std::vector<PanoMeta> panos) {
  for (auto& p : panos) {
    validate(p);
    const std::string id = p.pano_id;
    if (!panos_.emplace(id, std::move(p)).second) throw DataError("duplicate pano_id " + id);
  }
}

void MemoryProvider::add_image(const std::string& pano_id, Image img) {
  images_.insert_or_assign(pano_id, std::move(img));
}

std::optional<PanoMeta> MemoryProvider::fetch_meta(std::string_view pano_id) const {
  auto it = panos_.find(pano_id);
  if (it == panos_.end()) return std::nullopt;
  return it->second;
}

std::optional<Image> MemoryProvider::fetch_image(std::string_view pano_id) const {
  auto it = images_.find(pano_id);
  if (it == images_.end()) return std::nullopt;
  return it->second;
}

DirectoryProvider::DirectoryProvider(std::filesystem::path dir)
    : dir_(std::move(dir)), meta_(load_pano_file(dir_ / "panos.jsonl")) {}

std::optional<PanoMeta> DirectoryProvider::fetch_meta(std::string_view pano_id) const {
  return meta_.fetch_meta(pano_id);
}

std::filesystem::path DirectoryProvider::image_path(std::string_view pano_id) const {
  return dir_ / "images" / (std::string(pano_id) + ".png");
}

std::optional<Image> DirectoryProvider::fetch_image(std::string_view pano_id) const {
  const auto path = image_path(pano_id);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_png(path);
}

CrawlResult bfs_crawl(const PanoProvider& provider, const std::string& seed,
                      const std::optional<GeoBounds>& bounds, std::size_t limit,
                      std::size_t workers) {
  CrawlResult result;
  auto seed_meta = provider.fetch_meta(seed);
  if (!seed_meta) throw MissingInputError("seed panorama '" + seed + "' not found");
  if (limit == 0) return result;

  std::unordered_set<std::string> visited{seed};
  std::vector<PanoMeta> layer{std::move(*seed_meta)};

  // Processing a whole layer at a time yields the same order as a FIFO queue:
  // every pano of hop h is dequeued before any pano of hop h + 1.
  while (!layer.empty()) {
    std::vector<std::string> next_ids;
    for (auto& meta : layer) {
      if (bounds && !bounds->contains(meta.loc)) {
        ++result.outside_bounds;
        continue;
      }
      for (const auto& n : meta.neighbors) {
        if (visited.insert(n).second) next_ids.push_back(n);
      }
      result.panos.push_back(std::move(meta));
      if (result.panos.size() >= limit) return result;
    }

    std::vector<std::optional<PanoMeta>> fetched(next_ids.size());
    if (workers <= 1 || next_ids.size() < 2) {
      for (std::size_t i = 0; i < next_ids.size(); ++i) fetched[i] = provider.fetch_meta(next_ids[i]);
    } else {
      const std::size_t n_workers = std::min(workers, next_ids.size());
      std::vector<std::future<void>> jobs;
      for (std::size_t w = 0; w < n_workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
          for (std::size_t i = w; i < next_ids.size(); i += n_workers) {
            fetched[i] = provider.fetch_meta(next_ids[i]);
          }
        }));
      }
      for (auto& j : jobs) j.get();
    }

    layer.clear();
    for (auto& f : fetched) {
      if (!f) {
        ++result.missing_neighbors;
        continue;
      }
      layer.push_back(std::move(*f));
    }
  }
  return result;
}

namespace {

PanoMeta from_json_line(const json& j) {
  PanoMeta m;
  m.pano_id = j.at("pano_id").get<std::string>();
  m.loc.lat_deg = j.at("lat").get<double>();
  m.loc.lon_deg = j.at("lon").get<double>();
  m.azimuth_deg = j.at("azimuth_deg").get<double>();
  if (auto it = j.find("neighbors"); it != j.end()) {
    m.neighbors = it->get<std::vector<std::string>>();
  }
  if (auto it = j.find("capture_date"); it != j.end() && !it->is_null()) {
    m.capture_date = parse_year_month(it->get<std::string>());
  }
  validate(m);
  return m;
}

json to_json_line(const PanoMeta& m) {
  json j = json::object();
  j["pano_id"] = m.pano_id;
  j["lat"] = m.loc.lat_deg;
  j["lon"] = m.loc.lon_deg;
  j["azimuth_deg"] = m.azimuth_deg;
  j["neighbors"] = m.neighbors;
  if (m.capture_date) j["capture_date"] = to_string(*m.capture_date);
  return j;
}

}  // namespace

std::vector<PanoMeta> parse_pano_jsonl(std::string_view text, const std::string& source) {
  std::vector<PanoMeta> out;
  std::set<std::string, std::less<>> seen;
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
    PanoMeta m;
    try {
      m = from_json_line(json::parse(line));
    } catch (const json::exception& e) {
      throw RecordError(source, line_no, e.what());
    } catch (const Error& e) {
      throw RecordError(source, line_no, e.what());
    }
    if (!seen.insert(m.pano_id).second) {
      throw RecordError(source, line_no, "duplicate pano_id '" + m.pano_id + "'");
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<PanoMeta> load_pano_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("missing panorama metadata file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pano_jsonl(ss.str(), path.string());
}

std::string to_pano_jsonl(std::vector<PanoMeta> panos) {
  std::sort(panos.begin(), panos.end(),
            [](const PanoMeta& a, const PanoMeta& b) { return a.pano_id < b.pano_id; });
  std::string out;
  for (std::size_t i = 0; i < panos.size(); ++i) {
    validate(panos[i]);
    if (i > 0 && panos[i].pano_id == panos[i - 1].pano_id) {
      throw DataError("duplicate pano_id " + panos[i].pano_id);
    }
    out += to_json_line(panos[i]).dump();
    out += '\n';
  }
  return out;
}

void save_pano_file(std::vector<PanoMeta> panos, const std::filesystem::path& path) {
  const std::string text = to_pano_jsonl(std::move(panos));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace streetlabel::pano
