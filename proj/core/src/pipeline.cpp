#include "streetlabel/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"
#include "streetlabel/error.hpp"
#include "streetlabel/manifest.hpp"
#include "streetlabel/evalkit.hpp"
#include "streetlabel/unwarp.hpp"

namespace streetlabel::pipeline {

using nlohmann::json;

void PipelineConfig::validate() const {
  thresholds.validate();
  if (workers < 1) throw ValidationError("--workers must be at least 1");
  if (label.driveable_headings < 1) throw ValidationError("--driveable-headings must be at least 1");
  if (label.repeat < 1) throw ValidationError("--repeat must be at least 1");
  if (!(decision_threshold >= 0.0 && decision_threshold <= 1.0)) {
    throw ValidationError("--decision-threshold must lie in [0, 1]");
  }
  if (!(speed_delta_mph > 0.0)) throw ValidationError("--speed-delta-mph must be positive");
  if (!(oneway_prob >= 0.0 && oneway_prob <= 1.0)) throw ValidationError("--oneway-prob must lie in [0, 1]");
  if (bounds && (bounds->min_lat > bounds->max_lat || bounds->min_lon > bounds->max_lon)) {
    throw ValidationError("--bbox must be min_lat,min_lon,max_lat,max_lon");
  }
}

std::uint64_t PipelineConfig::require_seed(std::string_view stage) const {
  if (!seed) throw ValidationError(fmt::format("{} needs --seed", stage));
  return *seed;
}

// ---------------------------------------------------------------------------
// Summary

Summary& Summary::add(std::string key, double v) { return add_raw(std::move(key), json(v).dump()); }
Summary& Summary::add(std::string key, std::size_t v) { return add_raw(std::move(key), std::to_string(v)); }
Summary& Summary::add(std::string key, std::string_view v) {
  return add_raw(std::move(key), json(std::string(v)).dump());
}
Summary& Summary::add(std::string key, bool v) { return add_raw(std::move(key), v ? "true" : "false"); }

Summary& Summary::add_raw(std::string key, std::string json_literal) {
  for (auto& [k, v] : fields_) {
    if (k == key) {
      v = std::move(json_literal);
      return *this;
    }
  }
  fields_.emplace_back(std::move(key), std::move(json_literal));
  return *this;
}

std::string Summary::to_json() const {
  std::string out = "{\"stage\":" + json(stage_).dump();
  for (const auto& [k, v] : fields_) out += "," + json(k).dump() + ":" + v;
  return out + "}";
}

std::optional<std::string> Summary::get(std::string_view key) const {
  for (const auto& [k, v] : fields_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Helpers

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

void require_file(const fs::path& p, std::string_view what) {
  if (!fs::exists(p)) throw MissingInputError(fmt::format("missing {}: {}", what, p.string()));
}

std::string read_text(const fs::path& p, std::string_view what) {
  require_file(p, what);
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInputError(fmt::format("cannot open {}: {}", what, p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, std::string_view text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed: " + p.string());
}

osm::RoadNetwork load_network(const PipelineConfig& cfg) {
  require_file(cfg.network_path(), "road network (run ingest-osm)");
  return osm::load_osm_file(cfg.network_path()).network;
}

std::vector<pano::PanoMeta> load_crawled(const PipelineConfig& cfg) {
  require_file(cfg.crawled_panos_path(), "panorama metadata (run crawl)");
  return pano::load_pano_file(cfg.crawled_panos_path());
}

dataset::Manifest load_manifest(const fs::path& p, std::string_view what) {
  require_file(p, what);
  return dataset::read_manifest(p);
}

fs::path pano_source_file(const PipelineConfig& cfg) {
  if (cfg.panos_path.empty()) throw ValidationError("crawl needs --panos");
  require_file(cfg.panos_path, "panorama source");
  return fs::is_directory(cfg.panos_path) ? cfg.panos_path / "panos.jsonl" : cfg.panos_path;
}

fs::path images_dir(const PipelineConfig& cfg) {
  if (!cfg.images_dir.empty()) return cfg.images_dir;
  if (!cfg.panos_path.empty() && fs::is_directory(cfg.panos_path)) return cfg.panos_path / "images";
  return {};
}

void add_diagnostics(Summary& s, const Diagnostics& diag) {
  json w = json::object();
  for (const auto& [code, n] : diag.counts()) w[code] = n;
  s.add_raw("warnings", w.dump());
}

void add_task_counts(Summary& s, const std::vector<LabeledSample>& samples) {
  json t = json::object();
  for (Task task : kAllTasks) t[std::string(to_string(task))] = 0;
  for (const auto& x : samples) t[std::string(to_string(x.task()))] = t[std::string(to_string(x.task()))].get<std::size_t>() + 1;
  s.add_raw("tasks", t.dump());
}

std::string_view sense_name(osm::Sense s) { return s == osm::Sense::kForward ? "forward" : "backward"; }

}  // namespace

// ---------------------------------------------------------------------------
// Matches file

std::string matches_to_jsonl(const std::vector<match::MatchResult>& matches) {
  std::string out;
  for (const auto& m : matches) {
    json j;
    j["pano_id"] = m.pano_id;
    j["way_id"] = m.way_id;
    j["segment_index"] = m.segment_index;
    j["distance_m"] = m.distance_m;
    j["closest"] = {m.closest.x_m, m.closest.y_m};
    j["position"] = {m.position.x_m, m.position.y_m};
    j["forward_heading_deg"] = m.forward_heading_deg;
    j["forward_sense"] = sense_name(m.forward_sense);
    j["side"] = match::to_string(m.side);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<match::MatchResult> parse_matches(std::string_view text, const std::string& source) {
  std::vector<match::MatchResult> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const json j = json::parse(line);
      match::MatchResult m;
      m.pano_id = j.at("pano_id").get<std::string>();
      m.way_id = j.at("way_id").get<osm::WayId>();
      m.segment_index = j.at("segment_index").get<std::size_t>();
      m.distance_m = j.at("distance_m").get<double>();
      m.closest = {j.at("closest").at(0).get<double>(), j.at("closest").at(1).get<double>()};
      m.position = {j.at("position").at(0).get<double>(), j.at("position").at(1).get<double>()};
      m.forward_heading_deg = j.at("forward_heading_deg").get<double>();
      const auto sense = j.at("forward_sense").get<std::string>();
      if (sense != "forward" && sense != "backward") throw RecordError(source, line_no, "bad forward_sense");
      m.forward_sense = sense == "forward" ? osm::Sense::kForward : osm::Sense::kBackward;
      const auto side = j.at("side").get<std::string>();
      if (side != "left" && side != "right") throw RecordError(source, line_no, "bad side");
      m.side = side == "left" ? match::Side::kLeft : match::Side::kRight;
      out.push_back(std::move(m));
    } catch (const json::exception& e) {
      throw RecordError(source, line_no, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages

Summary ingest_osm(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.osm_path.empty()) throw ValidationError("ingest-osm needs --osm");
  require_file(cfg.osm_path, "OSM extract");
  auto parsed = osm::load_osm_file(cfg.osm_path);
  const auto roads = osm::filter_roads(parsed.network, osm::default_highway_allowlist(cfg.include_service));
  if (roads.empty()) throw DataError("no road ways in " + cfg.osm_path.string());

  const osm::ProjectedNetwork pnet(roads, osm::default_projector(roads));
  const auto junctions = osm::find_junctions(pnet, cfg.junction_mode);
  write_text(cfg.network_path(), osm::to_osm_xml(roads));

  Summary s("ingest-osm");
  s.add("nodes", parsed.network.nodes().size())
      .add("ways", parsed.network.ways().size())
      .add("road_ways", roads.ways().size())
      .add("dropped_ways", parsed.dropped_ways)
      .add("segments", roads.segment_count())
      .add("junctions", junctions.size())
      .add("junction_mode", osm::to_string(cfg.junction_mode));
  add_diagnostics(s, parsed.diagnostics);
  return s;
}

Summary crawl(const PipelineConfig& cfg) {
  cfg.validate();
  auto records = pano::load_pano_file(pano_source_file(cfg));
  if (records.empty()) throw DataError("panorama source is empty");
  std::string seed;
  if (cfg.seed_pano) {
    seed = *cfg.seed_pano;
  } else {
    seed = std::min_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
             return a.pano_id < b.pano_id;
           })->pano_id;
  }
  const std::size_t input = records.size();
  const pano::MemoryProvider provider(std::move(records));
  auto res = pano::bfs_crawl(provider, seed, cfg.bounds, cfg.crawl_limit, cfg.workers);
  const std::size_t emitted = res.panos.size();
  pano::save_pano_file(std::move(res.panos), cfg.crawled_panos_path());

  Summary s("crawl");
  s.add("seed_pano", seed)
      .add("input_records", input)
      .add("panos", emitted)
      .add("missing_neighbors", res.missing_neighbors)
      .add("outside_bounds", res.outside_bounds);
  return s;
}

Summary match_stage(const PipelineConfig& cfg) {
  cfg.validate();
  const auto net = load_network(cfg);
  const auto panos = load_crawled(cfg);
  const osm::ProjectedNetwork pnet(net, osm::default_projector(net));
  const auto index = match::SpatialIndex::build(pnet);

  std::vector<match::MatchResult> all(panos.size());
  parallel_for(panos.size(), cfg.workers, [&](std::size_t i) { all[i] = match::nearest_way(index, pnet, panos[i]); });
  auto split = match::filter_offroad(std::move(all), cfg.thresholds);

  std::map<std::string, const pano::PanoMeta*, std::less<>> by_id;
  for (const auto& p : panos) by_id[p.pano_id] = &p;
  Diagnostics diag;
  for (auto& m : split.kept) match::forward_heading(m, pnet, *by_id.at(m.pano_id), &diag);

  auto by_pano = [](const match::MatchResult& a, const match::MatchResult& b) { return a.pano_id < b.pano_id; };
  std::sort(split.kept.begin(), split.kept.end(), by_pano);
  std::sort(split.rejected.begin(), split.rejected.end(), by_pano);
  write_text(cfg.matches_path(), matches_to_jsonl(split.kept));
  write_text(cfg.offroad_path(), matches_to_jsonl(split.rejected));

  Summary s("match");
  s.add("panos", panos.size())
      .add("matched", split.kept.size())
      .add("offroad", split.rejected.size())
      .add("offroad_max_m", cfg.thresholds.offroad_max_m)
      .add("segments", index.segment_count());
  add_diagnostics(s, diag);
  return s;
}

Summary label(const PipelineConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.require_seed("label");
  const auto net = load_network(cfg);
  const auto panos = load_crawled(cfg);
  require_file(cfg.matches_path(), "match results (run match)");
  const auto matches = parse_matches(read_text(cfg.matches_path(), "match results"), cfg.matches_path().string());

  const osm::ProjectedNetwork pnet(net, osm::default_projector(net));
  const auto junctions = osm::find_junctions(pnet, cfg.junction_mode);
  const labelgen::JunctionLocator locator(junctions, pnet.projector());
  const labelgen::LabelContext ctx{pnet, locator, cfg.thresholds, cfg.label, seed};

  std::map<std::string, const pano::PanoMeta*, std::less<>> by_id;
  for (const auto& p : panos) by_id[p.pano_id] = &p;
  for (const auto& m : matches) {
    if (!by_id.contains(m.pano_id)) throw DataError("match for unknown pano " + m.pano_id);
    net.way(m.way_id);
  }

  std::vector<std::vector<LabeledSample>> parts(matches.size());
  parallel_for(matches.size(), cfg.workers,
               [&](std::size_t i) { parts[i] = labelgen::label_pano(*by_id.at(matches[i].pano_id), matches[i], ctx); });

  dataset::Manifest m;
  m.header.seed = seed;
  m.header.thresholds = cfg.thresholds;
  m.header.sources = {dataset::digest_source("osm", cfg.network_path()),
                      dataset::digest_source("panos", cfg.crawled_panos_path())};
  for (auto& part : parts) {
    for (auto& x : part) m.samples.push_back(std::move(x));
  }
  std::sort(m.samples.begin(), m.samples.end(),
            [](const LabeledSample& a, const LabeledSample& b) { return a.sample_id < b.sample_id; });
  dataset::write_manifest(m, cfg.labels_path());

  Summary s("label");
  s.add("matched_panos", matches.size())
      .add("junctions", junctions.size())
      .add("samples", m.samples.size());
  add_task_counts(s, m.samples);
  return s;
}

Summary crop(const PipelineConfig& cfg) {
  cfg.validate();
  const auto manifest = load_manifest(cfg.labels_path(), "label manifest (run label)");
  const auto panos = load_crawled(cfg);
  const fs::path dir = images_dir(cfg);
  if (dir.empty()) throw ValidationError("crop needs --images (or --panos pointing at a fixture directory)");
  if (!fs::is_directory(dir)) throw MissingInputError("missing image directory: " + dir.string());

  std::map<std::string, const pano::PanoMeta*, std::less<>> by_id;
  for (const auto& p : panos) by_id[p.pano_id] = &p;
  std::map<std::string, std::vector<const LabeledSample*>> groups;
  for (const auto& x : manifest.samples) groups[x.pano_id()].push_back(&x);
  std::vector<std::pair<std::string, std::vector<const LabeledSample*>>> work(groups.begin(), groups.end());

  fs::create_directories(cfg.crops_dir());
  std::atomic<std::size_t> written{0};
  std::mutex mu;
  std::vector<std::string> missing;
  parallel_for(work.size(), cfg.workers, [&](std::size_t i) {
    const auto& [pano_id, samples] = work[i];
    const auto meta = by_id.find(pano_id);
    const fs::path img_path = dir / (pano_id + ".png");
    if (meta == by_id.end() || !fs::exists(img_path)) {
      std::lock_guard<std::mutex> lock(mu);
      missing.push_back(pano_id);
      return;
    }
    const Image pano = read_png(img_path);
    for (const LabeledSample* x : samples) {
      write_png(unwarp::unwarp(pano, *meta->second, x->crop), cfg.crops_dir() / (x->sample_id + ".png"));
      ++written;
    }
  });
  std::sort(missing.begin(), missing.end());

  Summary s("crop");
  s.add("panos", work.size()).add("crops", written.load()).add("missing_images", missing.size());
  if (!missing.empty()) s.add("first_missing", missing.front());
  return s;
}

Summary split(const PipelineConfig& cfg) {
  cfg.validate();
  auto manifest = load_manifest(cfg.labels_path(), "label manifest (run label)");
  const auto panos = load_crawled(cfg);
  std::set<std::string, std::less<>> used;
  for (const auto& x : manifest.samples) used.insert(x.pano_id());
  std::vector<pano::PanoMeta> labeled;
  for (const auto& p : panos) {
    if (used.contains(p.pano_id)) labeled.push_back(p);
  }
  auto res = dataset::split_by_longitude(std::move(manifest.samples), labeled, cfg.thresholds.train_fraction);
  manifest.samples = std::move(res.samples);
  manifest.header.final = true;
  dataset::write_manifest(manifest, cfg.split_path());

  std::size_t train = 0;
  for (const auto& x : manifest.samples) train += x.split == Split::kTrain;
  Summary s("split");
  s.add("boundary_lon", res.boundary_lon)
      .add("train_panos", res.train_panos)
      .add("test_panos", res.test_panos)
      .add("train_samples", train)
      .add("test_samples", manifest.samples.size() - train);
  return s;
}

Summary balance(const PipelineConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.require_seed("balance");
  auto manifest = load_manifest(cfg.split_path(), "split manifest (run split)");
  Diagnostics diag;
  auto res = dataset::balance_manifest(std::move(manifest.samples), seed, diag);
  manifest.samples = std::move(res.samples);
  manifest.header.seed = seed;
  manifest.header.final = true;
  dataset::write_manifest(manifest, cfg.final_manifest_path());

  Summary s("balance");
  s.add("samples", manifest.samples.size()).add("duplicates_added", res.duplicates_added);
  add_diagnostics(s, diag);
  return s;
}

Summary stats(const PipelineConfig& cfg) {
  cfg.validate();
  const fs::path p = cfg.manifest_path.empty() ? cfg.final_manifest_path() : cfg.manifest_path;
  const auto manifest = load_manifest(p, "manifest");
  const auto st = dataset::stats(manifest);
  write_text(cfg.out_dir / "stats.txt", dataset::stats_table(st));
  write_text(cfg.out_dir / "stats.json", dataset::stats_json(st));
  Summary s("stats");
  s.add("manifest", p.string()).add("samples", st.total);
  return s;
}

namespace {

std::pair<std::vector<eval::PredictionRecord>, dataset::Manifest> load_eval_inputs(const PipelineConfig& cfg,
                                                                                   std::string_view stage) {
  if (cfg.predictions_path.empty()) throw ValidationError(fmt::format("{} needs --predictions", stage));
  require_file(cfg.predictions_path, "predictions file");
  const fs::path p = cfg.manifest_path.empty() ? cfg.final_manifest_path() : cfg.manifest_path;
  auto manifest = load_manifest(p, "manifest");
  return {eval::load_predictions(cfg.predictions_path), std::move(manifest)};
}

}  // namespace

Summary eval(const PipelineConfig& cfg) {
  cfg.validate();
  const auto [preds, manifest] = load_eval_inputs(cfg, "eval");
  const auto report = eval::evaluate(preds, manifest, cfg.decision_threshold);
  write_text(cfg.out_dir / "metrics.jsonl", eval::metrics_jsonl(report));
  write_text(cfg.out_dir / "metrics.txt", eval::metrics_table(report));
  Summary s("eval");
  s.add("predictions", preds.size()).add("tasks", report.tasks.size());
  return s;
}

Summary recommend(const PipelineConfig& cfg) {
  cfg.validate();
  const auto [preds, manifest] = load_eval_inputs(cfg, "recommend");
  const auto recs = eval::recommend(preds, manifest, {cfg.speed_delta_mph, cfg.oneway_prob});
  write_text(cfg.out_dir / "recommendations.jsonl", eval::recommendations_jsonl(recs));
  write_text(cfg.out_dir / "recommendations.txt", eval::recommendations_table(recs));
  std::size_t speed = 0;
  for (const auto& r : recs) speed += r.kind == eval::RecommendationKind::kSpeedLimitReview;
  Summary s("recommend");
  s.add("recommendations", recs.size())
      .add("speed_limit_review", speed)
      .add("two_way_marking_review", recs.size() - speed);
  return s;
}

Summary synth(const PipelineConfig& cfg) {
  cfg.validate();
  const auto city = synth::gen_city(cfg.city);
  const auto panos = synth::gen_panos(city, cfg.panos, cfg.thresholds.inter_pos_max_m);
  write_text(cfg.out_dir / "city.osm", city.osm_xml);
  const fs::path pdir = cfg.out_dir / "panos";
  pano::save_pano_file(panos.panos, pdir / "panos.jsonl");
  write_text(cfg.out_dir / "truth.json", synth::truth_to_json(city.truth, panos));
  if (cfg.render_images) {
    fs::create_directories(pdir / "images");
    const double sign = cfg.label.handedness == Handedness::kRight ? 1.0 : -1.0;
    parallel_for(panos.panos.size(), cfg.workers, [&](std::size_t i) {
      const auto& meta = panos.panos[i];
      const Image img = synth::render_pano(meta, panos.truth.at(meta.pano_id), city.truth,
                                           cfg.thresholds.driveable_tol_deg, sign * cfg.thresholds.bike_crop_offset_deg);
      write_png(img, pdir / "images" / (meta.pano_id + ".png"));
    });
  }
  std::size_t plazas = 0;
  for (const auto& [id, t] : panos.truth) plazas += t.offroad;
  Summary s("synth");
  s.add("nodes", city.truth.node_count)
      .add("ways", city.truth.way_count)
      .add("road_ways", city.truth.road_way_count)
      .add("junctions", city.truth.junctions.size())
      .add("panos", panos.panos.size())
      .add("plaza_panos", plazas)
      .add("dropped_ambiguous", panos.dropped_ambiguous)
      .add("images", cfg.render_images);
  return s;
}

Summary run_all(const PipelineConfig& cfg, std::vector<Summary>* log) {
  cfg.validate();
  cfg.require_seed("run-all");
  if (cfg.osm_path.empty()) throw ValidationError("run-all needs --osm");
  if (cfg.panos_path.empty()) throw ValidationError("run-all needs --panos");
  require_file(cfg.osm_path, "OSM extract");
  require_file(cfg.panos_path, "panorama source");
  if (!cfg.truth_path.empty()) require_file(cfg.truth_path, "truth file");

  Summary total("run-all");
  auto step = [&](Summary s) {
    if (log) log->push_back(s);
    return s;
  };
  step(ingest_osm(cfg));
  const Summary c = step(crawl(cfg));
  const Summary m = step(match_stage(cfg));
  const Summary l = step(label(cfg));
  const bool do_crop = !cfg.skip_crop && !images_dir(cfg).empty() && fs::is_directory(images_dir(cfg));
  if (do_crop) step(crop(cfg));
  step(split(cfg));
  const Summary b = step(balance(cfg));
  step(stats(cfg));

  total.add_raw("panos", *c.get("panos"))
      .add_raw("matched", *m.get("matched"))
      .add_raw("offroad", *m.get("offroad"))
      .add_raw("samples", *l.get("samples"))
      .add_raw("balanced_samples", *b.get("samples"))
      .add("cropped", do_crop)
      .add("manifest", cfg.final_manifest_path().string());

  if (!cfg.truth_path.empty()) {
    synth::CityTruth city;
    synth::PanoSet truth;
    synth::truth_from_json(read_text(cfg.truth_path, "truth file"), city, truth);
    const auto labels = dataset::read_manifest(cfg.labels_path());
    const auto rep = synth::verify_labels(labels.samples, city, truth, cfg.thresholds, cfg.label);
    total.add("truth_checked", rep.checked).add("truth_mismatches", rep.mismatches.size());
    if (!rep.ok()) {
      throw DataError(fmt::format("{} labels disagree with ground truth; first: {}", rep.mismatches.size(),
                                  rep.mismatches.front()));
    }
  }
  return total;
}

}  // namespace streetlabel::pipeline
