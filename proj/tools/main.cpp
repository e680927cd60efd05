// streetlabel: command-line driver for the labeling pipeline stages.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "streetlabel/error.hpp"
#include "streetlabel/pipeline.hpp"

namespace sl = streetlabel;
namespace pl = streetlabel::pipeline;

namespace {

std::string flag_name(std::string_view field) {
  std::string s(field);
  for (char& c : s) {
    if (c == '_') c = '-';
  }
  return "--" + s;
}

struct Args {
  pl::PipelineConfig cfg;
  std::string junction_mode = "continuation";
  std::string handedness = "right";
  std::vector<std::string> tasks;
  std::vector<double> bbox;
  std::string seed_pano;
  std::uint64_t seed = 0;
  bool no_images = false;
};

void add_options(CLI::App& app, Args& a) {
  auto& c = a.cfg;
  app.add_option("--osm", c.osm_path, "OSM XML extract (.osm or .osm.gz)")->group("Inputs");
  app.add_option("--panos", c.panos_path, "panorama metadata: panos.jsonl or a directory holding panos.jsonl and images/")
      ->group("Inputs");
  app.add_option("--images", c.images_dir, "directory of <pano_id>.png panoramas (default: <panos>/images)")
      ->group("Inputs");
  app.add_option("--manifest", c.manifest_path, "manifest for stats/eval/recommend (default: <out>/manifest.jsonl)")
      ->group("Inputs");
  app.add_option("--predictions", c.predictions_path, "model predictions, JSON Lines {sample_id, task, value}")
      ->group("Inputs");
  app.add_option("--truth", c.truth_path, "run-all: check labels against a synth truth.json")->group("Inputs");
  app.add_option("--out", c.out_dir, "output directory")->capture_default_str()->group("Inputs");

  for (const auto& f : sl::threshold_fields()) {
    // Also reachable by the bare field name, so config files can use it.
    const std::string names = flag_name(f.name) + ",--" + std::string(f.name);
    CLI::Option* opt = f.real != nullptr ? app.add_option(names, c.thresholds.*f.real, std::string(f.help))
                                         : app.add_option(names, c.thresholds.*f.integer, std::string(f.help));
    opt->capture_default_str()->group("Thresholds");
  }

  app.add_option("--seed", a.seed, "global seed (required by label, balance, run-all)")->group("Run");
  app.add_option("--workers", c.workers, "worker threads for crawl, match, label, crop, synth")
      ->capture_default_str()
      ->group("Run");
  app.add_option("--junction-mode", a.junction_mode,
                 "shared: any node shared by two ways; continuation: also needs three or more arms")
      ->check(CLI::IsMember({"shared", "continuation"}))
      ->capture_default_str()
      ->group("Run");
  app.add_option("--handedness", a.handedness, "traffic side, picks the curb side for bike-lane crops")
      ->check(CLI::IsMember({"right", "left"}))
      ->capture_default_str()
      ->group("Run");
  app.add_option("--driveable-headings", c.label.driveable_headings, "random driveable crops per panorama")
      ->capture_default_str()
      ->group("Run");
  app.add_option("--repeat", c.label.repeat, "draws per panorama for heading-angle and wrong-way")
      ->capture_default_str()
      ->group("Run");
  app.add_option("--tasks", a.tasks, "comma-separated task subset (default: all nine)")->delimiter(',')->group("Run");
  app.add_flag("--include-service", c.include_service, "treat highway=service as road")->group("Run");
  app.add_option("--seed-pano", a.seed_pano, "crawl start (default: smallest pano id)")->group("Run");
  app.add_option("--bbox", a.bbox, "crawl bounds: min_lat,min_lon,max_lat,max_lon")
      ->delimiter(',')
      ->expected(4)
      ->group("Run");
  app.add_option("--limit", c.crawl_limit, "max panoramas emitted by crawl")->capture_default_str()->group("Run");
  app.add_flag("--skip-crop", c.skip_crop, "run-all: do not render crops")->group("Run");

  app.add_option("--decision-threshold", c.decision_threshold, "probability at or above which a binary prediction is positive")
      ->capture_default_str()
      ->group("Evaluation");
  app.add_option("--speed-delta-mph", c.speed_delta_mph, "speed-limit review when |prediction - limit| >= this")
      ->capture_default_str()
      ->group("Evaluation");
  app.add_option("--oneway-prob", c.oneway_prob, "two-way review when P(one-way) >= this on a two-way road")
      ->capture_default_str()
      ->group("Evaluation");

  app.add_option("--rows", c.city.rows, "east-west streets")->capture_default_str()->group("Synth");
  app.add_option("--cols", c.city.cols, "north-south streets")->capture_default_str()->group("Synth");
  app.add_option("--block-m", c.city.block_m, "block length, meters")->capture_default_str()->group("Synth");
  app.add_option("--stub-m", c.city.stub_m, "dead-end stub past the outer crossings, meters")
      ->capture_default_str()
      ->group("Synth");
  app.add_option("--oneway-fraction", c.city.oneway_fraction, "share of one-way ways")->capture_default_str()->group("Synth");
  app.add_option("--bike-fraction", c.city.bike_fraction, "share of ways with a bike lane")->capture_default_str()->group("Synth");
  app.add_option("--split-fraction", c.city.split_fraction, "share of street edges split mid-block")
      ->capture_default_str()
      ->group("Synth");
  app.add_option("--footway-fraction", c.city.footway_fraction, "share of blocks with a footway")
      ->capture_default_str()
      ->group("Synth");
  app.add_flag("--diagonal", c.city.diagonal, "add a diagonal avenue (needs rows == cols)")->group("Synth");
  app.add_option("--city-seed", c.city.seed, "city generator seed")->capture_default_str()->group("Synth");
  app.add_option("--pano-spacing-m", c.panos.spacing_m, "distance between panoramas")->capture_default_str()->group("Synth");
  app.add_option("--end-margin-m", c.panos.end_margin_m, "gap kept at both ends of every edge")
      ->capture_default_str()
      ->group("Synth");
  app.add_option("--lateral-offset-m", c.panos.lateral_offset_m, "offset right of travel")
      ->capture_default_str()
      ->group("Synth");
  app.add_option("--noise-m", c.panos.noise_m, "uniform position noise per axis")->capture_default_str()->group("Synth");
  app.add_option("--azimuth-noise-deg", c.panos.azimuth_noise_deg, "uniform azimuth noise")
      ->capture_default_str()
      ->group("Synth");
  app.add_option("--plaza-fraction", c.panos.plaza_fraction, "share of blocks with an off-road panorama")
      ->capture_default_str()
      ->group("Synth");
  app.add_option("--pano-seed", c.panos.seed, "panorama generator seed")->capture_default_str()->group("Synth");
  app.add_flag("--no-images", a.no_images, "synth: skip rendering panorama PNGs")->group("Synth");
}

// Folds the string-typed options into the config.
void finish(Args& a, const CLI::App& app) {
  auto& c = a.cfg;
  c.junction_mode = sl::osm::parse_junction_mode(a.junction_mode);
  c.label.handedness = sl::parse_handedness(a.handedness);
  if (!a.tasks.empty()) {
    c.label.tasks.clear();
    for (const auto& t : a.tasks) c.label.tasks.insert(sl::parse_task(t));
  }
  if (!a.bbox.empty()) c.bounds = sl::pano::GeoBounds{a.bbox[0], a.bbox[1], a.bbox[2], a.bbox[3]};
  if (!a.seed_pano.empty()) c.seed_pano = a.seed_pano;
  if (app.count("--seed") > 0) c.seed = a.seed;
  c.render_images = !a.no_images;
}

void print(const pl::Summary& s, std::optional<double> ms = std::nullopt) {
  std::string line = s.to_json();
  if (ms) {
    line.pop_back();
    line += fmt::format(",\"elapsed_ms\":{:.1f}}}", *ms);
  }
  std::cout << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streetlabel: transfer road-map attributes onto street-level panoramas and build datasets"};
  app.set_config("--config", "", "TOML config file (key = value, flag names without dashes); flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  Args args;
  add_options(app, args);

  using Stage = pl::Summary (*)(const pl::PipelineConfig&);
  const std::vector<std::tuple<std::string, std::string, Stage>> stages = {
      {"ingest-osm", "parse an OSM extract, keep road ways, write <out>/network.osm", pl::ingest_osm},
      {"crawl", "breadth-first crawl of the panorama graph, write <out>/panos.jsonl", pl::crawl},
      {"match", "nearest road per panorama, drop off-road ones, write <out>/matches.jsonl", pl::match_stage},
      {"label", "derive labels for all tasks, write <out>/labels.jsonl", pl::label},
      {"crop", "render perspective crops to <out>/crops/", pl::crop},
      {"split", "westmost train / eastmost test split, write <out>/split.jsonl", pl::split},
      {"balance", "duplicate minority classes per task and split, write <out>/manifest.jsonl", pl::balance},
      {"stats", "per-task counts of a manifest", pl::stats},
      {"eval", "accuracy / MAE of predictions against a manifest", pl::eval},
      {"recommend", "speed-limit and two-way marking review candidates", pl::recommend},
      {"synth", "generate a synthetic city, panoramas, images and truth.json", pl::synth},
      {"run-all", "ingest-osm, crawl, match, label, crop, split, balance, stats", nullptr},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help, fn] : stages) subs[name] = app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(sl::ExitCode::kValidation);
  }

  try {
    finish(args, app);
    for (const auto& [name, help, fn] : stages) {
      if (!subs.at(name)->parsed()) continue;
      const auto t0 = std::chrono::steady_clock::now();
      auto elapsed = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      };
      if (fn != nullptr) {
        const pl::Summary s = fn(args.cfg);
        print(s, elapsed());
      } else {
        std::vector<pl::Summary> log;
        pl::Summary total("run-all");
        try {
          total = pl::run_all(args.cfg, &log);
        } catch (...) {
          for (const auto& s : log) print(s);
          throw;
        }
        for (const auto& s : log) print(s);
        print(total, elapsed());
      }
    }
  } catch (const sl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(sl::ExitCode::kDataError);
  }
  return 0;
}
