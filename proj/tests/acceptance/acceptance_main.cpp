// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "streetlabel/evalkit.hpp"
#include "streetlabel/labelgen.hpp"
#include "streetlabel/manifest.hpp"
#include "streetlabel/pipeline.hpp"
#include "streetlabel/rng.hpp"
#include "streetlabel/roadmatch.hpp"
#include "streetlabel/synthkit.hpp"
#include "streetlabel/unwarp.hpp"

namespace sl = streetlabel;
namespace osm = streetlabel::osm;
namespace match = streetlabel::match;
namespace lg = streetlabel::labelgen;
namespace pl = streetlabel::pipeline;
namespace fs = std::filesystem;
using sl::geo::PlanePoint;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Outcome matcher_exactness() {
  Outcome o;
  sl::synth::CityParams p;
  p.rows = 150;
  p.cols = 150;
  p.footway_fraction = 0.0;
  p.seed = 42;
  const auto city = sl::synth::gen_city(p);
  const auto net = osm::filter_roads(osm::parse_osm(city.osm_xml).network, osm::default_highway_allowlist());
  const osm::ProjectedNetwork pn(net, sl::geo::Projector(city.truth.origin));
  const std::size_t segments = net.segment_count();
  o.check(segments >= 50000, fmt::format("only {} segments", segments));

  // Query points: half uniform over the city, half within 15 m of a random node.
  sl::Rng rng(7);
  const double half = 0.5 * static_cast<double>(p.cols + 1) * p.block_m;
  std::vector<sl::pano::PanoMeta> queries;
  std::vector<osm::NodeId> node_ids;
  for (const auto& [id, n] : net.nodes()) node_ids.push_back(id);
  for (int i = 0; i < 10000; ++i) {
    PlanePoint q{rng.uniform(-half, half), rng.uniform(-half, half)};
    if (i % 2) {
      const auto& c = pn.xy(node_ids[rng.below(node_ids.size())]);
      q = {c.x_m + rng.uniform(-15, 15), c.y_m + rng.uniform(-15, 15)};
    }
    sl::pano::PanoMeta m;
    m.pano_id = fmt::format("q{}", i);
    m.loc = pn.projector().unproject(q);
    queries.push_back(std::move(m));
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto index = match::SpatialIndex::build(pn);
  std::vector<match::MatchResult> got;
  got.reserve(queries.size());
  for (const auto& q : queries) got.push_back(match::nearest_way(index, pn, q));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::size_t agree = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const auto b = oracle::brute_nearest(pn, got[i].position.x_m, got[i].position.y_m);
    const bool same = b.way == got[i].way_id && b.segment == got[i].segment_index &&
                      std::abs(b.dist - got[i].distance_m) < 1e-9;
    agree += same;
    o.check(same, fmt::format("query {} differs from brute force", i));
  }
  o.check(secs < 10.0, fmt::format("index build + queries took {:.2f} s", secs));
  if (o.pass) o.detail = fmt::format("{} segments, {}/{} queries exact, {:.2f} s", segments, agree, got.size(), secs);
  return o;
}

// ---------------------------------------------------------------------------

// Plus-shaped crossing near the origin of a projector centred on (0, 0). Arms
// are 300 m; way 1 runs west to east, way 2 south to north. The crossing node
// may be nudged north by a sub-femtometre amount so a pano can sit an exact
// distance from it.
struct BoundaryFixture {
  sl::geo::Projector proj{{0.0, 0.0}};
  osm::RoadNetwork net;
  std::unique_ptr<osm::ProjectedNetwork> pn;
  std::unique_ptr<match::SpatialIndex> index;
  std::unique_ptr<lg::JunctionLocator> junctions;

  explicit BoundaryFixture(double junction_lat = 0.0) {
    std::map<osm::NodeId, osm::OsmNode> nodes;
    auto add = [&](osm::NodeId id, double lat, double lon) { nodes[id] = {id, {lat, lon}}; };
    const double d = 300.0 / (sl::geo::kEarthRadiusM * sl::geo::kDegToRad);
    add(1, 0, -d);
    add(5, junction_lat, 0);
    add(2, 0, d);
    add(3, -d, 0);
    add(4, d, 0);
    std::map<osm::WayId, osm::OsmWay> ways;
    ways[1] = {1, {1, 5, 2}, {{"highway", "residential"}}};
    ways[2] = {2, {3, 5, 4}, {{"highway", "residential"}}};
    net = osm::RoadNetwork::build(std::move(nodes), std::move(ways));
    pn = std::make_unique<osm::ProjectedNetwork>(net, proj);
    index = std::make_unique<match::SpatialIndex>(match::SpatialIndex::build(*pn));
    junctions = std::make_unique<lg::JunctionLocator>(osm::find_junctions(*pn), proj);
  }

  // Latitude whose projection is exactly `y` meters (lon 0 keeps x at 0).
  double exact_lat(double y) const {
    double lat = proj.unproject({0.0, y}).lat_deg;
    for (int k = 0; k < 200 && proj.project({lat, 0.0}).y_m != y; ++k) {
      lat = std::nextafter(lat, proj.project({lat, 0.0}).y_m < y ? 90.0 : -90.0);
    }
    return lat;
  }
  double exact_lon(double x) const {
    double lon = proj.unproject({x, 0.0}).lon_deg;
    for (int k = 0; k < 200 && proj.project({0.0, lon}).x_m != x; ++k) {
      lon = std::nextafter(lon, proj.project({0.0, lon}).x_m < x ? 180.0 : -180.0);
    }
    return lon;
  }

  // Pano latitude and crossing latitude whose projections differ by exactly `dy`.
  static std::pair<double, double> exact_gap(double dy) {
    const BoundaryFixture plain;
    const double lat = plain.exact_lat(dy);
    const double y = plain.proj.project({lat, 0.0}).y_m;
    const double jy = y - dy;
    return {lat, jy == 0.0 ? 0.0 : plain.exact_lat(jy)};
  }

  std::pair<sl::pano::PanoMeta, match::MatchResult> pano(double lat, double lon, double az) const {
    sl::pano::PanoMeta meta;
    meta.pano_id = fmt::format("b{}_{}", lat, lon);
    meta.loc = {lat, lon};
    meta.azimuth_deg = az;
    auto m = match::nearest_way(*index, *pn, meta);
    match::forward_heading(m, *pn, meta);
    return {meta, m};
  }

  lg::LabelContext ctx() const { return lg::LabelContext{*pn, *junctions, {}, {}, 1}; }
};

Outcome threshold_fidelity() {
  Outcome o;
  const BoundaryFixture f;
  const auto ctx = f.ctx();
  const sl::ThresholdConfig& cfg = ctx.cfg;
  int cases = 0;

  {  // 10.5 m from the road is kept; one ulp farther is rejected.
    const auto [meta, m] = f.pano(f.exact_lat(10.5), f.exact_lon(150.0), 90.0);
    o.check(m.distance_m == 10.5, fmt::format("offroad fixture at {:.17g} m", m.distance_m));
    auto far = m;
    far.distance_m = std::nextafter(10.5, 11.0);
    const auto r = match::filter_offroad({m, far}, cfg);
    o.check(r.kept.size() == 1 && r.kept[0].distance_m == 10.5 && r.rejected.size() == 1, "10.5 m not inclusive");
    o.check(!lg::label_pano(meta, m, ctx).empty(), "pano at 10.5 m got no samples");
    ++cases;
  }
  {  // 30 m from the junction is positive, with distance label 30.
    const auto [lat, jlat] = BoundaryFixture::exact_gap(-30.0);
    const BoundaryFixture g(jlat);
    const auto gctx = g.ctx();
    const auto [meta, m] = g.pano(lat, 0.0, 0.0);
    const auto j = g.junctions->nearest(m.position);
    o.check(j && j->distance_m == 30.0, fmt::format("positive fixture at {:.17g} m, pano y {:.17g}", j ? j->distance_m : -1.0, m.position.y_m));
    const auto s = lg::label_intersection(meta, m, gctx);
    o.check(s && s->label.flag(), "30 m not positive");
    const auto d = lg::label_intersection_distance(meta, m, gctx);
    o.check(d && d->label.real() == 30.0, "30 m distance label missing");
    o.check(lg::classify_intersection(std::nextafter(30.0, 31.0), cfg) == lg::IntersectionClass::kAmbiguous,
            "just above 30 m not ambiguous");
    ++cases;
  }
  {  // 100 m from the junction is negative.
    const auto [lat, jlat] = BoundaryFixture::exact_gap(-100.0);
    const BoundaryFixture g(jlat);
    const auto [meta, m] = g.pano(lat, 0.0, 0.0);
    const auto j = g.junctions->nearest(m.position);
    o.check(j && j->distance_m == 100.0, "negative fixture not at 100 m");
    const auto s = lg::label_intersection(meta, m, g.ctx());
    o.check(s && !s->label.flag(), "100 m not negative");
    o.check(lg::classify_intersection(std::nextafter(100.0, 0.0), cfg) == lg::IntersectionClass::kAmbiguous,
            "just below 100 m not ambiguous");
    ++cases;
  }
  const auto [meta, m] = f.pano(f.exact_lat(-3.0), f.exact_lon(150.0), 90.0);
  const double fwd = m.forward_heading_deg;
  {  // Crop exactly 22.5 degrees off a road heading is driveable.
    const auto road = lg::true_road_headings(m, ctx);
    o.check(lg::is_driveable(fwd + 22.5, road, cfg.driveable_tol_deg), "22.5 deg not driveable");
    o.check(lg::is_driveable(fwd - 22.5, road, cfg.driveable_tol_deg), "-22.5 deg not driveable");
    o.check(!lg::is_driveable(fwd + 22.5 + 1e-9, road, cfg.driveable_tol_deg), "past 22.5 deg driveable");
    ++cases;
  }
  {  // Exactly 22.5 degrees off the backward heading is wrong way; off forward, right way.
    o.check(lg::classify_wrong_way(fwd + 180.0 + 22.5, fwd, cfg.wrongway_tol_deg) == true, "wrong-way band edge");
    o.check(lg::classify_wrong_way(fwd - 22.5, fwd, cfg.wrongway_tol_deg) == false, "right-way band edge");
    o.check(!lg::classify_wrong_way(fwd + 22.5 + 1e-9, fwd, cfg.wrongway_tol_deg).has_value(), "outside band");
    ++cases;
  }
  {  // Heading offset of exactly 60 degrees is emitted with label 60.
    const auto s = lg::heading_angle_sample(meta, m, ctx, 60.0);
    o.check(s && s->label.real() == 60.0 && oracle::ang_gap(s->crop.heading_deg, fwd + 60.0) < 1e-6, "60 deg");
    const auto n = lg::heading_angle_sample(meta, m, ctx, -60.0);
    o.check(n && n->label.real() == -60.0, "-60 deg");
    // Offsets are kept to 6 decimals, so the first rejected value is one quantum up.
    o.check(!lg::heading_angle_sample(meta, m, ctx, 60.000001), "past 60 deg emitted");
    ++cases;
  }
  if (o.pass) o.detail = fmt::format("{} boundary cases exact", cases);
  return o;
}

// ---------------------------------------------------------------------------

Outcome end_to_end(const fs::path& work) {
  Outcome o;
  pl::PipelineConfig gen;
  gen.out_dir = work / "e2e_fixture";
  gen.city.rows = 5;
  gen.city.cols = 5;
  gen.city.diagonal = true;
  gen.render_images = false;
  pl::synth(gen);
  const std::string truth_text = slurp(gen.out_dir / "truth.json");
  sl::synth::CityTruth city;
  sl::synth::PanoSet panos;
  sl::synth::truth_from_json(truth_text, city, panos);
  std::set<osm::TravelDirections> dirs;
  std::size_t bikes = 0, speeds = 0, lanes = 0;
  for (const auto& [id, w] : city.ways) {
    if (!w.road) continue;
    dirs.insert(w.directions);
    bikes += w.bike == sl::synth::BikeTruth::kPositive;
    speeds += w.speed_mph.has_value();
    lanes += w.lanes.has_value();
  }
  o.check(dirs.size() >= 2 && bikes > 0 && speeds > 0 && lanes > 0, "fixture lacks attribute variety");

  pl::PipelineConfig run;
  run.osm_path = gen.out_dir / "city.osm";
  run.panos_path = gen.out_dir / "panos";
  run.truth_path = gen.out_dir / "truth.json";
  run.out_dir = work / "e2e_out";
  run.seed = 2024;
  run.skip_crop = true;
  try {
    const auto total = pl::run_all(run);
    const auto labels = sl::dataset::read_manifest(run.labels_path());
    std::set<sl::Task> tasks;
    for (const auto& s : labels.samples) tasks.insert(s.task());
    o.check(tasks.size() == 9, fmt::format("only {} tasks emitted", tasks.size()));
    if (o.pass) {
      o.detail = fmt::format("{} panos, {} labels checked across {} tasks, mismatches {}", *total.get("panos"),
                             *total.get("truth_checked"), tasks.size(), *total.get("truth_mismatches"));
    }
  } catch (const std::exception& e) {
    o.check(false, e.what());
  }
  return o;
}

// ---------------------------------------------------------------------------

Outcome projection() {
  Outcome o;
  sl::CropSpec c;
  c.pano_id = "p";
  for (double heading : {0.0, 45.0, 181.25, 359.5}) {
    c.heading_deg = heading;
    const auto centre = sl::unwarp::ray_angles(c, c.width_px / 2.0, c.height_px / 2.0);
    o.check(oracle::ang_gap(centre.azimuth_deg, heading) <= 1e-6 && std::abs(centre.elevation_deg) <= 1e-6,
            fmt::format("centre ray at heading {}", heading));
    const auto left = sl::unwarp::ray_angles(c, 0.0, c.height_px / 2.0);
    const auto right = sl::unwarp::ray_angles(c, c.width_px, c.height_px / 2.0);
    o.check(std::abs(sl::geo::angdiff(left.azimuth_deg, heading) + 50.0) <= 1e-6, "left edge not -50");
    o.check(std::abs(sl::geo::angdiff(right.azimuth_deg, heading) - 50.0) <= 1e-6, "right edge not +50");
    // Sampling map centre pixel for a crop facing the pano azimuth.
    const auto map = sl::unwarp::sampling_map(c, 832, 416, heading);
    o.check(std::abs(map.at(113, 113).col - 416.0) <= 1e-6 && std::abs(map.at(113, 113).row - 208.0) <= 1e-6,
            "centre pixel not at pano centre");
  }

  // Stripe localisation on rendered panoramas.
  double worst = 0.0;
  for (double pano_az : {0.0, 97.0, 270.0}) {
    for (double a : {3.0, 120.0, 179.5, 358.0}) {
      sl::synth::PanoTruth t;
      t.pano_id = "p";
      t.offroad = true;
      t.junction = 1;
      t.junction_bearing_deg = a;
      sl::pano::PanoMeta meta;
      meta.pano_id = "p";
      meta.azimuth_deg = pano_az;
      const auto img = sl::synth::render_pano(meta, t, {});
      c.heading_deg = a;
      const auto crop = sl::unwarp::unwarp(img, meta, c);
      double sum = 0;
      int n = 0;
      for (std::size_t u = 0; u < crop.width(); ++u) {
        const auto px = crop.at(u, crop.height() / 2);
        if (px[0] > 170 && px[1] < 90 && px[2] < 90) {
          sum += u + 0.5;
          ++n;
        }
      }
      o.check(n > 0, "stripe missing");
      if (n > 0) worst = std::max(worst, std::abs(sum / n - crop.width() / 2.0));
    }
  }
  o.check(worst <= 1.0, fmt::format("stripe {:.3f} px from centre", worst));

  // Seam continuity: smooth panorama, crop straddling the 0/360 seam.
  sl::Image pano(832, 416);
  for (std::size_t x = 0; x < 832; ++x) {
    const double a = 2 * oracle::kPi * (x + 0.5) / 832.0;
    const auto r = static_cast<std::uint8_t>(std::lround(127.5 + 127.5 * std::cos(a)));
    const auto g = static_cast<std::uint8_t>(std::lround(127.5 + 127.5 * std::sin(a)));
    for (std::size_t y = 0; y < 416; ++y) pano.set(x, y, {r, g, 64});
  }
  sl::pano::PanoMeta meta;
  meta.pano_id = "p";
  meta.azimuth_deg = 10.0;
  c.heading_deg = 190.0;
  const auto crop = sl::unwarp::unwarp(pano, meta, c);
  int jump = 0;
  for (std::size_t v = 0; v < crop.height(); ++v) {
    for (std::size_t u = 1; u < crop.width(); ++u) {
      for (int ch = 0; ch < 3; ++ch) jump = std::max(jump, std::abs(int(crop.at(u, v)[ch]) - int(crop.at(u - 1, v)[ch])));
    }
  }
  o.check(jump <= 3, fmt::format("seam step {}", jump));
  if (o.pass) o.detail = fmt::format("centre/edges within 1e-6 deg, stripe offset {:.3f} px, max seam step {}", worst, jump);
  return o;
}

// ---------------------------------------------------------------------------

Outcome split_and_balance(const fs::path& work) {
  Outcome o;
  pl::PipelineConfig gen;
  gen.out_dir = work / "split_fixture";
  gen.city.rows = 3;
  gen.city.cols = 4;
  gen.city.block_m = 260.0;
  gen.city.bike_fraction = 0.5;
  gen.city.seed = 2;
  gen.render_images = false;
  pl::synth(gen);

  std::map<std::size_t, std::pair<std::string, std::string>> bytes;
  for (std::size_t workers : {1, 8}) {
    pl::PipelineConfig run;
    run.osm_path = gen.out_dir / "city.osm";
    run.panos_path = gen.out_dir / "panos";
    run.out_dir = work / fmt::format("split_w{}", workers);
    run.seed = 77;
    run.workers = workers;
    run.skip_crop = true;
    pl::run_all(run);
    bytes[workers] = {slurp(run.split_path()), slurp(run.final_manifest_path())};
  }
  o.check(bytes[1].first == bytes[8].first, "split.jsonl differs between 1 and 8 workers");
  o.check(bytes[1].second == bytes[8].second, "manifest.jsonl differs between 1 and 8 workers");

  // Independent check of the 80/20 rule on the split output.
  const auto split = sl::dataset::parse_manifest(bytes[1].first);
  const auto panos = sl::pano::load_pano_file(gen.out_dir / "panos" / "panos.jsonl");
  std::map<std::string, double> lon;
  for (const auto& p : panos) lon[p.pano_id] = p.loc.lon_deg;
  std::map<std::string, sl::Split> pano_split;
  for (const auto& s : split.samples) {
    auto [it, fresh] = pano_split.emplace(s.pano_id(), s.split);
    o.check(it->second == s.split, "pano in both splits");
  }
  std::vector<double> lons;
  for (const auto& [id, sp] : pano_split) lons.push_back(lon.at(id));
  std::sort(lons.begin(), lons.end());
  const auto k = static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(lons.size())));
  const double boundary = lons[k - 1];
  std::size_t train = 0;
  for (const auto& [id, sp] : pano_split) {
    const bool west = lon.at(id) <= boundary;
    train += west;
    o.check(sp == (west ? sl::Split::kTrain : sl::Split::kTest), "pano on wrong side of boundary");
  }
  const std::size_t ties = std::count(lons.begin(), lons.end(), boundary);
  o.check(train >= k && train <= k + ties - 1, "train count outside tie bound");

  // Exact balance per categorical task and split.
  const auto final = sl::dataset::parse_manifest(bytes[1].second);
  std::map<std::tuple<sl::Task, sl::Split, bool>, std::size_t> counts;
  for (const auto& s : final.samples) {
    if (sl::is_categorical(s.task())) ++counts[{s.task(), s.split, s.label.flag()}];
  }
  std::size_t balanced = 0;
  for (sl::Task t : sl::kAllTasks) {
    if (!sl::is_categorical(t)) continue;
    for (auto sp : {sl::Split::kTrain, sl::Split::kTest}) {
      const auto pos = counts[{t, sp, true}];
      const auto neg = counts[{t, sp, false}];
      o.check(pos > 0, fmt::format("{} {} has no positives", sl::to_string(t), sl::to_string(sp)));
      o.check(pos == neg, fmt::format("{} {} unbalanced {}/{}", sl::to_string(t), sl::to_string(sp), pos, neg));
      balanced += pos == neg;
    }
  }
  if (o.pass) {
    o.detail = fmt::format("{} labeled panos, {} train / {} test (boundary ties {}), {} task-splits balanced, "
                           "bytes identical for 1 and 8 workers",
                           lons.size(), train, lons.size() - train, ties, balanced);
  }
  return o;
}

// ---------------------------------------------------------------------------

Outcome metrics_oracle() {
  Outcome o;
  namespace ev = sl::eval;
  sl::dataset::Manifest m;
  auto add = [&](const std::string& id, sl::AttributeLabel l) {
    sl::LabeledSample s;
    s.sample_id = id;
    s.crop.pano_id = "p" + id;
    s.label = l;
    s.split = sl::Split::kTest;
    m.samples.push_back(s);
  };
  const bool ow[] = {true, false, true, true, false};
  const double prob[] = {0.9, 0.2, 0.4, 0.5, 0.5};
  const double sp[] = {25, 30, 35, 40, 45};
  const double pred[] = {27, 30, 31, 44.5, 45.25};
  std::vector<ev::PredictionRecord> preds;
  for (int i = 0; i < 5; ++i) {
    add(fmt::format("o{}", i), sl::AttributeLabel::binary(sl::Task::kOneWay, ow[i]));
    add(fmt::format("s{}", i), sl::AttributeLabel::real(sl::Task::kSpeedLimit, sp[i]));
    preds.push_back({fmt::format("o{}", i), sl::Task::kOneWay, prob[i]});
    preds.push_back({fmt::format("s{}", i), sl::Task::kSpeedLimit, pred[i]});
  }
  // By hand: classes 1,0,0,1,1 vs 1,0,1,1,0 -> 3 of 5 correct; errors 2,0,4,4.5,0.25.
  const double acc = ev::accuracy(preds, m, sl::Task::kOneWay);
  const double mae = ev::mae(preds, m, sl::Task::kSpeedLimit);
  o.check(std::abs(acc - 60.0) <= 1e-12, fmt::format("accuracy {}", acc));
  o.check(std::abs(mae - 2.15) <= 1e-12, fmt::format("mae {}", mae));

  // Predictions = label + known noise.
  sl::dataset::Manifest hm;
  std::vector<ev::PredictionRecord> noisy;
  sl::Rng rng(99);
  double injected = 0.0;
  for (int i = 0; i < 1000; ++i) {
    sl::LabeledSample s;
    s.sample_id = fmt::format("h{:04d}", i);
    s.crop.pano_id = s.sample_id;
    s.label = sl::AttributeLabel::real(sl::Task::kHeadingAngle, sl::quantize6(rng.uniform(-60, 60)));
    hm.samples.push_back(s);
    const double noise = rng.uniform(-8, 8);
    injected += std::abs((s.label.real() + noise) - s.label.real());
    noisy.push_back({s.sample_id, sl::Task::kHeadingAngle, s.label.real() + noise});
  }
  injected /= 1000.0;
  const double got = ev::mae(noisy, hm, sl::Task::kHeadingAngle);
  o.check(std::abs(got - injected) <= 1e-12, fmt::format("noise mae {} vs {}", got, injected));
  if (o.pass) o.detail = fmt::format("accuracy {} %, MAE {}, injected-noise MAE {:.12f} reproduced", acc, mae, got);
  return o;
}

// ---------------------------------------------------------------------------

Outcome recommendation() {
  Outcome o;
  sl::dataset::Manifest m;
  sl::LabeledSample s;
  s.sample_id = "fig7";
  s.crop.pano_id = "p";
  s.label = sl::AttributeLabel::real(sl::Task::kSpeedLimit, 50.0);
  s.way_id = 31;
  s.split = sl::Split::kTest;
  m.samples.push_back(s);
  const auto recs = sl::eval::recommend({{"fig7", sl::Task::kSpeedLimit, 30.0}}, m);
  o.check(recs.size() == 1, fmt::format("{} recommendations", recs.size()));
  if (!recs.empty()) {
    o.check(recs[0].kind == sl::eval::RecommendationKind::kSpeedLimitReview, "wrong kind");
    o.check(recs[0].severity == 20.0, fmt::format("severity {}", recs[0].severity));
    o.check(recs[0].way_id == 31, "wrong way id");
  }
  if (o.pass) o.detail = "speed_limit_review, ground truth 50, model 30, severity 20";
  return o;
}

// ---------------------------------------------------------------------------

Outcome geo_kernel() {
  Outcome o;
  sl::Rng rng(2718);
  double worst = 0.0;
  double worst_anchored = 0.0;
  int pairs = 0;
  while (pairs < 1000) {
    const sl::geo::GeoPoint ref{rng.uniform(-60, 60), rng.uniform(-180, 179.999)};
    const sl::geo::Projector proj(ref);
    auto draw = [&] {
      const double r = 30000.0 * std::sqrt(rng.uniform01());
      const double th = rng.uniform(0, 2 * oracle::kPi);
      return proj.unproject({r * std::cos(th), r * std::sin(th)});
    };
    const auto a = draw();
    const auto b = draw();
    const double truth = oracle::haversine(a.lat_deg, a.lon_deg, b.lat_deg, b.lon_deg);
    if (truth < 1.0 || std::abs(a.lat_deg) > 60.0 || std::abs(b.lat_deg) > 60.0) continue;
    const double planar = sl::geo::distance(proj.project(a), proj.project(b));
    worst = std::max(worst, std::abs(planar - truth) / truth);
    // Same pair with the reference moved onto its first point.
    const sl::geo::Projector at_a(a);
    const double anchored = sl::geo::distance(at_a.project(a), at_a.project(b));
    worst_anchored = std::max(worst_anchored, std::abs(anchored - truth) / truth);
    ++pairs;
  }
  o.check(worst < 0.002, fmt::format("worst relative error {:.4f} % with both points within 30 km of the "
                                     "reference (reference on one point: {:.4f} %)",
                                     100.0 * worst, 100.0 * worst_anchored));
  if (o.pass) o.detail = fmt::format("{} pairs, worst relative error {:.6f} %", pairs, 100.0 * worst);
  return o;
}

}  // namespace

int main() {
  const fs::path work = oracle::temp_dir("acceptance");
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"matcher exactness", matcher_exactness},
      {"threshold fidelity", threshold_fidelity},
      {"end-to-end ground truth", [&] { return end_to_end(work); }},
      {"projection correctness", projection},
      {"split and balance", [&] { return split_and_balance(work); }},
      {"metrics oracle", metrics_oracle},
      {"speed-limit recommendation", recommendation},
      {"geo kernel vs haversine", geo_kernel},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
