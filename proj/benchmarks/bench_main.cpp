#include <benchmark/benchmark.h>

#include "streetlabel/osm.hpp"
#include "streetlabel/roadmatch.hpp"
#include "streetlabel/rng.hpp"
#include "streetlabel/synthkit.hpp"
#include "streetlabel/unwarp.hpp"

namespace sl = streetlabel;

namespace {

sl::synth::City city(std::size_t n) {
  sl::synth::CityParams p;
  p.rows = n;
  p.cols = n;
  return sl::synth::gen_city(p);
}

void BM_ParseOsm(benchmark::State& state) {
  const auto c = city(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sl::osm::parse_osm(c.osm_xml));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * c.osm_xml.size()));
}
BENCHMARK(BM_ParseOsm)->Arg(10)->Arg(40);

void BM_IndexBuild(benchmark::State& state) {
  const auto c = city(static_cast<std::size_t>(state.range(0)));
  const auto net = sl::osm::filter_roads(sl::osm::parse_osm(c.osm_xml).network, sl::osm::default_highway_allowlist());
  const sl::osm::ProjectedNetwork pn(net, sl::geo::Projector(c.truth.origin));
  for (auto _ : state) benchmark::DoNotOptimize(sl::match::SpatialIndex::build(pn));
}
BENCHMARK(BM_IndexBuild)->Arg(40)->Arg(150);

void BM_NearestWay(benchmark::State& state) {
  const auto c = city(100);
  const auto net = sl::osm::filter_roads(sl::osm::parse_osm(c.osm_xml).network, sl::osm::default_highway_allowlist());
  const sl::osm::ProjectedNetwork pn(net, sl::geo::Projector(c.truth.origin));
  const auto index = sl::match::SpatialIndex::build(pn, static_cast<double>(state.range(0)));
  sl::Rng rng(3);
  std::vector<sl::pano::PanoMeta> qs(1024);
  for (auto& q : qs) {
    q.pano_id = "q";
    q.loc = pn.projector().unproject({rng.uniform(-5000, 5000), rng.uniform(-5000, 5000)});
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sl::match::nearest_way(index, pn, qs[i++ & 1023]));
}
BENCHMARK(BM_NearestWay)->Arg(25)->Arg(50)->Arg(200);

void BM_Unwarp(benchmark::State& state) {
  sl::Image pano(sl::pano::kPanoWidth, sl::pano::kPanoHeight);
  sl::pano::PanoMeta meta;
  meta.pano_id = "p";
  sl::CropSpec crop;
  crop.pano_id = "p";
  crop.heading_deg = 33.0;
  for (auto _ : state) benchmark::DoNotOptimize(sl::unwarp::unwarp(pano, meta, crop));
}
BENCHMARK(BM_Unwarp);

}  // namespace
BENCHMARK_MAIN();
