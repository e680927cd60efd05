#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

#include "oracles.hpp"
#include "streetlabel/error.hpp"
#include "streetlabel/panograph.hpp"
#include "streetlabel/synthkit.hpp"

namespace sl = streetlabel;
namespace pano = streetlabel::pano;

namespace {

pano::PanoMeta meta(const std::string& id, std::vector<std::string> nbrs, double lat = 1.0, double lon = 1.0) {
  pano::PanoMeta m;
  m.pano_id = id;
  m.loc = {lat, lon};
  m.azimuth_deg = 45.0;
  m.neighbors = std::move(nbrs);
  return m;
}

std::vector<std::string> ids(const pano::CrawlResult& r) {
  std::vector<std::string> out;
  for (const auto& p : r.panos) out.push_back(p.pano_id);
  return out;
}

// Hop distance from the seed by a separate BFS over the fixture list.
std::map<std::string, int> hops(const std::vector<pano::PanoMeta>& all, const std::string& seed) {
  std::map<std::string, const pano::PanoMeta*> by_id;
  for (const auto& p : all) by_id[p.pano_id] = &p;
  std::map<std::string, int> d{{seed, 0}};
  std::vector<std::string> frontier{seed};
  while (!frontier.empty()) {
    std::vector<std::string> next;
    for (const auto& id : frontier) {
      for (const auto& n : by_id.at(id)->neighbors) {
        if (by_id.count(n) && !d.count(n)) {
          d[n] = d[id] + 1;
          next.push_back(n);
        }
      }
    }
    frontier = std::move(next);
  }
  return d;
}

}  // namespace

TEST(Crawl, StarGraph) {
  pano::MemoryProvider prov({meta("s", {"a", "b", "c"}), meta("a", {"s"}), meta("b", {"s"}), meta("c", {"s"})});
  const auto r = pano::bfs_crawl(prov, "s", std::nullopt, 10);
  EXPECT_EQ(ids(r), (std::vector<std::string>{"s", "a", "b", "c"}));
}

TEST(Crawl, LimitCutsChain) {
  pano::MemoryProvider prov({meta("A", {"B"}), meta("B", {"A", "C"}), meta("C", {"B"})});
  EXPECT_EQ(ids(pano::bfs_crawl(prov, "A", std::nullopt, 2)), (std::vector<std::string>{"A", "B"}));
}

TEST(Crawl, MissingSeedAndNeighbors) {
  pano::MemoryProvider prov({meta("A", {"B", "ghost"}), meta("B", {"A"})});
  EXPECT_THROW(pano::bfs_crawl(prov, "nope", std::nullopt, 10), sl::MissingInputError);
  const auto r = pano::bfs_crawl(prov, "A", std::nullopt, 10);
  EXPECT_EQ(r.panos.size(), 2u);
  EXPECT_EQ(r.missing_neighbors, 1u);
}

TEST(Crawl, BoundsBlockExpansion) {
  // B lies outside the box, so C (reachable only through B) is never seen.
  pano::MemoryProvider prov({meta("A", {"B"}, 1, 1), meta("B", {"A", "C"}, 5, 5), meta("C", {"B"}, 1, 1)});
  const pano::GeoBounds box{0, 0, 2, 2};
  const auto r = pano::bfs_crawl(prov, "A", box, 10);
  EXPECT_EQ(ids(r), (std::vector<std::string>{"A"}));
  EXPECT_EQ(r.outside_bounds, 1u);
}

TEST(Crawl, SynthCityRecoversPanoSet) {
  sl::synth::CityParams cp;
  cp.rows = 3;
  cp.cols = 3;
  const auto city = sl::synth::gen_city(cp);
  const auto set = sl::synth::gen_panos(city, {});
  pano::MemoryProvider prov(set.panos);
  std::string seed = set.panos.front().pano_id;
  for (const auto& p : set.panos) seed = std::min(seed, p.pano_id);

  const auto r1 = pano::bfs_crawl(prov, seed, std::nullopt, 1000000, 1);
  const auto r4 = pano::bfs_crawl(prov, seed, std::nullopt, 1000000, 4);
  EXPECT_EQ(ids(r1), ids(r4));

  std::set<std::string> want;
  for (const auto& p : set.panos) want.insert(p.pano_id);
  const auto got_v = ids(r1);
  const std::set<std::string> got(got_v.begin(), got_v.end());
  EXPECT_EQ(got.size(), got_v.size()) << "duplicates in crawl output";
  EXPECT_EQ(got, want);

  // Emitted in non-decreasing hop distance; each non-seed pano neighbors an
  // earlier one.
  const auto d = hops(set.panos, seed);
  std::set<std::string> seen;
  int last = 0;
  for (const auto& p : r1.panos) {
    EXPECT_GE(d.at(p.pano_id), last);
    last = d.at(p.pano_id);
    if (p.pano_id != seed) {
      bool linked = false;
      for (const auto& q : r1.panos) {
        if (!seen.count(q.pano_id)) continue;
        for (const auto& n : q.neighbors) linked = linked || n == p.pano_id;
      }
      EXPECT_TRUE(linked) << p.pano_id;
    }
    seen.insert(p.pano_id);
  }
}

TEST(PanoFile, RoundTripSortsById) {
  auto a = meta("zz", {"yy"}, 37.5, -122.25);
  a.capture_date = pano::YearMonth{2019, 7};
  auto b = meta("yy", {"zz", "xx"}, -33.875, 151.2);
  b.azimuth_deg = 359.5;
  auto c = meta("xx", {}, 0.125, 0.0);
  const auto dir = oracle::temp_dir("pano_file");
  pano::save_pano_file({a, b, c}, dir / "p.jsonl");
  const auto back = pano::load_pano_file(dir / "p.jsonl");
  EXPECT_EQ(back, (std::vector<pano::PanoMeta>{c, b, a}));
}

TEST(PanoFile, DuplicateIdIsError) {
  const std::string one = pano::to_pano_jsonl({meta("a", {})});
  EXPECT_THROW(pano::parse_pano_jsonl(one + one), sl::DataError);
}

TEST(PanoFile, EmptyFile) {
  const auto dir = oracle::temp_dir("pano_empty");
  std::ofstream(dir / "e.jsonl").close();
  EXPECT_TRUE(pano::load_pano_file(dir / "e.jsonl").empty());
  EXPECT_THROW(pano::load_pano_file(dir / "absent.jsonl"), sl::MissingInputError);
}

TEST(PanoFile, MalformedLineNamed) {
  const std::string text = pano::to_pano_jsonl({meta("a", {})}) + "{\"pano_id\": \"b\", \"lat\": \n";
  try {
    pano::parse_pano_jsonl(text, "x.jsonl");
    FAIL();
  } catch (const sl::RecordError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(pano::parse_pano_jsonl(R"({"pano_id":"a","lat":1,"lon":1,"azimuth_deg":400,"neighbors":[]})"),
               sl::DataError);
}

TEST(YearMonth, Parse) {
  EXPECT_EQ(pano::parse_year_month("2016-03"), (pano::YearMonth{2016, 3}));
  EXPECT_EQ(pano::to_string(pano::YearMonth{2016, 3}), "2016-03");
  EXPECT_THROW(pano::parse_year_month("2016-13"), sl::ValidationError);
  EXPECT_THROW(pano::parse_year_month("16-03"), sl::ValidationError);
}

TEST(DirectoryProvider, ReadsFixture) {
  const auto dir = oracle::temp_dir("pano_dir");
  pano::save_pano_file({meta("a", {"b"}), meta("b", {"a"})}, dir / "panos.jsonl");
  std::filesystem::create_directories(dir / "images");
  sl::Image img(8, 4, {1, 2, 3});
  sl::write_png(img, dir / "images" / "a.png");
  pano::DirectoryProvider prov(dir);
  EXPECT_TRUE(prov.fetch_meta("b").has_value());
  EXPECT_FALSE(prov.fetch_meta("c").has_value());
  ASSERT_TRUE(prov.fetch_image("a").has_value());
  EXPECT_EQ(*prov.fetch_image("a"), img);
  EXPECT_FALSE(prov.fetch_image("b").has_value());
}
