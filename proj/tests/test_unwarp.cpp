#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "streetlabel/error.hpp"
#include "streetlabel/synthkit.hpp"
#include "streetlabel/unwarp.hpp"

namespace sl = streetlabel;
namespace uw = streetlabel::unwarp;
using sl::CropSpec;

namespace {

CropSpec crop(double heading, double pitch = 0.0) {
  CropSpec c;
  c.pano_id = "p";
  c.heading_deg = heading;
  c.pitch_deg = pitch;
  return c;
}

sl::pano::PanoMeta meta(double az) {
  sl::pano::PanoMeta m;
  m.pano_id = "p";
  m.azimuth_deg = az;
  return m;
}

// Offroad truth with a junction stripe only.
sl::Image stripe_pano(double pano_az, double stripe_az) {
  sl::synth::PanoTruth t;
  t.pano_id = "p";
  t.offroad = true;
  t.junction = 1;
  t.junction_bearing_deg = stripe_az;
  return sl::synth::render_pano(meta(pano_az), t, {});
}

// Mean column of stripe-coloured pixels on the crop's middle row, in
// continuous coordinates; NaN when there are none.
double stripe_centre(const sl::Image& img) {
  const std::size_t v = img.height() / 2;
  double sum = 0;
  int n = 0;
  for (std::size_t u = 0; u < img.width(); ++u) {
    const auto px = img.at(u, v);
    if (px[0] > 170 && px[1] < 90 && px[2] < 90) {
      sum += static_cast<double>(u) + 0.5;
      ++n;
    }
  }
  return n == 0 ? NAN : sum / n;
}

}  // namespace

TEST(RayAngles, CentreAndEdges) {
  const auto c = crop(37.0);
  const auto centre = uw::ray_angles(c, 113.5, 113.5);
  EXPECT_NEAR(centre.azimuth_deg, 37.0, 1e-9);
  EXPECT_NEAR(centre.elevation_deg, 0.0, 1e-9);
  EXPECT_NEAR(uw::ray_angles(c, 0.0, 113.5).azimuth_deg, 360.0 + 37.0 - 50.0, 1e-9);
  EXPECT_NEAR(uw::ray_angles(c, 227.0, 113.5).azimuth_deg, 37.0 + 50.0, 1e-9);
  EXPECT_NEAR(uw::ray_angles(crop(10.0), 0.0, 113.5).azimuth_deg, 320.0, 1e-9);
}

TEST(RayAngles, AgreeWithRayTraceOracle) {
  for (double pitch : {0.0, 12.0, -20.0}) {
    for (double heading : {0.0, 93.5, 359.0}) {
      const auto c = crop(heading, pitch);
      for (double py : {0.0, 0.5, 57.0, 113.5, 226.5, 227.0}) {
        for (double px : {0.0, 0.5, 80.25, 113.5, 200.0, 227.0}) {
          const auto got = uw::ray_angles(c, px, py);
          const auto want = oracle::ray_trace(heading, pitch, 100.0, 227, 227, px, py);
          EXPECT_NEAR(oracle::ang_gap(got.azimuth_deg, want.az), 0.0, 1e-6) << px << "," << py;
          EXPECT_NEAR(got.elevation_deg, want.el, 1e-6) << px << "," << py;
        }
      }
    }
  }
}

TEST(SamplingMap, CentrePixelHitsPanoCentre) {
  // Odd size, so pixel 113 is centred exactly.
  const auto map = uw::sampling_map(crop(250.0), 832, 416, 250.0);
  ASSERT_EQ(map.width, 227u);
  ASSERT_EQ(map.height, 227u);
  EXPECT_NEAR(map.at(113, 113).col, 416.0, 1e-9);
  EXPECT_NEAR(map.at(113, 113).row, 208.0, 1e-9);
}

TEST(SamplingMap, AnglesInvertAndAreMonotone) {
  const double pano_az = 77.0;
  const auto c = crop(300.0, 5.0);
  const auto map = uw::sampling_map(c, 832, 416, pano_az);
  for (std::size_t v = 0; v < map.height; v += 7) {
    for (std::size_t u = 0; u < map.width; u += 7) {
      const auto pc = map.at(u, v);
      ASSERT_GE(pc.col, 0.0);
      ASSERT_LT(pc.col, 832.0);
      ASSERT_GE(pc.row, 0.0);
      ASSERT_LE(pc.row, 416.0);
      const auto back = uw::pano_angles(pc, 832, 416, pano_az);
      const auto want = oracle::ray_trace(300.0, 5.0, 100.0, 227, 227, u + 0.5, v + 0.5);
      EXPECT_NEAR(oracle::ang_gap(back.azimuth_deg, want.az), 0.0, 1e-6);
      EXPECT_NEAR(back.elevation_deg, want.el, 1e-6);
    }
  }
  double prev = -1e9;
  for (std::size_t u = 0; u < map.width; ++u) {
    const auto a = uw::pano_angles(map.at(u, map.height / 2), 832, 416, pano_az);
    double unwrapped = a.azimuth_deg;
    while (unwrapped < prev - 180) unwrapped += 360;
    EXPECT_GT(unwrapped, prev);
    prev = unwrapped;
  }
}

TEST(SamplingMap, RejectsDegenerateFov) {
  auto c = crop(0);
  c.fov_deg = 180.0;
  EXPECT_THROW(uw::sampling_map(c, 832, 416, 0), sl::ValidationError);
  c.fov_deg = 0.0;
  EXPECT_THROW(uw::sampling_map(c, 832, 416, 0), sl::ValidationError);
}

TEST(Bilinear, ConstantPanoGivesConstantCrop) {
  const sl::Image pano(832, 416, {12, 34, 56});
  const auto out = uw::unwarp(pano, meta(10), crop(190.0, 30.0));
  for (std::size_t v = 0; v < out.height(); ++v) {
    for (std::size_t u = 0; u < out.width(); ++u) ASSERT_EQ(out.at(u, v), (sl::Rgb{12, 34, 56}));
  }
}

TEST(Bilinear, IdentityMapReproducesInput) {
  sl::Image pano(40, 20);
  for (std::size_t y = 0; y < 20; ++y) {
    for (std::size_t x = 0; x < 40; ++x) {
      pano.set(x, y, {static_cast<std::uint8_t>(x * 6), static_cast<std::uint8_t>(y * 12), static_cast<std::uint8_t>((x * y) % 251)});
    }
  }
  uw::SamplingMap map{40, 20, {}};
  for (std::size_t y = 0; y < 20; ++y) {
    for (std::size_t x = 0; x < 40; ++x) map.coords.push_back({x + 0.5, y + 0.5});
  }
  EXPECT_EQ(uw::bilinear_sample(pano, map), pano);
}

TEST(Bilinear, RejectsOutOfRangeMap) {
  const sl::Image pano(4, 4);
  uw::SamplingMap map{1, 1, {{4.5, 1.0}}};
  EXPECT_THROW(uw::bilinear_sample(pano, map), sl::ValidationError);
}

TEST(Bilinear, SeamCropShowsBothHalves) {
  // Panorama facing 0: the seam (column 0 / 832) is world azimuth 180.
  // Columns left of centre are blue, right of centre red.
  sl::Image pano(832, 416);
  for (std::size_t y = 0; y < 416; ++y) {
    for (std::size_t x = 0; x < 832; ++x) pano.set(x, y, x < 416 ? sl::Rgb{0, 0, 255} : sl::Rgb{255, 0, 0});
  }
  const auto out = uw::unwarp(pano, meta(0), crop(180.0));
  for (std::size_t v = 0; v < out.height(); v += 10) {
    for (std::size_t u = 0; u < out.width(); ++u) {
      if (u <= 111) ASSERT_EQ(out.at(u, v), (sl::Rgb{255, 0, 0})) << u;
      if (u >= 115) ASSERT_EQ(out.at(u, v), (sl::Rgb{0, 0, 255})) << u;
    }
  }
}

TEST(Bilinear, SeamIsContinuous) {
  // Colour varies smoothly with azimuth and wraps cleanly at the seam.
  sl::Image pano(832, 416);
  for (std::size_t x = 0; x < 832; ++x) {
    const double a = 2 * oracle::kPi * (x + 0.5) / 832.0;
    const auto r = static_cast<std::uint8_t>(std::lround(127.5 + 127.5 * std::cos(a)));
    const auto g = static_cast<std::uint8_t>(std::lround(127.5 + 127.5 * std::sin(a)));
    for (std::size_t y = 0; y < 416; ++y) pano.set(x, y, {r, g, 0});
  }
  const auto out = uw::unwarp(pano, meta(40), crop(220.0));
  // Largest step between neighbouring source columns is about 1 level per
  // crop pixel; allow for rounding.
  for (std::size_t v = 0; v < out.height(); v += 13) {
    for (std::size_t u = 1; u < out.width(); ++u) {
      for (int ch = 0; ch < 2; ++ch) {
        EXPECT_LE(std::abs(int(out.at(u, v)[ch]) - int(out.at(u - 1, v)[ch])), 3) << u << "," << v;
      }
    }
  }
}

TEST(Unwarp, StripeLandsAtCropCentre) {
  for (double pano_az : {0.0, 123.0, 300.0}) {
    for (double a : {5.0, 90.0, 181.0, 359.0}) {
      const auto img = stripe_pano(pano_az, a);
      const auto out = uw::unwarp(img, meta(pano_az), crop(a));
      const double centre = stripe_centre(out);
      ASSERT_FALSE(std::isnan(centre)) << pano_az << "/" << a;
      EXPECT_LE(std::abs(centre - 113.5), 1.0) << pano_az << "/" << a;
      EXPECT_TRUE(std::isnan(stripe_centre(uw::unwarp(img, meta(pano_az), crop(sl::geo::wrap360(a + 180))))));
    }
  }
}

TEST(Unwarp, HeadingWrapsAt360) {
  const auto img = stripe_pano(30.0, 100.0);
  auto a = crop(95.0);
  auto b = crop(95.0 + 360.0);
  EXPECT_EQ(uw::unwarp(img, meta(30.0), a), uw::unwarp(img, meta(30.0), b));
}

TEST(Png, RoundTrip) {
  const auto dir = oracle::temp_dir("png");
  sl::Image img(17, 9);
  for (std::size_t y = 0; y < 9; ++y) {
    for (std::size_t x = 0; x < 17; ++x) img.set(x, y, {static_cast<std::uint8_t>(x * 15), static_cast<std::uint8_t>(y * 28), 7});
  }
  sl::write_png(img, dir / "a.png");
  EXPECT_EQ(sl::read_png(dir / "a.png"), img);
  EXPECT_THROW(sl::read_png(dir / "none.png"), sl::MissingInputError);
}
