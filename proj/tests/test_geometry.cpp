#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "pathtomo/error.hpp"
#include "pathtomo/geometry.hpp"
#include "pathtomo/optics.hpp"

using namespace pathtomo;

namespace {

constexpr double kPi = std::numbers::pi;

// Direction of every pair reduced to [0, 180), deduplicated at 1e-9 deg.
std::vector<double> brute_angles(const std::vector<Point>& pts) {
  std::vector<double> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double a = std::atan2(pts[j].y - pts[i].y, pts[j].x - pts[i].x) * 180 / kPi;
      a = std::fmod(a + 360.0, 180.0);
      if (a > 180.0 - 1e-9) a = 0.0;
      bool seen = false;
      for (double b : out) seen = seen || std::abs(a - b) < 1e-9;
      if (!seen) out.push_back(a);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PathGeometry random_geometry(int d, std::mt19937_64& rng) {
  // Integer lattice points in mm keep many coincidences in play.
  std::uniform_int_distribution<int> coord(0, 9);
  std::vector<Point> pts;
  while (static_cast<int>(pts.size()) < d) {
    const Point p{1.0 * coord(rng), 1.0 * coord(rng)};
    if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(p);
  }
  return PathGeometry(pts, 0.1);
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("constructor preconditions") {
    CHECK_THROWS_AS(PathGeometry({}, 0.3), Error);
    CHECK_THROWS_AS(PathGeometry({{0, 0}, {0, 0}}, 0.3), Error);
    CHECK_THROWS_AS(PathGeometry({{0, 0}}, 0.0), Error);
    CHECK(PathGeometry::eight_path().overlap_ok() == false);  // 1.3 mm apart at sigma 0.34
    CHECK(PathGeometry::grid_2x3().overlap_ok());
  }

  TEST_CASE("segment table") {
    CHECK(segment_table(PathGeometry::grid_2x3()).size() == 15);
    const auto one = segment_table(PathGeometry({{0, 0}, {0, 2.7}}, 0.3));
    REQUIRE(one.size() == 1);
    CHECK(one[0].angle_deg == doctest::Approx(90.0));
    CHECK(one[0].length_mm == doctest::Approx(2.7));
    const auto sq = segment_table(PathGeometry::square(1.0, 0.1));
    int unit = 0, diag = 0;
    for (const auto& s : sq) {
      if (std::abs(s.length_mm - 1.0) < 1e-12) ++unit;
      if (std::abs(s.length_mm - std::sqrt(2.0)) < 1e-12) ++diag;
      CHECK(std::abs(s.length_mm - std::hypot(s.dx_mm, s.dy_mm)) < 1e-12);
      CHECK(s.i < s.j);
    }
    CHECK(unit == 4);
    CHECK(diag == 2);
  }

  TEST_CASE("angle sets") {
    const auto grid = PathGeometry::grid_2x3();
    const auto a = angle_set(grid);
    const auto b = brute_angles(grid.points());
    REQUIRE(a.size() == 8);
    REQUIRE(b.size() == 8);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(std::atan2(2.7, 6.7) * 180 / kPi));
    CHECK(a[1] == doctest::Approx(21.95).epsilon(1e-3));
    CHECK(a[2] == doctest::Approx(34.02).epsilon(1e-3));

    const auto sq = angle_set(PathGeometry::square());
    REQUIRE(sq.size() == 4);
    CHECK(sq[0] == doctest::Approx(0.0));
    CHECK(sq[1] == doctest::Approx(45.0));
    CHECK(sq[2] == doctest::Approx(90.0));
    CHECK(sq[3] == doctest::Approx(135.0));

    const auto line = angle_set(PathGeometry({{0, 0}, {0, 1}, {0, 3}}, 0.1));
    REQUIRE(line.size() == 1);
    CHECK(line[0] == doctest::Approx(90.0));
  }

  TEST_CASE("validity examples") {
    const auto eight = validate_geometry(PathGeometry::eight_path());
    CHECK_FALSE(eight.valid);
    bool found = false;
    for (const auto& c : eight.collisions) {
      const bool a = (c.first.i == 0 && c.first.j == 1 && c.second.i == 2 && c.second.j == 3);
      found = found || (a && std::abs(c.first.length_mm - 2.7) < 1e-9);
    }
    CHECK(found);
    CHECK(validate_geometry(PathGeometry::grid_2x3()).valid);
    CHECK(validate_geometry(PathGeometry::square()).valid);
    CHECK_FALSE(eight.to_text().empty());
  }

  TEST_CASE("diagonal recoverability") {
    // Collinear ruler: every path shares the only line, so no Case-2 reading exists.
    const auto ruler = validate_geometry(PathGeometry({{0, 0}, {0, 1}, {0, 3}}, 0.1));
    CHECK(ruler.valid);
    CHECK_FALSE(ruler.diagonals_recoverable);
    CHECK(plan_measurements(PathGeometry({{0, 0}, {0, 1}, {0, 3}}, 0.1)).direct_image_required);
    CHECK(validate_geometry(PathGeometry::grid_2x3()).diagonals_recoverable);
  }

  TEST_CASE("Golomb rulers") {
    const auto r3 = golomb_ruler(3, 1.0);
    CHECK(r3 == std::vector<double>{0, 7, 13});
    const auto r5 = golomb_ruler(5, 1.0);
    CHECK(r5 == std::vector<double>{0, 11, 24, 34, 41});
    try {
      (void)golomb_ruler(4, 1.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ConstructionUndefined);
    }
    CHECK_THROWS_AS(golomb_ruler(2, 1.0), Error);
    CHECK_THROWS_AS(golomb_ruler(9, 1.0), Error);
    for (int d : {3, 5, 7, 11, 13}) {
      const auto r = golomb_ruler(d, 0.5);
      std::set<long long> diffs;
      for (std::size_t i = 0; i < r.size(); ++i) {
        for (std::size_t j = i + 1; j < r.size(); ++j) diffs.insert(std::llround(2 * std::abs(r[j] - r[i])));
      }
      CHECK(diffs.size() == static_cast<std::size_t>(d * (d - 1) / 2));
      CHECK(r.back() - r.front() == doctest::Approx(0.5 * (2 * d * (d - 1) + 1)));
      std::vector<Point> pts;
      for (double x : r) pts.push_back({x, 0});
      CHECK(is_nonredundant_rectangle(PathGeometry(pts, 0.05)));
    }
  }

  TEST_CASE("non-redundant rectangles") {
    CHECK_FALSE(is_nonredundant_rectangle(PathGeometry::grid_2x3()));
    CHECK_FALSE(is_nonredundant_rectangle(PathGeometry::square()));
    CHECK(is_nonredundant_rectangle(PathGeometry({{0, 0}, {1, 0}, {0, 3}}, 0.1)));
  }

  TEST_CASE("lens frame") {
    const auto g = PathGeometry({{0, 0}, {2, 0}}, 0.1);
    const auto f0 = lens_frame(g, 0.0);
    CHECK(f0[0].u == doctest::Approx(0.0));
    CHECK(f0[1].v - f0[0].v == doctest::Approx(2.0));
    const auto f90 = lens_frame(g, 90.0);
    CHECK(f90[1].u - f90[0].u == doctest::Approx(-2.0));
    CHECK(std::abs(f90[1].v - f90[0].v) < 1e-12);
  }

  TEST_CASE("plan examples on the 2x3 grid") {
    const auto plan = plan_measurements(PathGeometry::grid_2x3());
    CHECK(plan.angles.size() == 8);
    CHECK(plan.pair_count() == 15);

    const auto* a90 = plan.find(90.0);
    REQUIRE(a90 != nullptr);
    CHECK(a90->groups.size() == 3);
    for (const auto& grp : a90->groups) {
      REQUIRE(grp.pairs.size() == 1);
      CHECK(std::abs(grp.pairs[0].spacing_mm) == doctest::Approx(2.7));
    }

    const auto* a0 = plan.find(0.0);
    REQUIRE(a0 != nullptr);
    CHECK(a0->groups.size() == 2);
    for (const auto& grp : a0->groups) {
      std::set<long long> l;
      for (const auto& p : grp.pairs) l.insert(std::llround(10 * std::abs(p.spacing_mm)));
      CHECK(l == std::set<long long>{27, 40, 67});
    }

    const auto* a45 = plan.find(45.0);
    REQUIRE(a45 != nullptr);
    int pairs = 0, lone = 0;
    for (const auto& grp : a45->groups) {
      pairs += static_cast<int>(grp.pairs.size());
      lone += grp.members.size() == 1;
      if (!grp.pairs.empty()) {
        CHECK(grp.pairs[0].i == 0);
        CHECK(grp.pairs[0].j == 4);
      }
    }
    CHECK(pairs == 1);
    CHECK(lone == 4);
    CHECK_THROWS_AS(plan_measurements(PathGeometry::eight_path()), Error);
  }

  TEST_CASE("plans cover every pair exactly once on random valid geometries") {
    std::mt19937_64 rng(12);
    int checked = 0;
    for (int trial = 0; trial < 300 && checked < 60; ++trial) {
      const int d = 3 + trial % 8;
      const auto g = random_geometry(d, rng);
      if (!validate_geometry(g).valid) continue;
      ++checked;
      const auto plan = plan_measurements(g);
      std::set<std::pair<int, int>> seen;
      int total = 0;
      for (const auto& a : plan.angles) {
        for (const auto& grp : a.groups) {
          std::set<long long> lengths;
          for (const auto& p : grp.pairs) {
            seen.insert({std::min(p.i, p.j), std::max(p.i, p.j)});
            ++total;
            CHECK(lengths.insert(std::llround(std::abs(p.spacing_mm) * 1000)).second);
          }
        }
      }
      CHECK(total == d * (d - 1) / 2);
      CHECK(seen.size() == static_cast<std::size_t>(d * (d - 1) / 2));
    }
    CHECK(checked >= 20);
  }

  TEST_CASE("rigid rotation leaves the verdict, angle count and lengths unchanged") {
    for (const auto& g : {PathGeometry::grid_2x3(), PathGeometry::eight_path(), PathGeometry::square()}) {
      for (double rot : {13.0, 90.0, 137.5}) {
        const auto r = g.rotated(rot, {1.0, -2.0});
        CHECK(validate_geometry(r).valid == validate_geometry(g).valid);
        CHECK(angle_set(r).size() == angle_set(g).size());
        const auto s0 = segment_table(g);
        const auto s1 = segment_table(r);
        for (std::size_t k = 0; k < s0.size(); ++k) {
          CHECK(s1[k].length_mm == doctest::Approx(s0[k].length_mm).epsilon(1e-12));
          const double shift = std::fmod(s1[k].angle_deg - s0[k].angle_deg - rot + 720.0, 180.0);
          CHECK(std::min(shift, 180.0 - shift) < 1e-7);
        }
      }
    }
  }

  TEST_CASE("angle set size bound") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 40; ++t) {
      const int d = 2 + t % 7;
      const auto g = random_geometry(d, rng);
      const auto a = angle_set(g);
      CHECK(a.size() <= static_cast<std::size_t>(d * (d - 1) / 2));
      CHECK(a.size() == brute_angles(g.points()).size());
    }
  }

  TEST_CASE("resource report") {
    const auto full = OpticalConfig::full_resolution();
    const auto r = resource_report(PathGeometry::grid_2x3(), full);
    const double nyquist = 808e-6 * 250.0 / (kPi * 2.4e-3);
    CHECK(r.nyquist_limit_mm == doctest::Approx(nyquist).epsilon(1e-12));
    CHECK(r.nyquist_limit_mm == doctest::Approx(26.791).epsilon(1e-4));
    CHECK(r.l_max_mm == doctest::Approx(0.4 * std::hypot(6.7, 2.7)).epsilon(1e-12));
    CHECK(r.l_min_mm == doctest::Approx(0.4 * 2.7).epsilon(1e-12));
    CHECK(r.nyquist_ok);
    CHECK(r.eta == 8);
    CHECK(r.max_eta == 15);
    CHECK(r.required_pixels >= static_cast<int>(std::ceil(r.l_max_mm / r.l_min_mm)));
    CHECK(r.available_pixels == 2076);
    CHECK_FALSE(r.to_text().empty());

    OpticalConfig coarse = full;
    coarse.pixel_pitch_um = 200.0;  // Nyquist limit below L_max
    CHECK_FALSE(resource_report(PathGeometry::grid_2x3(), coarse).nyquist_ok);
  }
}
