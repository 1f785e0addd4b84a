#include <doctest.h>

#include <cmath>
#include <fstream>

#include "pathtomo/error.hpp"
#include "pathtomo/json_io.hpp"
#include "pathtomo/pipeline.hpp"

using namespace pathtomo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pathtomo_test_io";
  fs::create_directories(dir);
  return dir / name;
}

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("density matrix round trip is exact") {
    for (int k = 0; k < 5; ++k) {
      const auto rho = random_state(6, 1 + k, 100 + k);
      const auto file = scratch("rho.json");
      write_json_file(file, density_to_json(rho));
      const auto back = density_from_json(read_json_file(file));
      CHECK(max_abs_difference(rho, back) < 1e-15);
    }
  }

  TEST_CASE("density matrix parse errors") {
    Json j = density_to_json(DensityMatrix::uniform_pure(3));
    Json bad_shape = j;
    bad_shape["re"].erase(2);
    CHECK(kind_of([&] { (void)density_from_json(bad_shape); }) == ErrorKind::Parse);
    Json not_hermitian = j;
    not_hermitian["im"][0][1] = 0.3;
    try {
      (void)density_from_json(not_hermitian);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
      CHECK(std::string(e.what()).find("0") != std::string::npos);
    }
    Json bad_trace = j;
    bad_trace["re"][0][0] = 0.9;
    CHECK(kind_of([&] { (void)density_from_json(bad_trace); }) == ErrorKind::Parse);
    CHECK(kind_of([&] { (void)density_from_json(Json::parse(R"({"dim": "six"})")); }) == ErrorKind::Parse);
  }

  TEST_CASE("geometry and optics round trips") {
    const auto g = PathGeometry::grid_2x3();
    const auto back = geometry_from_json(geometry_to_json(g));
    CHECK(back.points() == g.points());
    CHECK(back.sigma_mm() == g.sigma_mm());
    CHECK(back.label() == g.label());

    const auto cfg = OpticalConfig::full_resolution();
    Json j = cfg;
    CHECK(j.get<OpticalConfig>() == cfg);
    OpticalConfig partial = Json::parse(R"({"oft_focal_mm": 300})").get<OpticalConfig>();
    CHECK(partial.oft_focal_mm == 300.0);
    CHECK(partial.nx == OpticalConfig::desk().nx);
    CHECK_THROWS_AS((void)Json::parse(R"({"wavelength_nm": -1})").get<OpticalConfig>(), Error);
  }

  TEST_CASE("shipped data files load") {
    const fs::path data = PATHTOMO_DATA_DIR;
    CHECK(geometry_from_json(read_json_file(data / "grid2x3.json")).size() == 6);
    CHECK(geometry_from_json(read_json_file(data / "eight_path.json")).size() == 8);
    CHECK(geometry_from_json(read_json_file(data / "square.json")).size() == 4);
    CHECK(read_json_file(data / "optics_desk.json").get<OpticalConfig>() == OpticalConfig::desk());
    CHECK(read_json_file(data / "optics_full.json").get<OpticalConfig>() == OpticalConfig::full_resolution());
    const auto prep = prep_settings_from_json(read_json_file(data / "prep_default.json"));
    CHECK(prep.zeta_deg == 45.0);
  }

  TEST_CASE("prep settings round trip") {
    PrepSettings s;
    s.tau_deg = 12.5;
    s.zeta_plate = Waveplate::Half;
    s.blocked = std::vector<int>{1, 5};
    s.analyzer_deg.reset();
    s.decoherence = {{0, 2, 0.5}};
    const auto back = prep_settings_from_json(prep_settings_to_json(s));
    CHECK(back.tau_deg == s.tau_deg);
    CHECK(back.zeta_plate == Waveplate::Half);
    CHECK(back.blocked == s.blocked);
    CHECK_FALSE(back.analyzer_deg.has_value());
    REQUIRE(back.decoherence.size() == 1);
    CHECK(back.decoherence[0].factor == 0.5);
    CHECK(prep_settings_from_json(Json::object()).analyzer_deg == 45.0);
  }

  TEST_CASE("calibration round trip") {
    const auto g = PathGeometry::grid_2x3();
    const auto plan = plan_measurements(g);
    SimulationOptions sim;
    sim.oft.origin_offset_px = 4.0;
    const auto cal = simulate_calibration(g, plan, OpticalConfig::desk(), sim, 3);
    const auto back = calibration_from_json(calibration_to_json(cal));
    CHECK(back.conjugate == cal.conjugate);
    CHECK(back.reference_1 == cal.reference_1);
    REQUIRE(back.factors.size() == cal.factors.size());
    for (const auto& [pair, e] : cal.factors) {
      CHECK(std::abs(back.factors.at(pair).factor - e.factor) < 1e-12);
      CHECK(back.factors.at(pair).theta_deg == e.theta_deg);
    }
    Json bad = calibration_to_json(cal);
    bad["factors"][0]["re"] = 2.0;
    CHECK(kind_of([&] { (void)calibration_from_json(bad); }) == ErrorKind::Parse);
  }

  TEST_CASE("result round trip and pairs table") {
    const auto g = PathGeometry::grid_2x3();
    const auto plan = plan_measurements(g);
    const auto cfg = OpticalConfig::desk();
    const auto truth = random_state(6, 2, 8);
    const auto rt = round_trip(truth, g, plan, cfg, {}, Calibration::identity(), 4);
    const auto [raw, phys] = result_matrices_from_json(result_to_json(rt.result));
    CHECK(max_abs_difference(raw, rt.result.rho_raw) < 1e-15);
    CHECK(max_abs_difference(phys, rt.result.rho_physical) < 1e-15);
    const auto csv = result_pairs_csv(rt.result);
    CHECK(csv.rfind("i,j,magnitude,phase_rad,theta_deg", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 15);
  }

  TEST_CASE("frames survive the PGM codec") {
    const auto cfg = OpticalConfig::desk();
    const auto g = PathGeometry::grid_2x3();
    OftOptions oft;
    oft.origin_offset_px = 2.5;
    const auto img = oft_image(random_state(6, 2, 2), g, 90.0, cfg, NoiseModel::poisson_only(1e6), oft, 17);
    write_frame(scratch("frame"), img, false);
    const auto back = read_frame(scratch("frame.pgm"));
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.theta_deg == img.theta_deg);
    CHECK(back.config == img.config);
    CHECK(back.seed == 17);
    CHECK(back.origin_offset_px == 0.0);
    double worst = 0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) worst = std::max(worst, std::abs(back.pixels[i] - img.pixels[i]));
    CHECK(worst <= 0.5 + 1e-9);  // noisy frames hold integer counts

    write_frame(scratch("frame_truth"), img, true);
    CHECK(read_frame(scratch("frame_truth")).origin_offset_px == 2.5);

    const auto smooth = direct_image(DensityMatrix::maximally_mixed(6), g, cfg);
    write_frame(scratch("direct"), smooth);
    const auto sback = read_frame(scratch("direct"));
    CHECK_FALSE(sback.theta_deg.has_value());
    double rel = 0;
    for (std::size_t i = 0; i < smooth.pixels.size(); ++i) rel = std::max(rel, std::abs(sback.pixels[i] - smooth.pixels[i]));
    CHECK(rel <= smooth.max() / 65535.0);
  }

  TEST_CASE("corrupt frames are rejected") {
    const auto file = scratch("broken.pgm");
    {
      std::ofstream out(file, std::ios::binary);
      out << "P5\n4 4\n65535\n" << "short";
    }
    int w = 0, h = 0;
    CHECK_THROWS_AS((void)read_pgm16(file, w, h), Error);
    CHECK(kind_of([&] { (void)read_json_file(scratch("missing.json")); }) == ErrorKind::Io);
    {
      std::ofstream out(scratch("garbage.json"));
      out << "{ not json";
    }
    CHECK(kind_of([&] { (void)read_json_file(scratch("garbage.json")); }) == ErrorKind::Parse);
  }
}
