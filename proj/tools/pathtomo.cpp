// pathtomo: geometry design, state preparation, frame simulation and
// cylindrical-lens tomography from the command line.
//
// Exit codes: 0 success, 1 error, 2 a validation check failed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pathtomo/error.hpp"
#include "pathtomo/json_io.hpp"
#include "pathtomo/pipeline.hpp"
#include "pathtomo/polarization.hpp"

namespace fs = std::filesystem;
using namespace pathtomo;

namespace {

constexpr int kExitFail = 2;

struct Globals {
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string config;
};

OpticalConfig load_config(const Globals& g) {
  if (g.config.empty()) return OpticalConfig::desk();
  return read_json_file(g.config).get<OpticalConfig>();
}

PathGeometry load_geometry(const std::string& file) {
  if (file.empty()) return PathGeometry::grid_2x3();
  return geometry_from_json(read_json_file(file));
}

fs::path out_dir(const Globals& g) {
  fs::create_directories(g.out);
  return g.out;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + file.string() + " for writing");
  out << text;
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

int parse_slice_width(const std::string& text, const PathGeometry& g, const OpticalConfig& cfg) {
  if (text == "auto") return matched_slice_width(g, cfg);
  try {
    std::size_t used = 0;
    const int w = std::stoi(text, &used);
    if (used == text.size() && w >= 1) return w;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidArgument, "slice width must be a positive integer or 'auto'");
}

std::string frame_name(const CameraImage& img) {
  if (!img.theta_deg) return "direct";
  std::ostringstream os;
  os << "theta_" << std::fixed << std::setprecision(4) << *img.theta_deg;
  return os.str();
}

// A frame directory holds one PGM + JSON pair per frame and an index.
void write_frames(const fs::path& dir, const FrameSet& frames, bool reveal_truth) {
  fs::create_directories(dir);
  Json index{{"oft", Json::array()}, {"direct", nullptr}};
  for (const auto& f : frames.oft) {
    write_frame(dir / frame_name(f), f, reveal_truth);
    index["oft"].push_back(frame_name(f));
  }
  if (frames.direct) {
    write_frame(dir / "direct", *frames.direct, reveal_truth);
    index["direct"] = "direct";
  }
  write_json_file(dir / "frames.json", index);
}

FrameSet read_frames(const fs::path& dir) {
  const Json index = read_json_file(dir / "frames.json");
  FrameSet set;
  try {
    for (const auto& name : index.at("oft")) set.oft.push_back(read_frame(dir / name.get<std::string>()));
    if (!index.at("direct").is_null()) set.direct = read_frame(dir / index.at("direct").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, (dir / "frames.json").string() + ": " + e.what());
  }
  return set;
}

struct StateChoice {
  DensityMatrix rho;
  PathGeometry geometry;
  std::string description;
};

StateChoice choose_state(const std::string& kind, const std::string& geometry_file,
                         const std::string& prep_file, int rank, std::uint64_t seed) {
  if (kind == "prep") {
    const PrepSettings s = prep_file.empty() ? PrepSettings{} : prep_settings_from_json(read_json_file(prep_file));
    const auto p = prepare_six_path_state(s);
    return {p.rho, p.geometry, "prep"};
  }
  const PathGeometry g = load_geometry(geometry_file);
  const int d = static_cast<int>(g.size());
  if (kind == "uniform") return {DensityMatrix::uniform_pure(d), g, "uniform"};
  if (kind == "maximally-mixed") return {DensityMatrix::maximally_mixed(d), g, "maximally-mixed"};
  if (kind == "random") {
    return {random_state(d, rank > 0 ? rank : d, derive_seed(seed, 3)), g,
            "random rank " + std::to_string(rank > 0 ? rank : d)};
  }
  throw Error(ErrorKind::InvalidArgument, "unknown state '" + kind + "'");
}

// ---------------------------------------------------------------- geometry

int geometry_gen_ruler(int d, double lmin, const std::string& save, bool as_json) {
  const auto marks = golomb_ruler(d, lmin);
  if (as_json) {
    std::cout << Json(marks).dump() << "\n";
  } else {
    std::cout << "[";
    for (std::size_t i = 0; i < marks.size(); ++i) std::cout << (i ? ", " : "") << marks[i];
    std::cout << "]\n";
  }
  if (!save.empty()) {
    std::vector<Point> pts;
    for (double m : marks) pts.push_back({m, 0.0});
    write_json_file(save, geometry_to_json(PathGeometry(pts, 0.34, "ruler d=" + std::to_string(d))));
  }
  return 0;
}

int geometry_validate(const std::string& file, bool as_json) {
  const auto report = validate_geometry(load_geometry(file));
  if (as_json) {
    std::cout << validity_to_json(report).dump(2) << "\n";
  } else {
    std::cout << report.to_text();
  }
  return report.valid ? 0 : kExitFail;
}

int geometry_plan(const std::string& file, bool as_json) {
  const auto g = load_geometry(file);
  const auto report = validate_geometry(g);
  if (!report.valid) {
    std::cerr << report.to_text();
    return kExitFail;
  }
  const auto plan = plan_measurements(g);
  if (as_json) {
    std::cout << plan_to_json(plan).dump(2) << "\n";
    return 0;
  }
  std::cout << plan.angles.size() << " lens angles, " << plan.pair_count() << " pair entries\n";
  for (const auto& a : plan.angles) {
    std::cout << "theta " << a.theta_deg << " deg\n";
    for (const auto& grp : a.groups) {
      std::cout << "  x_m " << grp.x_m << " mm:";
      if (grp.members.size() == 1) std::cout << " lone path " << grp.members.front();
      for (const auto& p : grp.pairs) std::cout << " (" << p.i << "," << p.j << ") L=" << p.spacing_mm;
      std::cout << "\n";
    }
  }
  std::cout << "direct image " << (plan.direct_image_required ? "required" : "optional") << "\n";
  return 0;
}

int geometry_report(const std::string& file, const Globals& globals, bool as_json) {
  const auto r = resource_report(load_geometry(file), load_config(globals));
  if (as_json) {
    std::cout << resource_to_json(r).dump(2) << "\n";
  } else {
    std::cout << r.to_text();
  }
  return r.nyquist_ok && r.aperture_ok ? 0 : kExitFail;
}

// ---------------------------------------------------------------- stages

struct PrepareArgs {
  std::string settings;
  std::optional<double> phi, zeta, omega, tau, square_side, analyzer;
  bool no_analyzer = false;
};

int cmd_prepare(const PrepareArgs& a, const Globals& globals) {
  PreparedState p = [&] {
    if (a.square_side) {
      return prepare_square_state(*a.square_side, a.tau, 0.34,
                                  a.no_analyzer ? std::nullopt : std::optional<double>(a.analyzer.value_or(45.0)));
    }
    PrepSettings s = a.settings.empty() ? PrepSettings{} : prep_settings_from_json(read_json_file(a.settings));
    if (a.phi) s.phi_deg = *a.phi;
    if (a.zeta) s.zeta_deg = *a.zeta;
    if (a.omega) s.omega_deg = *a.omega;
    if (a.tau) s.tau_deg = a.tau;
    if (a.analyzer) s.analyzer_deg = a.analyzer;
    if (a.no_analyzer) s.analyzer_deg.reset();
    return prepare_six_path_state(s);
  }();
  const fs::path dir = out_dir(globals);
  write_json_file(dir / "state.json", density_to_json(p.rho));
  write_json_file(dir / "geometry.json", geometry_to_json(p.geometry));
  std::cout << "paths " << p.rho.dim() << ", purity " << number(purity(p.rho)) << ", blocked probability "
            << number(p.discarded_probability) << "\n";
  return 0;
}

struct SimulateArgs {
  std::string state, geometry, noise = "none";
  double origin_offset = 0.0;
  bool mirror = false, reveal_truth = false, no_direct = false;
};

int cmd_simulate(const SimulateArgs& a, const Globals& globals) {
  const DensityMatrix rho = density_from_json(read_json_file(a.state));
  const PathGeometry g = load_geometry(a.geometry);
  const OpticalConfig cfg = load_config(globals);
  SimulationOptions sim;
  sim.noise = NoiseModel::parse(a.noise);
  sim.oft.origin_offset_px = a.origin_offset;
  sim.oft.mirror_k = a.mirror;
  sim.include_direct = !a.no_direct;
  const FrameSet frames = simulate_frames(rho, g, plan_measurements(g), cfg, sim, globals.seed);
  write_frames(out_dir(globals) / "frames", frames, a.reveal_truth);
  std::cout << frames.oft.size() << " lens frames" << (frames.direct ? " + direct image" : "") << " written to "
            << (fs::path(globals.out) / "frames").string() << "\n";
  return 0;
}

struct CalibrateArgs {
  std::string geometry, ref1, ref2, ref1_state, ref2_state, noise = "none", slice_width = "1";
  double origin_offset = 0.0;
};

int cmd_calibrate(const CalibrateArgs& a, const Globals& globals) {
  const PathGeometry g = load_geometry(a.geometry);
  const OpticalConfig cfg = load_config(globals);
  const auto plan = plan_measurements(g);
  MeasureOptions mo;
  mo.slice_width = parse_slice_width(a.slice_width, g, cfg);
  Calibration cal;
  if (!a.ref1.empty() || !a.ref2.empty()) {
    if (a.ref1.empty() || a.ref2.empty()) {
      throw Error(ErrorKind::InvalidArgument, "give both --ref1 and --ref2 frame directories");
    }
    const int d = static_cast<int>(g.size());
    auto known = [&](const std::string& file, int which) {
      return file.empty() ? reference_state(d, which) : density_from_json(read_json_file(file));
    };
    cal = calibrate({"reference 1", known(a.ref1_state, 1), read_frames(a.ref1)},
                    {"reference 2", known(a.ref2_state, 2), read_frames(a.ref2)}, plan, g, mo);
  } else {
    SimulationOptions sim;
    sim.noise = NoiseModel::parse(a.noise);
    sim.oft.origin_offset_px = a.origin_offset;
    cal = simulate_calibration(g, plan, cfg, sim, globals.seed, mo);
  }
  write_json_file(out_dir(globals) / "calibration.json", calibration_to_json(cal));
  std::cout << cal.factors.size() << " calibration factors, orientation "
            << (cal.conjugate ? "conjugated" : "direct") << "\n";
  return 0;
}

void write_spectra(const fs::path& file, const FrameSet& frames, const MeasurementPlan& plan, int width) {
  std::ostringstream os;
  os << "theta_deg,x_m_mm,bin,magnitude\n";
  for (const auto& ap : plan.angles) {
    const CameraImage* img = frames.find(ap.theta_deg);
    if (img == nullptr) continue;
    for (const auto& grp : ap.groups) {
      const auto spectrum = slice_spectrum(extract_slice(*img, grp.x_m, width));
      for (std::size_t b = 0; b < spectrum.size(); ++b) {
        os << number(ap.theta_deg) << "," << number(grp.x_m) << "," << b << "," << number(spectrum[b]) << "\n";
      }
    }
  }
  write_text(file, os.str());
}

struct ReconstructArgs {
  std::string frames, geometry, calibration, slice_width = "1";
  bool spectra = false, keep_background = false;
};

int cmd_reconstruct(const ReconstructArgs& a, const Globals& globals) {
  const PathGeometry g = load_geometry(a.geometry);
  const FrameSet frames = read_frames(a.frames);
  const CameraImage& first = frames.oft.empty() ? *frames.direct : frames.oft.front();
  const OpticalConfig cfg = globals.config.empty() ? first.config : load_config(globals);
  const auto plan = plan_measurements(g);
  const Calibration cal =
      a.calibration.empty() ? Calibration::identity() : calibration_from_json(read_json_file(a.calibration));
  MeasureOptions mo;
  mo.slice_width = parse_slice_width(a.slice_width, g, cfg);
  mo.subtract_background = !a.keep_background;
  const auto result = reconstruct_state(frames, plan, g, cal, cfg, mo);
  const fs::path dir = out_dir(globals);
  write_json_file(dir / "result.json", result_to_json(result));
  write_text(dir / "pairs.csv", result_pairs_csv(result));
  if (a.spectra) write_spectra(dir / "spectra.csv", frames, plan, mo.slice_width);
  std::cout << "purity " << number(purity(result.rho_physical)) << ", PSD violation "
            << number(result.diagnostics.psd_violation) << ", flagged readings "
            << result.diagnostics.flagged_readings << "\n";
  return 0;
}

Json evaluation(const ReconstructionResult& result, const DensityMatrix& truth) {
  return Json{{"fidelity", fidelity(result.rho_physical, truth)},
              {"purity", purity(result.rho_physical)},
              {"purity_raw", purity(result.rho_raw)},
              {"truth_purity", purity(truth)},
              {"psd_violation", result.diagnostics.psd_violation},
              {"min_eigenvalue_raw", result.diagnostics.min_eigenvalue},
              {"max_abs_error", max_abs_difference(result.rho_physical, truth)},
              {"flagged_readings", result.diagnostics.flagged_readings}};
}

int cmd_evaluate(const std::string& result_file, const std::string& truth_file, const Globals& globals) {
  const auto [raw, physical] = result_matrices_from_json(read_json_file(result_file));
  const DensityMatrix truth = density_from_json(read_json_file(truth_file));
  if (truth.dim() != physical.dim()) throw Error(ErrorKind::InvalidArgument, "dimension mismatch");
  Json ev{{"fidelity", fidelity(physical, truth)},
          {"purity", purity(physical)},
          {"purity_raw", purity(raw)},
          {"truth_purity", purity(truth)},
          {"psd_violation", psd_violation(raw)},
          {"max_abs_error", max_abs_difference(physical, truth)}};
  write_json_file(out_dir(globals) / "evaluation.json", ev);
  std::cout << ev.dump(2) << "\n";
  return 0;
}

struct PipelineArgs {
  std::string state = "random", geometry, prep, noise = "none", slice_width = "1";
  int rank = 0;
  double origin_offset = 0.0;
  bool reveal_truth = false, no_frames = false;
};

int cmd_pipeline(const PipelineArgs& a, const Globals& globals) {
  const StateChoice choice = choose_state(a.state, a.geometry, a.prep, a.rank, globals.seed);
  const OpticalConfig cfg = load_config(globals);
  const auto& g = choice.geometry;
  const auto report = validate_geometry(g);
  if (!report.valid) {
    std::cerr << report.to_text();
    return kExitFail;
  }
  const auto plan = plan_measurements(g);
  SimulationOptions sim;
  sim.noise = NoiseModel::parse(a.noise);
  sim.oft.origin_offset_px = a.origin_offset;
  MeasureOptions mo;
  mo.slice_width = parse_slice_width(a.slice_width, g, cfg);

  const Calibration cal = simulate_calibration(g, plan, cfg, sim, derive_seed(globals.seed, 1), mo);
  const FrameSet frames = simulate_frames(choice.rho, g, plan, cfg, sim, derive_seed(globals.seed, 2));
  const auto result = reconstruct_state(frames, plan, g, cal, cfg, mo);
  const Json ev = evaluation(result, choice.rho);

  const fs::path dir = out_dir(globals);
  Json manifest{{"experiment", "pipeline"},
                {"state", choice.description},
                {"geometry", geometry_to_json(g)},
                {"config", cfg},
                {"noise", sim.noise.to_string()},
                {"origin_offset_px", a.reveal_truth ? Json(a.origin_offset) : Json(nullptr)},
                {"slice_width_px", mo.slice_width},
                {"seed", globals.seed},
                {"output", globals.out}};
  if (!a.prep.empty()) manifest["prep_file"] = a.prep;
  write_json_file(dir / "manifest.json", manifest);
  write_json_file(dir / "truth.json", density_to_json(choice.rho));
  write_json_file(dir / "calibration.json", calibration_to_json(cal));
  write_json_file(dir / "result.json", result_to_json(result));
  write_json_file(dir / "evaluation.json", ev);
  write_text(dir / "pairs.csv", result_pairs_csv(result));
  if (!a.no_frames) write_frames(dir / "frames", frames, a.reveal_truth);
  std::ostringstream csv;
  csv << "seed,dim,state,noise,fidelity,purity,truth_purity,psd_violation\n"
      << globals.seed << "," << choice.rho.dim() << "," << choice.description << "," << sim.noise.to_string()
      << "," << number(ev["fidelity"]) << "," << number(ev["purity"]) << "," << number(ev["truth_purity"]) << ","
      << number(ev["psd_violation"]) << "\n";
  write_text(dir / "summary.csv", csv.str());
  std::cout << "fidelity " << number(ev["fidelity"]) << ", purity " << number(ev["purity"]) << " (truth "
            << number(ev["truth_purity"]) << "), PSD violation " << number(ev["psd_violation"]) << "\n";
  return 0;
}

struct SweepArgs {
  std::string variable = "tau", noise = "none", slice_width = "1";
  std::optional<double> from, to, step;
};

int cmd_sweep(const SweepArgs& a, const Globals& globals) {
  const bool is_tau = a.variable == "tau";
  if (!is_tau && a.variable != "phi" && a.variable != "zeta" && a.variable != "omega") {
    throw Error(ErrorKind::InvalidArgument, "sweep variable must be phi, zeta, omega or tau");
  }
  const double from = a.from.value_or(0.0);
  const double to = a.to.value_or(is_tau ? 45.0 : 90.0);
  const double step = a.step.value_or(5.0);
  if (!(step > 0) || to < from) throw Error(ErrorKind::InvalidArgument, "need step > 0 and to >= from");
  std::vector<double> angles;
  for (int k = 0; from + k * step <= to + 1e-9; ++k) angles.push_back(from + k * step);

  const OpticalConfig cfg = load_config(globals);
  SimulationOptions sim;
  sim.noise = NoiseModel::parse(a.noise);
  // Fixed plates follow the experiment: half waveplates at 22.5 deg, zeta at 45 deg.
  auto settings_for = [&](double angle) {
    PrepSettings s;
    if (a.variable == "phi") s.phi_deg = angle;
    if (a.variable == "zeta") s.zeta_deg = angle;
    if (a.variable == "omega") s.omega_deg = angle;
    if (is_tau) s.tau_deg = angle;
    return s;
  };
  const PathGeometry g = prepare_six_path_state(settings_for(angles.front())).geometry;
  const auto plan = plan_measurements(g);
  MeasureOptions mo;
  mo.slice_width = parse_slice_width(a.slice_width, g, cfg);
  const Calibration cal = simulate_calibration(g, plan, cfg, sim, derive_seed(globals.seed, 1), mo);

  struct Row {
    double fidelity = 0, purity = 0, theory = 0;
  };
  std::vector<Row> rows(angles.size());
  parallel_for(angles.size(), [&](std::size_t k) {
    const auto prep = prepare_six_path_state(settings_for(angles[k]));
    const auto rt = round_trip(prep.rho, g, plan, cfg, sim, cal, derive_seed(globals.seed, 100 + k), mo);
    rows[k] = {rt.fidelity, purity(rt.result.rho_physical),
               is_tau ? theory_mixed_purity(angles[k]) : purity(prep.rho)};
  });
  std::ostringstream csv;
  csv << "angle_deg,fidelity,purity,theory_purity\n";
  for (std::size_t k = 0; k < angles.size(); ++k) {
    csv << number(angles[k]) << "," << number(rows[k].fidelity) << "," << number(rows[k].purity) << ","
        << number(rows[k].theory) << "\n";
  }
  write_text(out_dir(globals) / ("sweep_" + a.variable + ".csv"), csv.str());
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-encoded qudit tomography with a rotating cylindrical lens"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals globals;
  app.add_option("--seed", globals.seed, "Master RNG seed")->capture_default_str();
  app.add_option("--out", globals.out, "Output directory")->capture_default_str();
  app.add_option("--config", globals.config, "Optics config JSON (default: desk camera)");

  int code = 0;
  auto run = [&](auto fn) { return [&code, fn] { code = fn(); }; };

  // geometry
  auto* geo = app.add_subcommand("geometry", "Design and check path geometries");
  geo->require_subcommand(1);
  geo->fallthrough();
  bool as_json = false;
  int ruler_d = 0;
  double ruler_lmin = 1.0;
  std::string ruler_save, geo_file;
  auto* gen = geo->add_subcommand("gen-ruler", "Erdos-Turan Golomb ruler");
  gen->add_option("--d", ruler_d, "Number of marks (odd prime)")->required();
  gen->add_option("--lmin", ruler_lmin, "Unit spacing in mm")->capture_default_str();
  gen->add_option("--save", ruler_save, "Also write the ruler as a geometry JSON");
  gen->add_flag("--json", as_json);
  gen->callback(run([&] { return geometry_gen_ruler(ruler_d, ruler_lmin, ruler_save, as_json); }));
  for (const char* name : {"validate", "plan", "report"}) {
    auto* sub = geo->add_subcommand(name);
    sub->add_option("geometry", geo_file, "Geometry JSON")->required();
    sub->add_flag("--json", as_json);
  }
  geo->get_subcommand("validate")->description("Check the cylindrical-lens conditions");
  geo->get_subcommand("validate")->callback(run([&] { return geometry_validate(geo_file, as_json); }));
  geo->get_subcommand("plan")->description("Lens angles and slice groups");
  geo->get_subcommand("plan")->callback(run([&] { return geometry_plan(geo_file, as_json); }));
  geo->get_subcommand("report")->description("Camera and lens resource accounting");
  geo->get_subcommand("report")->callback(run([&] { return geometry_report(geo_file, globals, as_json); }));

  // prepare
  PrepareArgs prep;
  auto* prep_cmd = app.add_subcommand("prepare", "Simulate the waveplate and displacer preparation");
  prep_cmd->add_option("--settings", prep.settings, "Prep settings JSON");
  prep_cmd->add_option("--phi", prep.phi, "First half waveplate (deg)");
  prep_cmd->add_option("--zeta", prep.zeta, "Middle plate (deg)");
  prep_cmd->add_option("--omega", prep.omega, "Last half waveplate (deg)");
  prep_cmd->add_option("--tau", prep.tau, "Mixer waveplate (deg); omit for no mixer");
  prep_cmd->add_option("--square", prep.square_side, "Four-path square of this side (mm) instead");
  prep_cmd->add_option("--analyzer", prep.analyzer, "Polarizer angle before the camera (deg)");
  prep_cmd->add_flag("--no-analyzer", prep.no_analyzer, "Trace out polarization instead");
  prep_cmd->callback(run([&] { return cmd_prepare(prep, globals); }));

  // simulate
  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Render camera frames for every planned lens angle");
  sim_cmd->add_option("--state", sim.state, "Density matrix JSON")->required();
  sim_cmd->add_option("--geometry", sim.geometry, "Geometry JSON (default 2x3 grid)");
  sim_cmd->add_option("--noise", sim.noise, "none | poisson:N[,read:S][,bg:B]")->capture_default_str();
  sim_cmd->add_option("--origin-offset", sim.origin_offset, "Hidden k-origin shift (px)");
  sim_cmd->add_flag("--mirror", sim.mirror, "Flip the k axis");
  sim_cmd->add_flag("--reveal-truth", sim.reveal_truth, "Record the hidden offset in sidecars");
  sim_cmd->add_flag("--no-direct", sim.no_direct, "Skip the direct image");
  sim_cmd->callback(run([&] { return cmd_simulate(sim, globals); }));

  // calibrate
  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Two-reference phase calibration");
  cal_cmd->add_option("--geometry", cal.geometry, "Geometry JSON (default 2x3 grid)");
  cal_cmd->add_option("--ref1", cal.ref1, "Frame directory of reference 1");
  cal_cmd->add_option("--ref2", cal.ref2, "Frame directory of reference 2");
  cal_cmd->add_option("--ref1-state", cal.ref1_state, "Known state of reference 1 (default uniform)");
  cal_cmd->add_option("--ref2-state", cal.ref2_state, "Known state of reference 2 (default quadratic phases)");
  cal_cmd->add_option("--noise", cal.noise, "Noise for simulated references")->capture_default_str();
  cal_cmd->add_option("--origin-offset", cal.origin_offset, "Hidden k-origin shift of simulated references");
  cal_cmd->add_option("--slice-width", cal.slice_width, "Pixels per slice, or auto")->capture_default_str();
  cal_cmd->callback(run([&] { return cmd_calibrate(cal, globals); }));

  // reconstruct
  ReconstructArgs rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Reconstruct a density matrix from frames");
  rec_cmd->add_option("--frames", rec.frames, "Frame directory")->required();
  rec_cmd->add_option("--geometry", rec.geometry, "Geometry JSON (default 2x3 grid)");
  rec_cmd->add_option("--calibration", rec.calibration, "Calibration JSON (default identity)");
  rec_cmd->add_option("--slice-width", rec.slice_width, "Pixels per slice, or auto")->capture_default_str();
  rec_cmd->add_flag("--spectra", rec.spectra, "Also write DFT magnitudes of every slice");
  rec_cmd->add_flag("--keep-background", rec.keep_background, "Skip background subtraction");
  rec_cmd->callback(run([&] { return cmd_reconstruct(rec, globals); }));

  // evaluate
  std::string eval_result, eval_truth;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare a reconstruction with the true state");
  eval_cmd->add_option("--result", eval_result, "result.json")->required();
  eval_cmd->add_option("--truth", eval_truth, "Density matrix JSON")->required();
  eval_cmd->callback(run([&] { return cmd_evaluate(eval_result, eval_truth, globals); }));

  // pipeline
  PipelineArgs pipe;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Prepare, simulate, calibrate, reconstruct and evaluate");
  pipe_cmd->add_option("--state", pipe.state, "uniform | maximally-mixed | random | prep")
      ->check(CLI::IsMember({"uniform", "maximally-mixed", "random", "prep"}))
      ->capture_default_str();
  pipe_cmd->add_option("--rank", pipe.rank, "Rank of the random state (default full)");
  pipe_cmd->add_option("--geometry", pipe.geometry, "Geometry JSON (default 2x3 grid)");
  pipe_cmd->add_option("--prep", pipe.prep, "Prep settings JSON for --state prep");
  pipe_cmd->add_option("--noise", pipe.noise, "none | poisson:N[,read:S][,bg:B]")->capture_default_str();
  pipe_cmd->add_option("--origin-offset", pipe.origin_offset, "Hidden k-origin shift (px)");
  pipe_cmd->add_option("--slice-width", pipe.slice_width, "Pixels per slice, or auto")->capture_default_str();
  pipe_cmd->add_flag("--reveal-truth", pipe.reveal_truth, "Record hidden offsets in outputs");
  pipe_cmd->add_flag("--no-frames", pipe.no_frames, "Do not write frame files");
  pipe_cmd->callback(run([&] { return cmd_pipeline(pipe, globals); }));

  // sweep
  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Fidelity and purity against one waveplate angle");
  sweep_cmd->add_option("--var", sweep.variable, "phi | zeta | omega | tau")->capture_default_str();
  sweep_cmd->add_option("--from", sweep.from, "First angle (deg, default 0)");
  sweep_cmd->add_option("--to", sweep.to, "Last angle (deg, default 45 for tau else 90)");
  sweep_cmd->add_option("--step", sweep.step, "Angle step (deg, default 5)");
  sweep_cmd->add_option("--noise", sweep.noise, "none | poisson:N[,read:S][,bg:B]")->capture_default_str();
  sweep_cmd->add_option("--slice-width", sweep.slice_width, "Pixels per slice, or auto")->capture_default_str();
  sweep_cmd->callback(run([&] { return cmd_sweep(sweep, globals); }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}
