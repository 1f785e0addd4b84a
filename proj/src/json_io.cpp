#include "pathtomo/json_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "pathtomo/error.hpp"

namespace pathtomo {

namespace fs = std::filesystem;

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string(what) + ": " + e.what());
  }
}

Json complex_matrix_part(const Eigen::MatrixXcd& m, bool imag) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(imag ? m(i, j).imag() : m(i, j).real());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

void to_json(Json& j, const OpticalConfig& cfg) {
  j = Json{{"wavelength_nm", cfg.wavelength_nm},
           {"oft_focal_mm", cfg.oft_focal_mm},
           {"pixel_pitch_um", cfg.pixel_pitch_um},
           {"resolution_px", {cfg.nx, cfg.ny}},
           {"magnification", cfg.magnification},
           {"lens_aperture_mm", cfg.lens_aperture_mm},
           {"exposure", cfg.exposure}};
}

void from_json(const Json& j, OpticalConfig& cfg) {
  OpticalConfig def;
  cfg.wavelength_nm = j.value("wavelength_nm", def.wavelength_nm);
  cfg.oft_focal_mm = j.value("oft_focal_mm", def.oft_focal_mm);
  cfg.pixel_pitch_um = j.value("pixel_pitch_um", def.pixel_pitch_um);
  if (j.contains("resolution_px")) {
    cfg.nx = j.at("resolution_px").at(0).get<int>();
    cfg.ny = j.at("resolution_px").at(1).get<int>();
  }
  cfg.magnification = j.value("magnification", def.magnification);
  cfg.lens_aperture_mm = j.value("lens_aperture_mm", def.lens_aperture_mm);
  cfg.exposure = j.value("exposure", def.exposure);
  cfg.validate();
}

Json density_to_json(const DensityMatrix& rho) {
  return Json{{"dim", rho.dim()},
              {"re", complex_matrix_part(rho.matrix(), false)},
              {"im", complex_matrix_part(rho.matrix(), true)}};
}

DensityMatrix density_from_json(const Json& j) {
  return guarded("density matrix", [&] {
    const int d = j.at("dim").get<int>();
    if (d < 1) throw Error(ErrorKind::Parse, "density matrix: dim must be positive");
    const Json& re = j.at("re");
    const Json& im = j.at("im");
    if (re.size() != static_cast<std::size_t>(d) || im.size() != static_cast<std::size_t>(d)) {
      throw Error(ErrorKind::Parse, "density matrix: expected " + std::to_string(d) + " rows");
    }
    Eigen::MatrixXcd m(d, d);
    for (int a = 0; a < d; ++a) {
      if (re[a].size() != static_cast<std::size_t>(d) || im[a].size() != static_cast<std::size_t>(d)) {
        throw Error(ErrorKind::Parse, "density matrix: row " + std::to_string(a) + " has the wrong length");
      }
      for (int b = 0; b < d; ++b) m(a, b) = Complex(re[a][b].get<double>(), im[a][b].get<double>());
    }
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) {
        if (std::abs(m(a, b) - std::conj(m(b, a))) > 1e-9) {
          std::ostringstream os;
          os << "density matrix: not Hermitian at (" << a << "," << b << ")";
          throw Error(ErrorKind::Parse, os.str());
        }
      }
    }
    const double tr = m.trace().real();
    if (std::abs(tr - 1.0) > 1e-9) {
      std::ostringstream os;
      os << "density matrix: trace " << std::setprecision(17) << tr << " differs from 1";
      throw Error(ErrorKind::Parse, os.str());
    }
    return DensityMatrix(m);
  });
}

Json geometry_to_json(const PathGeometry& g) {
  Json pts = Json::array();
  for (const auto& p : g.points()) pts.push_back({p.x, p.y});
  return Json{{"points_mm", pts}, {"sigma_mm", g.sigma_mm()}, {"label", g.label()}};
}

PathGeometry geometry_from_json(const Json& j) {
  return guarded("geometry", [&] {
    std::vector<Point> pts;
    for (const auto& p : j.at("points_mm")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return PathGeometry(std::move(pts), j.at("sigma_mm").get<double>(), j.value("label", std::string{}));
  });
}

Json prep_settings_to_json(const PrepSettings& s) {
  Json j{{"phi_deg", s.phi_deg},
         {"zeta_deg", s.zeta_deg},
         {"omega_deg", s.omega_deg},
         {"tau_deg", s.tau_deg ? Json(*s.tau_deg) : Json(nullptr)},
         {"zeta_plate", s.zeta_plate == Waveplate::Half ? "half" : "quarter"},
         {"blocked", s.blocked ? Json(*s.blocked) : Json(nullptr)},
         {"shift_x_mm", s.shift_x_mm},
         {"shift_y_mm", s.shift_y_mm},
         {"shift_X_mm", s.shift_X_mm},
         {"sigma_mm", s.sigma_mm},
         {"analyzer_deg", s.analyzer_deg ? Json(*s.analyzer_deg) : Json(nullptr)}};
  Json dec = Json::array();
  for (const auto& f : s.decoherence) dec.push_back({{"i", f.i}, {"j", f.j}, {"factor", f.factor}});
  j["decoherence"] = dec;
  return j;
}

PrepSettings prep_settings_from_json(const Json& j) {
  return guarded("prep settings", [&] {
    PrepSettings s;
    s.phi_deg = j.value("phi_deg", s.phi_deg);
    s.zeta_deg = j.value("zeta_deg", s.zeta_deg);
    s.omega_deg = j.value("omega_deg", s.omega_deg);
    if (j.contains("tau_deg") && !j.at("tau_deg").is_null()) s.tau_deg = j.at("tau_deg").get<double>();
    const std::string plate = j.value("zeta_plate", std::string("quarter"));
    if (plate == "half") {
      s.zeta_plate = Waveplate::Half;
    } else if (plate != "quarter") {
      throw Error(ErrorKind::Parse, "prep settings: zeta_plate must be 'half' or 'quarter'");
    }
    if (j.contains("blocked") && !j.at("blocked").is_null()) s.blocked = j.at("blocked").get<std::vector<int>>();
    s.shift_x_mm = j.value("shift_x_mm", s.shift_x_mm);
    s.shift_y_mm = j.value("shift_y_mm", s.shift_y_mm);
    s.shift_X_mm = j.value("shift_X_mm", s.shift_X_mm);
    s.sigma_mm = j.value("sigma_mm", s.sigma_mm);
    if (j.contains("analyzer_deg")) {
      const Json& a = j.at("analyzer_deg");
      s.analyzer_deg = a.is_null() ? std::nullopt : std::optional<double>(a.get<double>());
    }
    if (j.contains("decoherence")) {
      for (const auto& f : j.at("decoherence")) {
        s.decoherence.push_back({f.at("i").get<int>(), f.at("j").get<int>(), f.at("factor").get<double>()});
      }
    }
    s.validate();
    return s;
  });
}

Json validity_to_json(const ValidityReport& r) {
  Json collisions = Json::array();
  for (const auto& c : r.collisions) {
    collisions.push_back({{"first", {c.first.i, c.first.j}},
                          {"second", {c.second.i, c.second.j}},
                          {"angle_deg", c.first.angle_deg},
                          {"length_mm", c.first.length_mm}});
  }
  Json overlapping = Json::array();
  for (const auto& [i, j] : r.overlapping) overlapping.push_back({i, j});
  return Json{{"valid", r.valid},
              {"collisions", collisions},
              {"overlapping", overlapping},
              {"diagonals_recoverable", r.diagonals_recoverable},
              {"paths_without_lone_angle", r.paths_without_lone_angle}};
}

Json plan_to_json(const MeasurementPlan& plan) {
  Json angles = Json::array();
  for (const auto& a : plan.angles) {
    Json groups = Json::array();
    for (const auto& g : a.groups) {
      Json pairs = Json::array();
      for (const auto& p : g.pairs) pairs.push_back({{"i", p.i}, {"j", p.j}, {"spacing_mm", p.spacing_mm}});
      groups.push_back({{"x_m_mm", g.x_m}, {"members", g.members}, {"pairs", pairs}});
    }
    angles.push_back({{"theta_deg", a.theta_deg}, {"groups", groups}});
  }
  return Json{{"dim", plan.dim},
              {"angles", angles},
              {"lone_angles_deg", plan.lone_angles},
              {"direct_image_required", plan.direct_image_required}};
}

Json resource_to_json(const ResourceReport& r) {
  return Json{{"eta", r.eta},
              {"max_eta", r.max_eta},
              {"l_min_mm", r.l_min_mm},
              {"l_max_mm", r.l_max_mm},
              {"nyquist_limit_mm", r.nyquist_limit_mm},
              {"nyquist_ok", r.nyquist_ok},
              {"aperture_ok", r.aperture_ok},
              {"required_pixels", r.required_pixels},
              {"available_pixels", r.available_pixels},
              {"d_max", r.d_max}};
}

Json calibration_to_json(const Calibration& cal) {
  Json factors = Json::array();
  for (const auto& [pair, e] : cal.factors) {
    factors.push_back({{"i", pair.first},
                       {"j", pair.second},
                       {"theta_deg", e.theta_deg},
                       {"re", e.factor.real()},
                       {"im", e.factor.imag()}});
  }
  return Json{{"conjugate", cal.conjugate},
              {"reference_1", cal.reference_1},
              {"reference_2", cal.reference_2},
              {"factors", factors}};
}

Calibration calibration_from_json(const Json& j) {
  return guarded("calibration", [&] {
    Calibration cal;
    cal.conjugate = j.at("conjugate").get<bool>();
    cal.reference_1 = j.value("reference_1", std::string{});
    cal.reference_2 = j.value("reference_2", std::string{});
    for (const auto& f : j.at("factors")) {
      const Complex z(f.at("re").get<double>(), f.at("im").get<double>());
      if (std::abs(std::abs(z) - 1.0) > 1e-9) {
        throw Error(ErrorKind::Parse, "calibration: factor is not unit magnitude");
      }
      cal.factors[{f.at("i").get<int>(), f.at("j").get<int>()}] = {f.at("theta_deg").get<double>(), z};
    }
    return cal;
  });
}

Json result_to_json(const ReconstructionResult& result) {
  Json readings = Json::array();
  for (const auto& r : result.readings) {
    readings.push_back({{"i", r.i},
                        {"j", r.j},
                        {"theta_deg", r.theta_deg},
                        {"x_m_mm", r.x_m_mm},
                        {"amplitude_re", r.amplitude.real()},
                        {"amplitude_im", r.amplitude.imag()},
                        {"value_re", r.value.real()},
                        {"value_im", r.value.imag()},
                        {"zero_frequency", r.zero_frequency},
                        {"signal_to_background", std::isfinite(r.signal_to_background)
                                                     ? Json(r.signal_to_background)
                                                     : Json(nullptr)},
                        {"flagged", r.flagged}});
  }
  const auto& d = result.diagnostics;
  Json residuals = Json::array();
  for (Eigen::Index i = 0; i < d.residuals.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < d.residuals.cols(); ++k) row.push_back(d.residuals(i, k));
    residuals.push_back(row);
  }
  return Json{{"rho_raw", density_to_json(result.rho_raw)},
              {"rho_physical", density_to_json(result.rho_physical)},
              {"readings", readings},
              {"diagnostics",
               {{"psd_violation", d.psd_violation},
                {"min_eigenvalue", d.min_eigenvalue},
                {"diagonal_spread", d.diagonal_spread},
                {"raw_trace", d.raw_trace},
                {"flagged_readings", d.flagged_readings},
                {"residuals", residuals}}}};
}

std::pair<DensityMatrix, DensityMatrix> result_matrices_from_json(const Json& j) {
  return guarded("reconstruction result", [&] {
    return std::pair{density_from_json(j.at("rho_raw")), density_from_json(j.at("rho_physical"))};
  });
}

std::string result_pairs_csv(const ReconstructionResult& result) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "i,j,magnitude,phase_rad,theta_deg\n";
  for (const auto& r : result.readings) {
    if (r.diagonal()) continue;
    os << r.i << "," << r.j << "," << std::abs(r.value) << "," << std::arg(r.value) << ","
       << r.theta_deg << "\n";
  }
  return os.str();
}

Json read_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, file.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& file, const Json& j) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + file.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorKind::Io, "write failed for " + file.string());
}

}  // namespace pathtomo
