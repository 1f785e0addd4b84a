#pragma once

// JSON encodings of the external file formats. Units are carried in key names.

#include <filesystem>

#include <json.hpp>

#include "pathtomo/camera.hpp"
#include "pathtomo/density_matrix.hpp"
#include "pathtomo/geometry.hpp"
#include "pathtomo/optics.hpp"
#include "pathtomo/polarization.hpp"
#include "pathtomo/reconstruct.hpp"

namespace pathtomo {

using Json = nlohmann::json;

void to_json(Json& j, const OpticalConfig& cfg);
void from_json(const Json& j, OpticalConfig& cfg);

/// {"dim": d, "re": [[...]], "im": [[...]]}
Json density_to_json(const DensityMatrix& rho);
/// Validates shape, Hermiticity and trace, naming offending indices.
DensityMatrix density_from_json(const Json& j);

/// {"points_mm": [[x, y], ...], "sigma_mm": s, "label": str}
Json geometry_to_json(const PathGeometry& g);
PathGeometry geometry_from_json(const Json& j);

Json prep_settings_to_json(const PrepSettings& s);
PrepSettings prep_settings_from_json(const Json& j);

Json validity_to_json(const ValidityReport& r);
Json plan_to_json(const MeasurementPlan& plan);
Json resource_to_json(const ResourceReport& r);

Json calibration_to_json(const Calibration& cal);
Calibration calibration_from_json(const Json& j);

/// rho_raw, rho_physical, readings table and diagnostics.
Json result_to_json(const ReconstructionResult& result);
/// Only the two matrices are restored; readings and diagnostics are reports.
std::pair<DensityMatrix, DensityMatrix> result_matrices_from_json(const Json& j);
/// One row per pair: i, j, magnitude, phase_rad, theta_deg.
std::string result_pairs_csv(const ReconstructionResult& result);

Json read_json_file(const std::filesystem::path& file);
/// Pretty-printed, trailing newline.
void write_json_file(const std::filesystem::path& file, const Json& j);

}  // namespace pathtomo
