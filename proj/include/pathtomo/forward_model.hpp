#pragma once

// Camera frames of a path state: direct images of the path intensities and
// images behind a cylindrical lens whose Fourier axis makes angle theta with x.

#include <cstdint>

#include "pathtomo/camera.hpp"
#include "pathtomo/density_matrix.hpp"
#include "pathtomo/geometry.hpp"
#include "pathtomo/optics.hpp"

namespace pathtomo {

/// Direct image: sum_i rho_ii G(x - M x_i, y - M y_i) with G a unit-integral
/// Gaussian of 1/e^2 radius M sigma. The geometry centroid sits at the frame center.
CameraImage direct_image(const DensityMatrix& rho, const PathGeometry& g, const OpticalConfig& cfg,
                         const NoiseModel& noise = {}, std::uint64_t seed = 0);

struct OftOptions {
  /// Shift of the true k = 0 row away from the center row, in pixels.
  double origin_offset_px = 0.0;
  /// Flip the k axis (camera mounted upside down).
  bool mirror_k = false;
};

/// Image behind the rotated cylindrical lens, synthesized in the lens frame:
/// I(u, k) = E |psi(k)|^2 sum_ij rho_ij g(u - u_i) g(u - u_j) exp(i (v_i - v_j) k).
/// Throws Aliasing when an interfering pair's fringe period is below 2 pixels.
CameraImage oft_image(const DensityMatrix& rho, const PathGeometry& g, double theta_deg,
                      const OpticalConfig& cfg, const NoiseModel& noise = {},
                      const OftOptions& options = {}, std::uint64_t seed = 0);

/// Camera column of a lens-frame transverse coordinate u (path-plane mm).
double column_of(double u_mm, const OpticalConfig& cfg);

}  // namespace pathtomo
