#include "pathtomo/optics.hpp"

#include <numbers>

#include "pathtomo/error.hpp"

namespace pathtomo {

OpticalConfig OpticalConfig::full_resolution() {
  OpticalConfig cfg;
  cfg.nx = 3088;
  cfg.ny = 2076;
  cfg.pixel_pitch_um = 2.40;
  return cfg;
}

void OpticalConfig::validate() const {
  if (!(wavelength_nm > 0) || !(oft_focal_mm > 0) || !(pixel_pitch_um > 0) || nx <= 0 ||
      ny <= 0 || !(magnification > 0) || !(lens_aperture_mm > 0) || !(exposure > 0)) {
    throw Error(ErrorKind::InvalidArgument, "optical configuration values must be positive");
  }
}

double OpticalConfig::momentum_per_pixel() const {
  return 2.0 * std::numbers::pi * pixel_pitch_mm() / (oft_focal_mm * wavelength_mm());
}

double OpticalConfig::fringe_period_mm(double camera_spacing_mm) const {
  return wavelength_mm() * oft_focal_mm / camera_spacing_mm;
}

double pixel_to_momentum(double pixel, double axis_origin, const OpticalConfig& cfg) {
  return cfg.momentum_per_pixel() * (pixel - axis_origin);
}

}  // namespace pathtomo
