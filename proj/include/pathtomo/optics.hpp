#pragma once

#include <string>

namespace pathtomo {

/// Camera and lens parameters. Units follow the external file format:
/// nm for wavelength, mm for focal lengths and apertures, um for pixel pitch.
struct OpticalConfig {
  double wavelength_nm = 808.0;
  double oft_focal_mm = 250.0;
  double pixel_pitch_um = 9.6;
  int nx = 772;
  int ny = 519;
  /// Relay magnification applied to path positions and widths at the camera.
  double magnification = 0.4;
  double lens_aperture_mm = 25.4;
  /// Expected total signal of a noiseless frame.
  double exposure = 1e6;

  /// Full 3088 x 2076 sensor with 2.40 um pixels.
  static OpticalConfig full_resolution();
  /// Same sensor binned 4 x 4: 772 x 519 pixels of 9.6 um.
  static OpticalConfig desk() { return {}; }

  /// Throws InvalidArgument when a physical quantity is not positive.
  void validate() const;

  double wavelength_mm() const { return wavelength_nm * 1e-6; }
  double pixel_pitch_mm() const { return pixel_pitch_um * 1e-3; }
  /// Momentum step between adjacent pixels, 2 pi gamma / (f lambda), in rad/mm.
  double momentum_per_pixel() const;
  /// Camera-plane fringe period lambda f / L for a camera-plane spacing L.
  double fringe_period_mm(double camera_spacing_mm) const;
  double center_column() const { return 0.5 * (nx - 1); }
  double center_row() const { return 0.5 * (ny - 1); }

  bool operator==(const OpticalConfig&) const = default;
};

/// k = 2 pi gamma (p - origin) / (f lambda), rad/mm.
double pixel_to_momentum(double pixel, double axis_origin, const OpticalConfig& cfg);

}  // namespace pathtomo
