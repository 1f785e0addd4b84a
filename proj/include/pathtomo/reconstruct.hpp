#pragma once

// Tomography from camera frames: slice extraction, exact-frequency Fourier
// projection, frame-local normalization, two-reference phase calibration and
// assembly of the density matrix.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pathtomo/camera.hpp"
#include "pathtomo/density_matrix.hpp"
#include "pathtomo/geometry.hpp"

namespace pathtomo {

/// Bilinear rotation about the frame center; samples from outside the frame are 0.
CameraImage rotate_image(const CameraImage& img, double angle_deg);

/// Column nearest to lens-frame coordinate x_m (path-plane mm). For width > 1
/// the average of `width` neighbouring columns; averaging lowers the visibility
/// of tilted fringes.
std::vector<double> extract_slice(const CameraImage& img, double x_m_mm, int width = 1);

/// sum_p slice[p] exp(-i k(p) M spacing), k from pixel_to_momentum. spacing is
/// in the path plane; spacing = 0 gives the total of the slice.
Complex peak_at_frequency(std::span<const double> slice, double spacing_mm, double axis_origin,
                          const OpticalConfig& cfg);

/// 2 |S_12| / S_0: fringe visibility of a two-path slice.
double fringe_visibility(std::span<const double> slice, double spacing_mm, double axis_origin,
                         const OpticalConfig& cfg);

/// |DFT| of a slice at bins 0 .. n/2, for plotting. Not used by the readout.
std::vector<double> slice_spectrum(std::span<const double> slice);

struct BackgroundEstimate {
  double level = 0.0;  ///< per pixel
  double sigma = 0.0;  ///< per pixel
};

/// Median and MAD spread of the top and bottom border rows.
BackgroundEstimate estimate_background(const CameraImage& img, int border_rows = 16);

struct PeakReading {
  int i = 0;
  int j = 0;  ///< equals i for a diagonal (zero-frequency) reading
  /// Raw projection; for pairs it is oriented so that it names rho_ij.
  Complex amplitude;
  /// amplitude / S with S the sum of the frame's zero-frequency readings.
  Complex value;
  double zero_frequency = 0.0;
  /// S, the frame normalization used for value.
  double normalization = 0.0;
  double theta_deg = 0.0;
  double x_m_mm = 0.0;
  double signal_to_background = 0.0;
  bool flagged = false;

  bool diagonal() const { return i == j; }
};

struct MeasureOptions {
  int slice_width = 1;
  bool subtract_background = true;
};

/// Odd slice width of about one camera-plane beam width M sigma. Wider slices
/// collect more light at the cost of some visibility; useful under shot noise.
int matched_slice_width(const PathGeometry& g, const OpticalConfig& cfg);

/// Pair readings for every group at theta plus diagonal readings for lone paths.
std::vector<PeakReading> measure_angle(const CameraImage& img, double theta_deg,
                                       const MeasurementPlan& plan,
                                       const MeasureOptions& options = {});

/// Unit-magnitude phase factor per pair; with `conjugate` set, readings are
/// conjugated before the factor is applied.
struct Calibration {
  struct Entry {
    double theta_deg = 0.0;
    Complex factor{1.0, 0.0};
  };
  std::map<std::pair<int, int>, Entry> factors;
  bool conjugate = false;
  std::string reference_1;
  std::string reference_2;

  static Calibration identity() { return {}; }
  Complex apply(int i, int j, Complex reading) const;
};

struct FrameSet {
  std::optional<CameraImage> direct;
  std::vector<CameraImage> oft;

  const CameraImage* find(double theta_deg, double tol_deg = 1e-6) const;
};

struct ReferenceRun {
  std::string name;
  DensityMatrix known;
  FrameSet frames;
};

/// Factor for each pair from the first reference; the conjugation convention is
/// whichever gives the higher fidelity on the second reference.
/// Throws UnusableReference when a reference coherence reading is below 0.02.
Calibration calibrate(const ReferenceRun& first, const ReferenceRun& second,
                      const MeasurementPlan& plan, const PathGeometry& g,
                      const MeasureOptions& options = {});

/// Sums disks of radius 3 M sigma around each path and normalizes to one.
/// The unnormalized disk total is stored in total_counts when given.
std::vector<double> diagonals_from_direct(const CameraImage& img, const PathGeometry& g,
                                          bool subtract_background = true,
                                          double* total_counts = nullptr);

struct Diagnostics {
  /// |rho_raw - rho_physical| per element.
  Eigen::MatrixXd residuals;
  double psd_violation = 0.0;
  double min_eigenvalue = 0.0;
  /// Largest disagreement between diagonal estimates of one path.
  double diagonal_spread = 0.0;
  /// Trace of the assembled matrix before normalization.
  double raw_trace = 0.0;
  int flagged_readings = 0;
};

struct ReconstructionResult {
  DensityMatrix rho_raw;
  DensityMatrix rho_physical;
  std::vector<PeakReading> readings;
  Diagnostics diagnostics;
};

ReconstructionResult reconstruct_state(const FrameSet& frames, const MeasurementPlan& plan,
                                       const PathGeometry& g, const Calibration& cal,
                                       const OpticalConfig& cfg,
                                       const MeasureOptions& options = {});

}  // namespace pathtomo
