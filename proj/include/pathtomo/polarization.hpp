#pragma once

// Jones-calculus model of the state-preparation optics: waveplates, calcite
// beam displacers, path blocking and the spinning half-waveplate mixer.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pathtomo/density_matrix.hpp"
#include "pathtomo/geometry.hpp"

namespace pathtomo {

enum class Polarization { H = 0, V = 1 };
enum class Waveplate { Half, Quarter };

/// HWP(t) = [[cos2t, sin2t], [sin2t, -cos2t]];
/// QWP(t) = [[cos^2 t + i sin^2 t, (1-i) sin t cos t], [(1-i) sin t cos t, sin^2 t + i cos^2 t]].
Eigen::Matrix2cd jones_matrix(Waveplate kind, double angle_deg);

/// Photon state over (path slot, polarization). Joint index is 2 * slot + pol.
/// Slots are kept even when empty so the emitted geometry does not depend on
/// waveplate angles.
class PolPathState {
 public:
  PolPathState(std::vector<Point> positions, Eigen::MatrixXcd joint);

  static PolPathState single_path(Point position, const Eigen::Vector2cd& jones);
  static PolPathState single_path(Point position, Polarization pol);

  int num_paths() const { return static_cast<int>(positions_.size()); }
  const std::vector<Point>& positions() const { return positions_; }
  const Eigen::MatrixXcd& joint() const { return joint_; }

  double trace() const { return joint_.trace().real(); }
  double path_weight(int slot) const;
  /// Trace over polarization.
  DensityMatrix path_state() const;
  /// Path state behind a linear polarizer at analyzer_deg from H.
  DensityMatrix analyzed_path_state(double analyzer_deg) const;
  /// Fraction of the light passed by that polarizer.
  double analyzer_transmission(double analyzer_deg) const;
  /// Trace over paths.
  Eigen::Matrix2cd polarization_state() const;
  /// Drops slots whose weight is below tol.
  PolPathState compact(double tol = 1e-14) const;
  /// Reorders slots by (y, x).
  PolPathState sorted() const;

 private:
  std::vector<Point> positions_;
  Eigen::MatrixXcd joint_;
};

PolPathState apply_waveplate(const PolPathState& state, Waveplate kind, double angle_deg);

/// Moves the shift_pol component of every slot by shift. Each slot splits into
/// an unshifted slot (same index) and a shifted slot appended at the end.
/// Throws PathMerge when two occupied slots land on the same position.
PolPathState apply_displacer(const PolPathState& state, Polarization shift_pol, Point shift_mm);

struct BlockResult {
  PolPathState state;
  double discarded_probability = 0.0;
};

/// Removes the listed slots and renormalizes. Throws EmptyState when nothing survives.
BlockResult block_paths(const PolPathState& state, const std::vector<int>& indices);

/// Uniform average of HWP(theta) rho HWP(theta) over the spin angle theta.
PolPathState apply_spinning_hwp(const PolPathState& state);

/// HWP(tau) -> QWP(0) -> spinning HWP -> QWP(90).
PolPathState mix_spinning_hwp(const PolPathState& state, double tau_deg);

struct PairCoherence {
  int i = 0;
  int j = 0;
  double factor = 1.0;  ///< in [0, 1]
};

/// Multiplies rho_ij (and rho_ji) by each factor. Throws UnphysicalInput if the
/// result is no longer positive semidefinite.
DensityMatrix apply_decoherence(const DensityMatrix& rho, const std::vector<PairCoherence>& factors);

struct PrepSettings {
  double phi_deg = 22.5;
  double zeta_deg = 45.0;
  double omega_deg = 22.5;
  std::optional<double> tau_deg;
  /// The square preparation replaces this plate by a half waveplate.
  Waveplate zeta_plate = Waveplate::Quarter;
  /// Indices into the eight slots sorted by (y, x); empty means the x = shift_X column.
  std::optional<std::vector<int>> blocked;
  double shift_x_mm = 2.7;
  double shift_y_mm = 2.7;
  double shift_X_mm = 4.0;
  double sigma_mm = 0.34;
  std::vector<PairCoherence> decoherence;
  /// Linear polarizer in front of the analysis optics. Paths leave the last
  /// displacer with orthogonal polarizations and only interfere behind it.
  /// Empty means no polarizer: the polarization is traced out.
  std::optional<double> analyzer_deg = 45.0;

  /// Throws InvalidArgument for repeated or out-of-range blocked indices.
  void validate() const;
};

struct PreparedState {
  DensityMatrix rho;
  PathGeometry geometry;
  double discarded_probability = 0.0;
};

/// Eight-slot output of the three displacers, sorted by (y, x), before blocking.
PolPathState eight_path_state(const PrepSettings& settings);

/// Six-path (by default) state of the displacer chain.
PreparedState prepare_six_path_state(const PrepSettings& settings);

/// Four paths on a square: two displacers, half waveplates at 22.5 deg.
PreparedState prepare_square_state(double side_mm, std::optional<double> tau_deg,
                                   double sigma_mm = 0.34,
                                   std::optional<double> analyzer_deg = 45.0);

/// (5 + 4 cos^2(4 tau)) / 9, the path purity of the mixed six-path state.
double theory_mixed_purity(double tau_deg);

}  // namespace pathtomo
