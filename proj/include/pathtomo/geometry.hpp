#pragma once

// Path geometry bookkeeping: segment tables, lens-angle sets, validity of a
// geometry for cylindrical-lens tomography, Golomb rulers and the per-angle
// measurement plan.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pathtomo/optics.hpp"

namespace pathtomo {

/// Positions are compared with this tolerance (1 um).
inline constexpr double kLengthTolMm = 1e-3;
/// Segment directions are merged within this tolerance.
inline constexpr double kAngleTolDeg = 1e-9;

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

class PathGeometry {
 public:
  /// Requires at least one point, distinct positions and sigma > 0.
  PathGeometry(std::vector<Point> points_mm, double sigma_mm, std::string label = {});

  /// 2 x 3 grid {0, 2.7, 6.7} x {0, 2.7} mm left after blocking the x = 4 mm column.
  static PathGeometry grid_2x3(double sigma_mm = 0.34);
  /// Unblocked eight-path output of the three displacers.
  static PathGeometry eight_path(double sigma_mm = 0.34);
  static PathGeometry square(double side_mm = 2.7, double sigma_mm = 0.34);

  std::size_t size() const { return points_.size(); }
  const std::vector<Point>& points() const { return points_; }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  double sigma_mm() const { return sigma_; }
  const std::string& label() const { return label_; }

  Point centroid() const;
  /// Smallest pairwise distance; +inf for a single path.
  double min_separation() const;
  /// True when every pairwise distance exceeds 4 sigma.
  bool overlap_ok() const;

  PathGeometry rotated(double angle_deg, Point about = {}) const;
  PathGeometry translated(Point by) const;

 private:
  std::vector<Point> points_;
  double sigma_;
  std::string label_;
};

/// Infinite line through two paths: direction in [0, 180) degrees and the
/// signed perpendicular offset of the line from the origin.
struct LineId {
  double angle_deg = 0.0;
  double offset_mm = 0.0;
};

bool same_line(const LineId& a, const LineId& b);

struct Segment {
  int i = 0;
  int j = 0;
  double length_mm = 0.0;
  double angle_deg = 0.0;  ///< in [0, 180)
  double dx_mm = 0.0;      ///< x_j - x_i
  double dy_mm = 0.0;      ///< y_j - y_i
  LineId line;
};

/// All d(d-1)/2 segments ordered by i then j.
std::vector<Segment> segment_table(const PathGeometry& g);

/// Distinct segment directions, sorted, merged within kAngleTolDeg.
std::vector<double> angle_set(const PathGeometry& g);

struct SegmentCollision {
  Segment first;
  Segment second;
};

struct ValidityReport {
  /// No two segments on the same line with the same length.
  bool valid = true;
  std::vector<SegmentCollision> collisions;
  /// Pairs closer than 4 sigma.
  std::vector<std::pair<int, int>> overlapping;
  /// Every path is alone on its line for some lens angle.
  bool diagonals_recoverable = true;
  std::vector<int> paths_without_lone_angle;

  std::string to_text() const;
};

ValidityReport validate_geometry(const PathGeometry& g);

/// Erdos-Turan ruler x_i = l_min (2 d i + (i^2 mod d)), i = 0 .. d-1, d an odd prime.
std::vector<double> golomb_ruler(int d, double l_min);

/// True when all segment vectors (up to sign) are distinct.
bool is_nonredundant_rectangle(const PathGeometry& g);

/// Path coordinates in the frame of a lens at angle theta: v runs along the
/// lens (Fourier) axis, u across it. Both are relative to the centroid.
struct LensCoordinate {
  double u = 0.0;
  double v = 0.0;
};

std::vector<LensCoordinate> lens_frame(const PathGeometry& g, double theta_deg);

struct PairEntry {
  int i = 0;
  int j = 0;
  /// Signed v_i - v_j in the path plane; fringes of rho_ij oscillate as exp(i spacing k).
  double spacing_mm = 0.0;
};

/// Paths sharing one transverse coordinate u = x_m at a given lens angle.
struct PathGroup {
  double x_m = 0.0;
  std::vector<int> members;
  std::vector<PairEntry> pairs;
};

struct AnglePlan {
  double theta_deg = 0.0;
  std::vector<PathGroup> groups;
};

struct MeasurementPlan {
  int dim = 0;
  std::vector<AnglePlan> angles;
  /// Lens angles at which each path sits alone in its group.
  std::vector<std::vector<double>> lone_angles;
  /// True when some path has no lone angle, so diagonals need the direct image.
  bool direct_image_required = false;

  const AnglePlan* find(double theta_deg, double tol_deg = 1e-6) const;
  std::size_t pair_count() const;
};

/// Throws InvalidGeometry when validate_geometry fails.
MeasurementPlan plan_measurements(const PathGeometry& g);

struct ResourceReport {
  int eta = 0;
  int max_eta = 0;
  double l_min_mm = 0.0;  ///< camera plane
  double l_max_mm = 0.0;  ///< camera plane
  double nyquist_limit_mm = 0.0;
  bool nyquist_ok = false;
  bool aperture_ok = false;
  int required_pixels = 0;
  int available_pixels = 0;
  double d_max = 0.0;

  std::string to_text() const;
};

ResourceReport resource_report(const PathGeometry& g, const OpticalConfig& cfg);

}  // namespace pathtomo
