#include "pathtomo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "pathtomo/error.hpp"

namespace pathtomo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double reduce_angle(double deg) {
  double a = std::fmod(deg, 180.0);
  if (a < 0) a += 180.0;
  if (a >= 180.0) a -= 180.0;
  return a;
}

LineId line_through(const Point& p, double angle_deg) {
  const double a = angle_deg * kDeg;
  return {angle_deg, -p.x * std::sin(a) + p.y * std::cos(a)};
}

bool is_odd_prime(int d) {
  if (d < 3 || d % 2 == 0) return false;
  for (int q = 3; q * q <= d; q += 2) {
    if (d % q == 0) return false;
  }
  return true;
}

// Groups of path indices with equal u (within kLengthTolMm), ascending in u.
std::vector<std::vector<int>> group_by_u(const std::vector<LensCoordinate>& frame) {
  std::vector<int> order(frame.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return frame[a].u < frame[b].u; });
  std::vector<std::vector<int>> groups;
  for (int idx : order) {
    if (!groups.empty() && frame[idx].u - frame[groups.back().back()].u < kLengthTolMm) {
      groups.back().push_back(idx);
    } else {
      groups.push_back({idx});
    }
  }
  for (auto& g : groups) std::sort(g.begin(), g.end());
  return groups;
}

}  // namespace

PathGeometry::PathGeometry(std::vector<Point> points_mm, double sigma_mm, std::string label)
    : points_(std::move(points_mm)), sigma_(sigma_mm), label_(std::move(label)) {
  if (points_.empty()) throw Error(ErrorKind::InvalidGeometry, "geometry needs at least one path");
  if (!(sigma_ > 0)) throw Error(ErrorKind::InvalidGeometry, "sigma must be positive");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      if (std::hypot(points_[i].x - points_[j].x, points_[i].y - points_[j].y) < kLengthTolMm) {
        std::ostringstream os;
        os << "paths " << i << " and " << j << " coincide";
        throw Error(ErrorKind::InvalidGeometry, os.str());
      }
    }
  }
}

PathGeometry PathGeometry::grid_2x3(double sigma_mm) {
  return PathGeometry({{0.0, 0.0}, {2.7, 0.0}, {6.7, 0.0}, {0.0, 2.7}, {2.7, 2.7}, {6.7, 2.7}},
                      sigma_mm, "grid2x3");
}

PathGeometry PathGeometry::eight_path(double sigma_mm) {
  std::vector<Point> pts;
  for (double y : {0.0, 2.7}) {
    for (double x : {0.0, 2.7, 4.0, 6.7}) pts.push_back({x, y});
  }
  return PathGeometry(std::move(pts), sigma_mm, "eight_path");
}

PathGeometry PathGeometry::square(double side_mm, double sigma_mm) {
  return PathGeometry({{0.0, 0.0}, {side_mm, 0.0}, {0.0, side_mm}, {side_mm, side_mm}}, sigma_mm,
                      "square");
}

Point PathGeometry::centroid() const {
  Point c;
  for (const auto& p : points_) {
    c.x += p.x;
    c.y += p.y;
  }
  c.x /= static_cast<double>(points_.size());
  c.y /= static_cast<double>(points_.size());
  return c;
}

double PathGeometry::min_separation() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      best = std::min(best, std::hypot(points_[i].x - points_[j].x, points_[i].y - points_[j].y));
    }
  }
  return best;
}

bool PathGeometry::overlap_ok() const { return min_separation() > 4.0 * sigma_; }

PathGeometry PathGeometry::rotated(double angle_deg, Point about) const {
  const double c = std::cos(angle_deg * kDeg);
  const double s = std::sin(angle_deg * kDeg);
  std::vector<Point> pts;
  pts.reserve(points_.size());
  for (const auto& p : points_) {
    const double x = p.x - about.x;
    const double y = p.y - about.y;
    pts.push_back({about.x + c * x - s * y, about.y + s * x + c * y});
  }
  return PathGeometry(std::move(pts), sigma_, label_);
}

PathGeometry PathGeometry::translated(Point by) const {
  std::vector<Point> pts = points_;
  for (auto& p : pts) {
    p.x += by.x;
    p.y += by.y;
  }
  return PathGeometry(std::move(pts), sigma_, label_);
}

bool same_line(const LineId& a, const LineId& b) {
  const double diff = std::abs(a.angle_deg - b.angle_deg);
  if (diff < kAngleTolDeg) return std::abs(a.offset_mm - b.offset_mm) < kLengthTolMm;
  // Directions just below 180 and just above 0 describe the same line with the
  // perpendicular flipped.
  if (180.0 - diff < kAngleTolDeg) return std::abs(a.offset_mm + b.offset_mm) < kLengthTolMm;
  return false;
}

std::vector<Segment> segment_table(const PathGeometry& g) {
  std::vector<Segment> out;
  const auto& pts = g.points();
  out.reserve(pts.size() * (pts.size() - 1) / 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      Segment s;
      s.i = static_cast<int>(i);
      s.j = static_cast<int>(j);
      s.dx_mm = pts[j].x - pts[i].x;
      s.dy_mm = pts[j].y - pts[i].y;
      s.length_mm = std::hypot(s.dx_mm, s.dy_mm);
      s.angle_deg = reduce_angle(std::atan2(s.dy_mm, s.dx_mm) / kDeg);
      s.line = line_through(pts[i], s.angle_deg);
      out.push_back(s);
    }
  }
  return out;
}

std::vector<double> angle_set(const PathGeometry& g) {
  std::vector<double> raw;
  for (const auto& s : segment_table(g)) raw.push_back(s.angle_deg);
  std::sort(raw.begin(), raw.end());
  std::vector<double> out;
  for (double a : raw) {
    if (out.empty() || a - out.back() >= kAngleTolDeg) out.push_back(a);
  }
  if (out.size() > 1 && out.front() + 180.0 - out.back() < kAngleTolDeg) out.pop_back();
  return out;
}

std::string ValidityReport::to_text() const {
  std::ostringstream os;
  os << (valid ? "PASS" : "FAIL") << "\n";
  for (const auto& c : collisions) {
    os << "  collision: segment (" << c.first.i << "," << c.first.j << ") and segment ("
       << c.second.i << "," << c.second.j << ") lie on the same line (angle "
       << c.first.angle_deg << " deg) with length " << c.first.length_mm << " mm\n";
  }
  for (const auto& [i, j] : overlapping) {
    os << "  overlap: paths " << i << " and " << j << " are closer than 4 sigma\n";
  }
  if (diagonals_recoverable) {
    os << "  every path is alone on its line at some lens angle\n";
  } else {
    os << "  direct image required for diagonals of paths:";
    for (int p : paths_without_lone_angle) os << " " << p;
    os << "\n";
  }
  return os.str();
}

ValidityReport validate_geometry(const PathGeometry& g) {
  ValidityReport report;
  const auto segments = segment_table(g);
  for (std::size_t a = 0; a < segments.size(); ++a) {
    for (std::size_t b = a + 1; b < segments.size(); ++b) {
      if (same_line(segments[a].line, segments[b].line) &&
          std::abs(segments[a].length_mm - segments[b].length_mm) < kLengthTolMm) {
        report.collisions.push_back({segments[a], segments[b]});
      }
    }
  }
  report.valid = report.collisions.empty();
  for (const auto& s : segments) {
    if (!(s.length_mm > 4.0 * g.sigma_mm())) report.overlapping.emplace_back(s.i, s.j);
  }
  std::vector<bool> lone(g.size(), false);
  for (double theta : angle_set(g)) {
    for (const auto& group : group_by_u(lens_frame(g, theta))) {
      if (group.size() == 1) lone[group.front()] = true;
    }
  }
  if (g.size() == 1) lone[0] = true;
  for (std::size_t i = 0; i < lone.size(); ++i) {
    if (!lone[i]) report.paths_without_lone_angle.push_back(static_cast<int>(i));
  }
  report.diagonals_recoverable = report.paths_without_lone_angle.empty();
  return report;
}

std::vector<double> golomb_ruler(int d, double l_min) {
  if (!is_odd_prime(d)) {
    throw Error(ErrorKind::ConstructionUndefined,
                "Erdos-Turan ruler needs an odd prime number of marks, got " + std::to_string(d));
  }
  if (!(l_min > 0)) throw Error(ErrorKind::InvalidArgument, "l_min must be positive");
  std::vector<double> marks;
  marks.reserve(d);
  for (long long i = 0; i < d; ++i) {
    marks.push_back(l_min * static_cast<double>(2LL * d * i + (i * i) % d));
  }
  return marks;
}

bool is_nonredundant_rectangle(const PathGeometry& g) {
  std::vector<Point> vectors;
  for (const auto& s : segment_table(g)) {
    Point v{s.dx_mm, s.dy_mm};
    if (v.x < -kLengthTolMm || (std::abs(v.x) < kLengthTolMm && v.y < 0)) v = {-v.x, -v.y};
    vectors.push_back(v);
  }
  for (std::size_t a = 0; a < vectors.size(); ++a) {
    for (std::size_t b = a + 1; b < vectors.size(); ++b) {
      if (std::abs(vectors[a].x - vectors[b].x) < kLengthTolMm &&
          std::abs(vectors[a].y - vectors[b].y) < kLengthTolMm) {
        return false;
      }
    }
  }
  return true;
}

std::vector<LensCoordinate> lens_frame(const PathGeometry& g, double theta_deg) {
  const double c = std::cos(theta_deg * kDeg);
  const double s = std::sin(theta_deg * kDeg);
  const Point center = g.centroid();
  std::vector<LensCoordinate> out;
  out.reserve(g.size());
  for (const auto& p : g.points()) {
    const double x = p.x - center.x;
    const double y = p.y - center.y;
    out.push_back({-x * s + y * c, x * c + y * s});
  }
  return out;
}

const AnglePlan* MeasurementPlan::find(double theta_deg, double tol_deg) const {
  for (const auto& a : angles) {
    if (std::abs(a.theta_deg - theta_deg) < tol_deg) return &a;
  }
  return nullptr;
}

std::size_t MeasurementPlan::pair_count() const {
  std::size_t n = 0;
  for (const auto& a : angles) {
    for (const auto& grp : a.groups) n += grp.pairs.size();
  }
  return n;
}

MeasurementPlan plan_measurements(const PathGeometry& g) {
  const auto report = validate_geometry(g);
  if (!report.valid) {
    throw Error(ErrorKind::InvalidGeometry,
                "geometry has collinear equal-length segments:\n" + report.to_text());
  }
  MeasurementPlan plan;
  plan.dim = static_cast<int>(g.size());
  plan.lone_angles.assign(g.size(), {});
  for (double theta : angle_set(g)) {
    AnglePlan ap;
    ap.theta_deg = theta;
    const auto frame = lens_frame(g, theta);
    for (const auto& members : group_by_u(frame)) {
      PathGroup grp;
      double u = 0;
      for (int m : members) u += frame[m].u;
      grp.x_m = u / static_cast<double>(members.size());
      grp.members = members;
      for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          const int i = members[a];
          const int j = members[b];
          grp.pairs.push_back({i, j, frame[i].v - frame[j].v});
        }
      }
      if (members.size() == 1) plan.lone_angles[members.front()].push_back(theta);
      ap.groups.push_back(std::move(grp));
    }
    plan.angles.push_back(std::move(ap));
  }
  plan.direct_image_required = !report.diagonals_recoverable;
  return plan;
}

std::string ResourceReport::to_text() const {
  std::ostringstream os;
  os << "eta (lens settings): " << eta << " (bound d(d-1)/2 = " << max_eta << ")\n"
     << "L_min at camera: " << l_min_mm << " mm\n"
     << "L_max at camera: " << l_max_mm << " mm\n"
     << "Nyquist limit lambda f / (pi gamma): " << nyquist_limit_mm << " mm -> "
     << (nyquist_ok ? "ok" : "VIOLATED") << "\n"
     << "lens aperture: " << (aperture_ok ? "ok" : "VIOLATED") << "\n"
     << "pixels required along the lens axis: " << required_pixels << " (available "
     << available_pixels << ")\n"
     << "d_max estimate L_max/L_min: " << d_max << "\n";
  return os.str();
}

ResourceReport resource_report(const PathGeometry& g, const OpticalConfig& cfg) {
  cfg.validate();
  ResourceReport r;
  const int d = static_cast<int>(g.size());
  r.max_eta = d * (d - 1) / 2;
  r.eta = d > 1 ? static_cast<int>(angle_set(g).size()) : 0;
  r.nyquist_limit_mm =
      cfg.wavelength_mm() * cfg.oft_focal_mm / (std::numbers::pi * cfg.pixel_pitch_mm());
  const auto segments = segment_table(g);
  if (!segments.empty()) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0;
    for (const auto& s : segments) {
      lo = std::min(lo, s.length_mm);
      hi = std::max(hi, s.length_mm);
    }
    r.l_min_mm = cfg.magnification * lo;
    r.l_max_mm = cfg.magnification * hi;
    r.d_max = r.l_max_mm / r.l_min_mm;
    r.required_pixels = static_cast<int>(std::floor(r.d_max)) + 1;
  }
  r.nyquist_ok = r.l_max_mm < r.nyquist_limit_mm;
  r.aperture_ok = r.l_max_mm < cfg.lens_aperture_mm;
  r.available_pixels = cfg.ny;
  return r;
}

}  // namespace pathtomo
