#include "pathtomo/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "pathtomo/error.hpp"
#include "pathtomo/forward_model.hpp"

namespace pathtomo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMinReferenceCoherence = 0.02;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::string pair_name(int i, int j) {
  std::ostringstream os;
  os << "(" << i << "," << j << ")";
  return os.str();
}

double bilinear(const CameraImage& img, double x, double y) {
  if (x < 0 || y < 0 || x > img.width - 1 || y > img.height - 1) return 0.0;
  const int x0 = std::min(static_cast<int>(x), std::max(img.width - 2, 0));
  const int y0 = std::min(static_cast<int>(y), std::max(img.height - 2, 0));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  return (1 - fx) * (1 - fy) * img.at(x0, y0) + fx * (1 - fy) * img.at(x1, y0) +
         (1 - fx) * fy * img.at(x0, y1) + fx * fy * img.at(x1, y1);
}

}  // namespace

CameraImage rotate_image(const CameraImage& img, double angle_deg) {
  CameraImage out = img;
  if (angle_deg == 0.0) return out;
  const double c = std::cos(angle_deg * kDeg);
  const double s = std::sin(angle_deg * kDeg);
  const double cx = 0.5 * (img.width - 1);
  const double cy = 0.5 * (img.height - 1);
  for (int r = 0; r < img.height; ++r) {
    for (int col = 0; col < img.width; ++col) {
      const double x = col - cx;
      const double y = r - cy;
      // Inverse map: the output pixel came from the input rotated by -angle.
      out.at(col, r) = bilinear(img, cx + c * x + s * y, cy - s * x + c * y);
    }
  }
  out.rotation_deg += angle_deg;
  return out;
}

std::vector<double> extract_slice(const CameraImage& img, double x_m_mm, int width) {
  if (width < 1) throw Error(ErrorKind::InvalidArgument, "slice width must be at least 1");
  const double col = column_of(x_m_mm, img.config);
  const int center = static_cast<int>(std::lround(col));
  const int first = center - (width - 1) / 2;
  const int last = first + width - 1;
  if (first < 0 || last >= img.width) {
    std::ostringstream os;
    os << "slice at x_m = " << x_m_mm << " mm (column " << col << ") is outside the frame";
    throw Error(ErrorKind::OutOfFrame, os.str());
  }
  std::vector<double> slice(img.height, 0.0);
  for (int r = 0; r < img.height; ++r) {
    double s = 0;
    for (int c = first; c <= last; ++c) s += img.at(c, r);
    slice[r] = s / width;
  }
  return slice;
}

Complex peak_at_frequency(std::span<const double> slice, double spacing_mm, double axis_origin,
                          const OpticalConfig& cfg) {
  const double camera_spacing = cfg.magnification * spacing_mm;
  if (camera_spacing == 0.0) {
    double s = 0;
    for (double v : slice) s += v;
    return {s, 0.0};
  }
  Complex acc{0.0, 0.0};
  for (std::size_t p = 0; p < slice.size(); ++p) {
    const double k = pixel_to_momentum(static_cast<double>(p), axis_origin, cfg);
    acc += slice[p] * std::polar(1.0, -k * camera_spacing);
  }
  return acc;
}

double fringe_visibility(std::span<const double> slice, double spacing_mm, double axis_origin,
                         const OpticalConfig& cfg) {
  const double dc = peak_at_frequency(slice, 0.0, axis_origin, cfg).real();
  if (dc <= 0) throw Error(ErrorKind::DegenerateInput, "slice has no signal");
  return 2.0 * std::abs(peak_at_frequency(slice, spacing_mm, axis_origin, cfg)) / dc;
}

BackgroundEstimate estimate_background(const CameraImage& img, int border_rows) {
  border_rows = std::clamp(border_rows, 1, std::max(1, img.height / 2));
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(2 * border_rows) * img.width);
  for (int r = 0; r < border_rows; ++r) {
    for (int c = 0; c < img.width; ++c) {
      samples.push_back(img.at(c, r));
      samples.push_back(img.at(c, img.height - 1 - r));
    }
  }
  BackgroundEstimate est;
  est.level = median(samples);
  std::vector<double> dev;
  dev.reserve(samples.size());
  for (double v : samples) dev.push_back(std::abs(v - est.level));
  est.sigma = 1.4826 * median(std::move(dev));
  return est;
}

std::vector<double> slice_spectrum(std::span<const double> slice) {
  const std::size_t n = slice.size();
  std::vector<double> out(n / 2 + 1, 0.0);
  for (std::size_t b = 0; b < out.size(); ++b) {
    Complex acc{0.0, 0.0};
    for (std::size_t p = 0; p < n; ++p) {
      acc += slice[p] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(b * p % n) / n);
    }
    out[b] = std::abs(acc);
  }
  return out;
}

int matched_slice_width(const PathGeometry& g, const OpticalConfig& cfg) {
  const double beam_px = cfg.magnification * g.sigma_mm() / cfg.pixel_pitch_mm();
  return 2 * static_cast<int>(std::lround(beam_px / 2.0)) + 1;
}

std::vector<PeakReading> measure_angle(const CameraImage& img, double theta_deg,
                                       const MeasurementPlan& plan, const MeasureOptions& options) {
  const AnglePlan* ap = plan.find(theta_deg);
  if (ap == nullptr) {
    std::ostringstream os;
    os << "lens angle " << theta_deg << " deg is not in the measurement plan";
    throw Error(ErrorKind::IncompletePlan, os.str());
  }
  const OpticalConfig& cfg = img.config;
  const double origin = cfg.center_row();
  const BackgroundEstimate bg =
      options.subtract_background ? estimate_background(img) : BackgroundEstimate{};
  const double floor = bg.sigma * std::sqrt(static_cast<double>(img.height));

  std::vector<PeakReading> readings;
  double normalization = 0.0;
  for (const auto& group : ap->groups) {
    std::vector<double> slice = extract_slice(img, group.x_m, options.slice_width);
    for (double& v : slice) v -= bg.level;
    const double dc = peak_at_frequency(slice, 0.0, origin, cfg).real();
    normalization += dc;
    const double snr = floor > 0 ? dc / floor : std::numeric_limits<double>::infinity();
    const bool flagged = dc <= 0 || dc < 5.0 * floor;
    auto base = [&](int i, int j) {
      PeakReading r;
      r.i = i;
      r.j = j;
      r.zero_frequency = dc;
      r.theta_deg = ap->theta_deg;
      r.x_m_mm = group.x_m;
      r.signal_to_background = snr;
      r.flagged = flagged;
      return r;
    };
    if (group.members.size() == 1) {
      PeakReading r = base(group.members.front(), group.members.front());
      r.amplitude = dc;
      readings.push_back(r);
    }
    for (const auto& pair : group.pairs) {
      PeakReading r = base(pair.i, pair.j);
      // Negative spacings read the conjugate peak rho_ji.
      const Complex peak = peak_at_frequency(slice, std::abs(pair.spacing_mm), origin, cfg);
      r.amplitude = pair.spacing_mm >= 0 ? peak : std::conj(peak);
      readings.push_back(r);
    }
  }
  for (auto& r : readings) {
    r.normalization = normalization;
    r.value = normalization != 0.0 ? r.amplitude / normalization : Complex{};
  }
  return readings;
}

Complex Calibration::apply(int i, int j, Complex reading) const {
  const Complex v = conjugate ? std::conj(reading) : reading;
  const auto it = factors.find({i, j});
  return it == factors.end() ? v : v * it->second.factor;
}

const CameraImage* FrameSet::find(double theta_deg, double tol_deg) const {
  for (const auto& f : oft) {
    if (f.theta_deg && std::abs(*f.theta_deg - theta_deg) < tol_deg) return &f;
  }
  return nullptr;
}

namespace {

std::vector<PeakReading> measure_all(const FrameSet& frames, const MeasurementPlan& plan,
                                     const MeasureOptions& options) {
  std::vector<PeakReading> all;
  std::vector<std::string> missing;
  for (const auto& ap : plan.angles) {
    const CameraImage* img = frames.find(ap.theta_deg);
    if (img == nullptr) {
      for (const auto& grp : ap.groups) {
        for (const auto& p : grp.pairs) missing.push_back(pair_name(p.i, p.j));
      }
      continue;
    }
    auto r = measure_angle(*img, ap.theta_deg, plan, options);
    all.insert(all.end(), r.begin(), r.end());
  }
  if (!missing.empty()) {
    std::string msg = "no frame covers pairs";
    for (const auto& m : missing) msg += " " + m;
    throw Error(ErrorKind::IncompletePlan, msg);
  }
  return all;
}

Complex unit(Complex z) { return z / std::abs(z); }

}  // namespace

Calibration calibrate(const ReferenceRun& first, const ReferenceRun& second,
                      const MeasurementPlan& plan, const PathGeometry& g,
                      const MeasureOptions& options) {
  auto check = [&](const ReferenceRun& ref, const std::vector<PeakReading>& readings) {
    if (ref.known.dim() != plan.dim) {
      throw Error(ErrorKind::InvalidArgument, "reference " + ref.name + " has the wrong dimension");
    }
    for (const auto& r : readings) {
      if (r.diagonal()) continue;
      if (std::abs(r.value) < kMinReferenceCoherence ||
          std::abs(ref.known(r.i, r.j)) < kMinReferenceCoherence) {
        throw Error(ErrorKind::UnusableReference,
                    "reference " + ref.name + " has a vanishing coherence at pair " +
                        pair_name(r.i, r.j));
      }
    }
  };
  const auto first_readings = measure_all(first.frames, plan, options);
  check(first, first_readings);
  const auto second_readings = measure_all(second.frames, plan, options);
  check(second, second_readings);

  Calibration direct;
  Calibration conjugated;
  conjugated.conjugate = true;
  for (const auto& r : first_readings) {
    if (r.diagonal()) continue;
    const Complex known = unit(first.known(r.i, r.j));
    const Complex measured = unit(r.value);
    direct.factors[{r.i, r.j}] = {r.theta_deg, std::conj(measured) * known};
    conjugated.factors[{r.i, r.j}] = {r.theta_deg, measured * known};
  }

  const OpticalConfig& cfg =
      second.frames.oft.empty() ? OpticalConfig{} : second.frames.oft.front().config;
  const double f_direct = fidelity(
      reconstruct_state(second.frames, plan, g, direct, cfg, options).rho_physical, second.known);
  const double f_conj =
      fidelity(reconstruct_state(second.frames, plan, g, conjugated, cfg, options).rho_physical,
               second.known);
  Calibration out = f_conj > f_direct ? conjugated : direct;
  out.reference_1 = first.name;
  out.reference_2 = second.name;
  return out;
}

std::vector<double> diagonals_from_direct(const CameraImage& img, const PathGeometry& g,
                                          bool subtract_background, double* total_counts) {
  if (img.theta_deg) throw Error(ErrorKind::InvalidArgument, "expected a direct (lens-free) image");
  const OpticalConfig& cfg = img.config;
  const double pitch = cfg.pixel_pitch_mm();
  const double radius = 3.0 * cfg.magnification * g.sigma_mm() / pitch;  // pixels
  const Point center = g.centroid();
  std::vector<Point> px;
  for (const auto& p : g.points()) {
    px.push_back({cfg.center_column() + cfg.magnification * (p.x - center.x) / pitch,
                  cfg.center_row() + cfg.magnification * (p.y - center.y) / pitch});
  }
  for (std::size_t i = 0; i < px.size(); ++i) {
    for (std::size_t j = i + 1; j < px.size(); ++j) {
      if (std::hypot(px[i].x - px[j].x, px[i].y - px[j].y) < 2.0 * radius) {
        throw Error(ErrorKind::InvalidGeometry,
                    "integration disks of paths " + pair_name(static_cast<int>(i), static_cast<int>(j)) +
                        " overlap");
      }
    }
  }
  const double level = subtract_background ? estimate_background(img).level : 0.0;
  std::vector<double> sums(px.size(), 0.0);
  const int reach = static_cast<int>(std::ceil(radius)) + 1;
  for (std::size_t i = 0; i < px.size(); ++i) {
    const int c0 = static_cast<int>(std::floor(px[i].x)) - reach;
    const int r0 = static_cast<int>(std::floor(px[i].y)) - reach;
    for (int r = std::max(0, r0); r <= std::min(img.height - 1, r0 + 2 * reach + 1); ++r) {
      for (int c = std::max(0, c0); c <= std::min(img.width - 1, c0 + 2 * reach + 1); ++c) {
        if (std::hypot(c - px[i].x, r - px[i].y) <= radius) sums[i] += img.at(c, r) - level;
      }
    }
  }
  double total = 0;
  for (double s : sums) total += s;
  if (!(total > 0)) throw Error(ErrorKind::DegenerateInput, "direct image has no signal");
  for (double& s : sums) s /= total;
  if (total_counts != nullptr) *total_counts = total;
  return sums;
}

ReconstructionResult reconstruct_state(const FrameSet& frames, const MeasurementPlan& plan,
                                       const PathGeometry& g, const Calibration& cal,
                                       const OpticalConfig& cfg, const MeasureOptions& options) {
  const int d = plan.dim;
  if (static_cast<int>(g.size()) != d) {
    throw Error(ErrorKind::InvalidArgument, "geometry and plan disagree on the number of paths");
  }
  auto check_config = [&](const CameraImage& img) {
    if (!(img.config == cfg)) {
      std::ostringstream os;
      os << "frame at " << (img.theta_deg ? std::to_string(*img.theta_deg) + " deg" : "direct")
         << " was taken with a different optical configuration";
      throw Error(ErrorKind::ConfigMismatch, os.str());
    }
  };
  for (const auto& f : frames.oft) check_config(f);
  if (frames.direct) check_config(*frames.direct);

  const auto readings = measure_all(frames, plan, options);

  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  // (estimate, weight) per path. A diagonal is a binomial fraction of the
  // counts N it was normalized by, so its variance goes as 1/N.
  std::vector<std::vector<std::pair<double, double>>> diag_estimates(d);
  std::set<std::pair<int, int>> covered;
  int flagged = 0;
  for (const auto& r : readings) {
    if (r.flagged) ++flagged;
    if (r.diagonal()) {
      diag_estimates[r.i].push_back({r.value.real(), r.normalization});
      continue;
    }
    const Complex v = cal.apply(r.i, r.j, r.value);
    m(r.i, r.j) = v;
    m(r.j, r.i) = std::conj(v);
    covered.insert({r.i, r.j});
  }
  std::vector<std::string> uncovered;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (!covered.contains({i, j})) uncovered.push_back(pair_name(i, j));
    }
  }
  if (!uncovered.empty()) {
    std::string msg = "plan leaves pairs unmeasured:";
    for (const auto& u : uncovered) msg += " " + u;
    throw Error(ErrorKind::IncompletePlan, msg);
  }

  if (frames.direct) {
    double counts = 0.0;
    const auto direct =
        diagonals_from_direct(*frames.direct, g, options.subtract_background, &counts);
    for (int i = 0; i < d; ++i) diag_estimates[i].push_back({direct[i], counts});
  }
  double spread = 0.0;
  for (int i = 0; i < d; ++i) {
    const auto& est = diag_estimates[i];
    if (est.empty()) {
      throw Error(ErrorKind::IncompletePlan,
                  "no diagonal estimate for path " + std::to_string(i) + "; supply a direct image");
    }
    double sum = 0, weights = 0, lo = est.front().first, hi = lo;
    for (const auto& [e, w] : est) {
      sum += w * e;
      weights += w;
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    if (!(weights > 0)) {
      sum = weights = 0;
      for (const auto& [e, w] : est) {
        sum += e;
        weights += 1;
      }
    }
    m(i, i) = sum / weights;
    spread = std::max(spread, hi - lo);
  }

  const double raw_trace = m.trace().real();
  DensityMatrix raw = hermitize(m);
  DensityMatrix physical = nearest_physical(raw);
  Diagnostics diag;
  diag.residuals = (raw.matrix() - physical.matrix()).cwiseAbs();
  diag.psd_violation = psd_violation(raw);
  diag.min_eigenvalue = min_eigenvalue(raw);
  diag.diagonal_spread = spread;
  diag.raw_trace = raw_trace;
  diag.flagged_readings = flagged;

  std::vector<PeakReading> calibrated = readings;
  for (auto& r : calibrated) {
    if (!r.diagonal()) r.value = cal.apply(r.i, r.j, r.value);
  }
  return {raw, physical, std::move(calibrated), diag};
}

}  // namespace pathtomo
