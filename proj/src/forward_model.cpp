#include "pathtomo/forward_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "pathtomo/error.hpp"

namespace pathtomo {

namespace {

constexpr double kPi = std::numbers::pi;
// Gaussian amplitudes are treated as zero beyond this many widths (exp(-64)).
constexpr double kCutoffWidths = 8.0;

void check_dims(const DensityMatrix& rho, const PathGeometry& g) {
  if (static_cast<std::size_t>(rho.dim()) != g.size()) {
    std::ostringstream os;
    os << "state dimension " << rho.dim() << " does not match " << g.size() << " paths";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
}

}  // namespace

double column_of(double u_mm, const OpticalConfig& cfg) {
  return cfg.center_column() + cfg.magnification * u_mm / cfg.pixel_pitch_mm();
}

CameraImage direct_image(const DensityMatrix& rho, const PathGeometry& g, const OpticalConfig& cfg,
                         const NoiseModel& noise, std::uint64_t seed) {
  cfg.validate();
  check_dims(rho, g);
  const double pitch = cfg.pixel_pitch_mm();
  const double w = cfg.magnification * g.sigma_mm();
  const Point c = g.centroid();
  CameraImage img(cfg, std::nullopt);
  img.seed = seed;

  // Intensity 2/(pi w^2) exp(-2 r^2 / w^2) integrates to one; times pixel area.
  const double norm = cfg.exposure * 2.0 / (kPi * w * w) * pitch * pitch;
  const int reach = static_cast<int>(std::ceil(kCutoffWidths * w / pitch));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double col = cfg.center_column() + cfg.magnification * (g[i].x - c.x) / pitch;
    const double row = cfg.center_row() + cfg.magnification * (g[i].y - c.y) / pitch;
    const double margin = 3.0 * w / pitch;
    if (col - margin < 0 || col + margin > cfg.nx - 1 || row - margin < 0 ||
        row + margin > cfg.ny - 1) {
      std::ostringstream os;
      os << "path " << i << " falls outside the sensor";
      throw Error(ErrorKind::FieldOfView, os.str());
    }
    const double weight = rho(i, i).real() * norm;
    const int c0 = std::max(0, static_cast<int>(col) - reach);
    const int c1 = std::min(cfg.nx - 1, static_cast<int>(col) + reach + 1);
    const int r0 = std::max(0, static_cast<int>(row) - reach);
    const int r1 = std::min(cfg.ny - 1, static_cast<int>(row) + reach + 1);
    for (int r = r0; r <= r1; ++r) {
      const double dy = (r - row) * pitch;
      for (int cc = c0; cc <= c1; ++cc) {
        const double dx = (cc - col) * pitch;
        img.at(cc, r) += weight * std::exp(-2.0 * (dx * dx + dy * dy) / (w * w));
      }
    }
  }
  apply_noise(img, noise, seed);
  return img;
}

CameraImage oft_image(const DensityMatrix& rho, const PathGeometry& g, double theta_deg,
                      const OpticalConfig& cfg, const NoiseModel& noise, const OftOptions& options,
                      std::uint64_t seed) {
  cfg.validate();
  check_dims(rho, g);
  const int d = rho.dim();
  const double pitch = cfg.pixel_pitch_mm();
  const double mag = cfg.magnification;
  const double w = mag * g.sigma_mm();
  const auto frame = lens_frame(g, theta_deg);

  std::vector<double> col_u(d);  // camera column of each path
  for (int i = 0; i < d; ++i) {
    col_u[i] = column_of(frame[i].u, cfg);
    const double margin = 3.0 * w / pitch;
    if (col_u[i] - margin < 0 || col_u[i] + margin > cfg.nx - 1) {
      std::ostringstream os;
      os << "path " << i << " falls outside the sensor at lens angle " << theta_deg;
      throw Error(ErrorKind::FieldOfView, os.str());
    }
  }

  // Pairs whose transverse profiles overlap interfere on the camera.
  struct Pair {
    int i, j;
    std::vector<Complex> phase;  // exp(i (v_i - v_j) k) per row
  };
  std::vector<Pair> pairs;
  const double overlap_reach = 2.0 * kCutoffWidths * w;
  const double dk = cfg.momentum_per_pixel();
  const double k_sign = options.mirror_k ? -1.0 : 1.0;
  const double origin = cfg.center_row() + options.origin_offset_px;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (std::abs(frame[i].u - frame[j].u) * mag > overlap_reach) continue;
      const double spacing = mag * (frame[i].v - frame[j].v);
      if (std::abs(spacing) > 0 && cfg.fringe_period_mm(std::abs(spacing)) < 2.0 * pitch) {
        std::ostringstream os;
        os << "fringe period of pair (" << i << "," << j << ") is "
           << cfg.fringe_period_mm(std::abs(spacing)) / pitch
           << " pixels; see the resource report for the Nyquist limit";
        throw Error(ErrorKind::Aliasing, os.str());
      }
      Pair p{i, j, std::vector<Complex>(cfg.ny)};
      for (int r = 0; r < cfg.ny; ++r) {
        const double k = k_sign * dk * (r - origin);
        p.phase[r] = std::polar(1.0, spacing * k);
      }
      pairs.push_back(std::move(p));
    }
  }

  // Momentum envelope |psi(k)|^2 ~ exp(-k^2 w^2 / 2), normalized as a density
  // along the camera row axis.
  std::vector<double> envelope(cfg.ny);
  const double s_v = cfg.oft_focal_mm * cfg.wavelength_mm() / (2.0 * kPi * w);
  for (int r = 0; r < cfg.ny; ++r) {
    const double v = (r - origin) * pitch;
    envelope[r] = std::exp(-0.5 * v * v / (s_v * s_v)) / (std::sqrt(2.0 * kPi) * s_v) * pitch;
  }

  // Unit-norm 1D amplitude g(u) = (2 / (pi w^2))^(1/4) exp(-u^2 / w^2), sampled
  // at pixel centers and weighted by the pixel width.
  const double amp_norm = std::pow(2.0 / (kPi * w * w), 0.25);
  auto amplitude = [&](int col, int path) {
    const double du = (col - col_u[path]) * pitch;
    if (std::abs(du) > kCutoffWidths * w) return 0.0;
    return amp_norm * std::exp(-du * du / (w * w));
  };

  CameraImage img(cfg, theta_deg);
  img.origin_offset_px = options.origin_offset_px;
  img.mirrored = options.mirror_k;
  img.seed = seed;
  std::vector<double> column(cfg.ny);
  for (int c = 0; c < cfg.nx; ++c) {
    std::fill(column.begin(), column.end(), 0.0);
    bool touched = false;
    for (int i = 0; i < d; ++i) {
      const double a = amplitude(c, i);
      if (a == 0.0) continue;
      const double weight = rho(i, i).real() * a * a;
      for (int r = 0; r < cfg.ny; ++r) column[r] += weight;
      touched = true;
    }
    if (!touched) continue;
    for (const auto& p : pairs) {
      const double a = amplitude(c, p.i) * amplitude(c, p.j);
      if (a == 0.0) continue;
      const Complex coherence = 2.0 * a * rho(p.i, p.j);
      for (int r = 0; r < cfg.ny; ++r) column[r] += (coherence * p.phase[r]).real();
    }
    for (int r = 0; r < cfg.ny; ++r) {
      img.at(c, r) = cfg.exposure * pitch * envelope[r] * column[r];
    }
  }
  apply_noise(img, noise, seed);
  return img;
}

}  // namespace pathtomo
