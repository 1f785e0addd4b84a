#include "pathtomo/polarization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "pathtomo/error.hpp"

namespace pathtomo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kEmptyWeight = 1e-14;
const Complex kI(0.0, 1.0);

Eigen::MatrixXcd remove_slots(const Eigen::MatrixXcd& joint, const std::vector<int>& keep) {
  const auto n = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXcd out(2 * n, 2 * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      out.block<2, 2>(2 * a, 2 * b) = joint.block<2, 2>(2 * keep[a], 2 * keep[b]);
    }
  }
  return out;
}

bool close(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y) < kLengthTolMm;
}

}  // namespace

Eigen::Matrix2cd jones_matrix(Waveplate kind, double angle_deg) {
  const double t = angle_deg * kDeg;
  Eigen::Matrix2cd m;
  if (kind == Waveplate::Half) {
    const double c = std::cos(2 * t);
    const double s = std::sin(2 * t);
    m << c, s, s, -c;
  } else {
    const double c = std::cos(t);
    const double s = std::sin(t);
    const Complex off = Complex(1.0, -1.0) * s * c;
    m << c * c + kI * s * s, off, off, s * s + kI * c * c;
  }
  return m;
}

PolPathState::PolPathState(std::vector<Point> positions, Eigen::MatrixXcd joint)
    : positions_(std::move(positions)), joint_(std::move(joint)) {
  const auto n = static_cast<Eigen::Index>(positions_.size());
  if (n == 0 || joint_.rows() != 2 * n || joint_.cols() != 2 * n) {
    throw Error(ErrorKind::InvalidArgument, "joint matrix must be 2n x 2n for n paths");
  }
}

PolPathState PolPathState::single_path(Point position, const Eigen::Vector2cd& jones) {
  const double n = jones.squaredNorm();
  if (n < 1e-300) throw Error(ErrorKind::Unnormalizable, "zero Jones vector");
  Eigen::Vector2cd v = jones / std::sqrt(n);
  return PolPathState({position}, v * v.adjoint());
}

PolPathState PolPathState::single_path(Point position, Polarization pol) {
  Eigen::Vector2cd v = Eigen::Vector2cd::Zero();
  v(static_cast<int>(pol)) = 1.0;
  return single_path(position, v);
}

double PolPathState::path_weight(int slot) const {
  return joint_(2 * slot, 2 * slot).real() + joint_(2 * slot + 1, 2 * slot + 1).real();
}

DensityMatrix PolPathState::path_state() const {
  const int n = num_paths();
  Eigen::MatrixXcd rho(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      rho(i, j) = joint_(2 * i, 2 * j) + joint_(2 * i + 1, 2 * j + 1);
    }
  }
  return DensityMatrix(rho / rho.trace().real());
}

namespace {

Eigen::MatrixXcd analyzed(const Eigen::MatrixXcd& joint, int n, double analyzer_deg) {
  const double a = analyzer_deg * kDeg;
  const Eigen::Vector2cd e(std::cos(a), std::sin(a));
  Eigen::MatrixXcd rho(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      rho(i, j) = (e.adjoint() * joint.block<2, 2>(2 * i, 2 * j) * e)(0, 0);
    }
  }
  return rho;
}

}  // namespace

DensityMatrix PolPathState::analyzed_path_state(double analyzer_deg) const {
  const Eigen::MatrixXcd rho = analyzed(joint_, num_paths(), analyzer_deg);
  const double tr = rho.trace().real();
  if (tr < 1e-12) throw Error(ErrorKind::EmptyState, "the analyzer blocks all light");
  return DensityMatrix(rho / tr);
}

double PolPathState::analyzer_transmission(double analyzer_deg) const {
  return analyzed(joint_, num_paths(), analyzer_deg).trace().real() / trace();
}

Eigen::Matrix2cd PolPathState::polarization_state() const {
  Eigen::Matrix2cd pol = Eigen::Matrix2cd::Zero();
  for (int i = 0; i < num_paths(); ++i) pol += joint_.block<2, 2>(2 * i, 2 * i);
  return pol;
}

PolPathState PolPathState::compact(double tol) const {
  std::vector<int> keep;
  for (int i = 0; i < num_paths(); ++i) {
    if (path_weight(i) > tol) keep.push_back(i);
  }
  if (keep.empty()) throw Error(ErrorKind::EmptyState, "no occupied path");
  std::vector<Point> pos;
  for (int i : keep) pos.push_back(positions_[i]);
  return PolPathState(std::move(pos), remove_slots(joint_, keep));
}

PolPathState PolPathState::sorted() const {
  std::vector<int> order(positions_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const Point& p = positions_[a];
    const Point& q = positions_[b];
    if (std::abs(p.y - q.y) > kLengthTolMm) return p.y < q.y;
    return p.x < q.x - kLengthTolMm;
  });
  std::vector<Point> pos;
  for (int i : order) pos.push_back(positions_[i]);
  return PolPathState(std::move(pos), remove_slots(joint_, order));
}

PolPathState apply_waveplate(const PolPathState& state, Waveplate kind, double angle_deg) {
  const Eigen::Matrix2cd j = jones_matrix(kind, angle_deg);
  const int n = state.num_paths();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) u.block<2, 2>(2 * i, 2 * i) = j;
  return PolPathState(state.positions(), u * state.joint() * u.adjoint());
}

PolPathState apply_displacer(const PolPathState& state, Polarization shift_pol, Point shift_mm) {
  const int n = state.num_paths();
  const int moved = static_cast<int>(shift_pol);
  std::vector<Point> pos(2 * n);
  for (int i = 0; i < n; ++i) {
    pos[i] = state.positions()[i];
    pos[n + i] = {state.positions()[i].x + shift_mm.x, state.positions()[i].y + shift_mm.y};
  }
  // Old joint index (i, p) lands in slot i, or slot n + i for the shifted polarization.
  auto target = [&](int old_index) {
    const int slot = old_index / 2;
    const int pol = old_index % 2;
    return 2 * (pol == moved ? n + slot : slot) + pol;
  };
  Eigen::MatrixXcd joint = Eigen::MatrixXcd::Zero(4 * n, 4 * n);
  for (int a = 0; a < 2 * n; ++a) {
    for (int b = 0; b < 2 * n; ++b) joint(target(a), target(b)) = state.joint()(a, b);
  }
  PolPathState split(pos, joint);

  std::vector<bool> dropped(2 * n, false);
  for (int a = 0; a < 2 * n; ++a) {
    if (dropped[a]) continue;
    for (int b = a + 1; b < 2 * n; ++b) {
      if (dropped[b] || !close(pos[a], pos[b])) continue;
      const bool a_occupied = split.path_weight(a) > kEmptyWeight;
      const bool b_occupied = split.path_weight(b) > kEmptyWeight;
      if (a_occupied && b_occupied) {
        std::ostringstream os;
        os << "displaced path lands on occupied position (" << pos[a].x << ", " << pos[a].y
           << ") mm";
        throw Error(ErrorKind::PathMerge, os.str());
      }
      if (a_occupied || !b_occupied) {
        dropped[b] = true;
      } else {
        dropped[a] = true;
        break;
      }
    }
  }
  std::vector<int> keep;
  std::vector<Point> kept_pos;
  for (int a = 0; a < 2 * n; ++a) {
    if (!dropped[a]) {
      keep.push_back(a);
      kept_pos.push_back(pos[a]);
    }
  }
  return PolPathState(std::move(kept_pos), remove_slots(joint, keep));
}

BlockResult block_paths(const PolPathState& state, const std::vector<int>& indices) {
  std::set<int> blocked;
  for (int i : indices) {
    if (i < 0 || i >= state.num_paths()) {
      throw Error(ErrorKind::InvalidArgument, "blocked index " + std::to_string(i) + " out of range");
    }
    blocked.insert(i);
  }
  std::vector<int> keep;
  std::vector<Point> pos;
  for (int i = 0; i < state.num_paths(); ++i) {
    if (!blocked.contains(i)) {
      keep.push_back(i);
      pos.push_back(state.positions()[i]);
    }
  }
  if (keep.empty()) throw Error(ErrorKind::EmptyState, "every path is blocked");
  Eigen::MatrixXcd joint = remove_slots(state.joint(), keep);
  const double total = state.trace();
  const double kept = joint.trace().real();
  if (kept <= kEmptyWeight * total) throw Error(ErrorKind::EmptyState, "no probability survives blocking");
  joint /= kept;
  return {PolPathState(std::move(pos), joint), 1.0 - kept / total};
}

PolPathState apply_spinning_hwp(const PolPathState& state) {
  // The spin average keeps the identity and sigma_y parts of each 2x2
  // polarization block, flipping the sign of sigma_y, and removes the rest.
  const int n = state.num_paths();
  Eigen::MatrixXcd out(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Eigen::Matrix2cd b = state.joint().block<2, 2>(2 * i, 2 * j);
      const Complex b0 = 0.5 * (b(0, 0) + b(1, 1));
      const Complex by = (b(1, 0) - b(0, 1)) / (2.0 * kI);
      Eigen::Matrix2cd r;
      r << b0, kI * by, -kI * by, b0;
      out.block<2, 2>(2 * i, 2 * j) = r;
    }
  }
  return PolPathState(state.positions(), out);
}

PolPathState mix_spinning_hwp(const PolPathState& state, double tau_deg) {
  PolPathState s = apply_waveplate(state, Waveplate::Half, tau_deg);
  s = apply_waveplate(s, Waveplate::Quarter, 0.0);
  s = apply_spinning_hwp(s);
  return apply_waveplate(s, Waveplate::Quarter, 90.0);
}

DensityMatrix apply_decoherence(const DensityMatrix& rho, const std::vector<PairCoherence>& factors) {
  if (factors.empty()) return rho;
  Eigen::MatrixXcd m = rho.matrix();
  for (const auto& f : factors) {
    if (f.i < 0 || f.j < 0 || f.i >= rho.dim() || f.j >= rho.dim() || f.i == f.j) {
      throw Error(ErrorKind::InvalidArgument, "decoherence pair out of range");
    }
    if (!(f.factor >= 0.0 && f.factor <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "decoherence factor must lie in [0, 1]");
    }
    m(f.i, f.j) *= f.factor;
    m(f.j, f.i) *= f.factor;
  }
  DensityMatrix out(m);
  if (!is_physical(out, 1e-12)) {
    throw Error(ErrorKind::UnphysicalInput, "decoherence pattern produces a non-positive state");
  }
  return out;
}

void PrepSettings::validate() const {
  if (blocked) {
    std::set<int> seen;
    for (int i : *blocked) {
      if (i < 0 || i >= 8) throw Error(ErrorKind::InvalidArgument, "blocked index out of range 0..7");
      if (!seen.insert(i).second) throw Error(ErrorKind::InvalidArgument, "blocked index repeated");
    }
  }
  if (!(sigma_mm > 0)) throw Error(ErrorKind::InvalidArgument, "sigma must be positive");
}

PolPathState eight_path_state(const PrepSettings& settings) {
  PolPathState s = PolPathState::single_path({0.0, 0.0}, Polarization::H);
  s = apply_waveplate(s, Waveplate::Half, settings.phi_deg);
  // The mixer has to act before the first displacer: polarization optics placed
  // after the last displacer cannot change the path state.
  if (settings.tau_deg) s = mix_spinning_hwp(s, *settings.tau_deg);
  s = apply_displacer(s, Polarization::H, {settings.shift_x_mm, 0.0});
  s = apply_waveplate(s, settings.zeta_plate, settings.zeta_deg);
  s = apply_displacer(s, Polarization::V, {0.0, settings.shift_y_mm});
  s = apply_waveplate(s, Waveplate::Half, settings.omega_deg);
  s = apply_displacer(s, Polarization::H, {settings.shift_X_mm, 0.0});
  return s.sorted();
}

PreparedState prepare_six_path_state(const PrepSettings& settings) {
  settings.validate();
  const PolPathState full = eight_path_state(settings);
  std::vector<int> blocked;
  if (settings.blocked) {
    blocked = *settings.blocked;
  } else {
    for (int i = 0; i < full.num_paths(); ++i) {
      if (std::abs(full.positions()[i].x - settings.shift_X_mm) < kLengthTolMm) blocked.push_back(i);
    }
  }
  BlockResult kept = block_paths(full, blocked);
  const DensityMatrix path = settings.analyzer_deg
                                 ? kept.state.analyzed_path_state(*settings.analyzer_deg)
                                 : kept.state.path_state();
  DensityMatrix rho = apply_decoherence(path, settings.decoherence);
  return {rho, PathGeometry(kept.state.positions(), settings.sigma_mm, "prepared"),
          kept.discarded_probability};
}

PreparedState prepare_square_state(double side_mm, std::optional<double> tau_deg, double sigma_mm,
                                   std::optional<double> analyzer_deg) {
  if (!(side_mm > 0)) throw Error(ErrorKind::InvalidArgument, "side must be positive");
  PolPathState s = PolPathState::single_path({0.0, 0.0}, Polarization::H);
  s = apply_waveplate(s, Waveplate::Half, 22.5);
  if (tau_deg) s = mix_spinning_hwp(s, *tau_deg);
  s = apply_displacer(s, Polarization::H, {side_mm, 0.0});
  s = apply_waveplate(s, Waveplate::Half, 22.5);
  s = apply_displacer(s, Polarization::V, {0.0, side_mm});
  s = s.sorted();
  const DensityMatrix rho = analyzer_deg ? s.analyzed_path_state(*analyzer_deg) : s.path_state();
  return {rho, PathGeometry(s.positions(), sigma_mm, "square"), 0.0};
}

double theory_mixed_purity(double tau_deg) {
  const double c = std::cos(4.0 * tau_deg * kDeg);
  return (5.0 + 4.0 * c * c) / 9.0;
}

}  // namespace pathtomo
