#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pathtomo/error.hpp"
#include "pathtomo/geometry.hpp"
#include "pathtomo/polarization.hpp"

using namespace pathtomo;

namespace {

constexpr double kPi = std::numbers::pi;

// Spinning plate by brute force: average the conjugation over 720 plate angles.
Eigen::MatrixXcd numeric_spin_average(const Eigen::MatrixXcd& joint) {
  const int n = static_cast<int>(joint.rows() / 2);
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(joint.rows(), joint.cols());
  const int steps = 720;
  for (int k = 0; k < steps; ++k) {
    const double t = 2.0 * kPi * k / steps;  // full turn of the plate
    Eigen::Matrix2cd h;
    h << std::cos(2 * t), std::sin(2 * t), std::sin(2 * t), -std::cos(2 * t);
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(joint.rows(), joint.cols());
    for (int p = 0; p < n; ++p) u.block<2, 2>(2 * p, 2 * p) = h;
    acc += u * joint * u.adjoint();
  }
  return acc / steps;
}

double weight_of(const PolPathState& s, Point at) {
  for (int i = 0; i < s.num_paths(); ++i) {
    if (std::hypot(s.positions()[i].x - at.x, s.positions()[i].y - at.y) < 1e-9) return s.path_weight(i);
  }
  return 0.0;
}

}  // namespace

TEST_SUITE("prep") {
  TEST_CASE("waveplate examples") {
    const auto h = PolPathState::single_path({0, 0}, Polarization::H);
    const auto a = apply_waveplate(h, Waveplate::Half, 0.0);
    CHECK(std::abs(a.joint()(0, 0) - 1.0) < 1e-12);
    const auto b = apply_waveplate(h, Waveplate::Half, 22.5);
    const auto pol = b.polarization_state();
    CHECK(pol(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pol(1, 1).real() == doctest::Approx(0.5).epsilon(1e-12));
    const auto c = apply_waveplate(apply_waveplate(h, Waveplate::Quarter, 45.0), Waveplate::Quarter, 45.0);
    CHECK(c.polarization_state()(1, 1).real() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("Jones matrices are unitary") {
    for (double t = -90; t <= 180; t += 7.5) {
      for (auto kind : {Waveplate::Half, Waveplate::Quarter}) {
        const Eigen::Matrix2cd j = jones_matrix(kind, t);
        CHECK((j * j.adjoint() - Eigen::Matrix2cd::Identity()).norm() < 1e-12);
      }
    }
  }

  TEST_CASE("waveplates preserve purity and trace") {
    Eigen::Vector2cd v(0.3, Complex(0.2, 0.7));
    auto s = apply_displacer(PolPathState::single_path({0, 0}, v), Polarization::H, {2.7, 0});
    s = mix_spinning_hwp(s, 11.0);
    const double p0 = (s.joint() * s.joint()).trace().real();
    const auto t = apply_waveplate(s, Waveplate::Quarter, 33.0);
    CHECK(std::abs((t.joint() * t.joint()).trace().real() - p0) < 1e-12);
    CHECK(std::abs(t.trace() - 1.0) < 1e-12);
  }

  TEST_CASE("displacer examples") {
    const auto h = PolPathState::single_path({0, 0}, Polarization::H);
    const auto moved = apply_displacer(h, Polarization::H, {2.7, 0}).compact();
    REQUIRE(moved.num_paths() == 1);
    CHECK(moved.positions()[0] == Point{2.7, 0});
    CHECK(moved.trace() == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::Vector2cd d(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
    const auto split = apply_displacer(PolPathState::single_path({0, 0}, d), Polarization::H, {2.7, 0});
    CHECK(weight_of(split, {0, 0}) == doctest::Approx(0.5));
    CHECK(weight_of(split, {2.7, 0}) == doctest::Approx(0.5));
    // Joint coherence between (path 0, V) and (path 1, H).
    CHECK(std::abs(split.joint()(1, 2)) == doctest::Approx(0.5));

    const auto v = PolPathState::single_path({0, 0}, Polarization::V);
    const auto same = apply_displacer(v, Polarization::H, {5, 5}).compact();
    REQUIRE(same.num_paths() == 1);
    CHECK(same.positions()[0] == Point{0, 0});
  }

  TEST_CASE("displacer refuses to merge occupied paths") {
    Eigen::Vector2cd d(1.0, 1.0);
    auto s = apply_displacer(PolPathState::single_path({0, 0}, d), Polarization::H, {2.7, 0});
    s = apply_waveplate(s, Waveplate::Half, 22.5);
    try {
      (void)apply_displacer(s, Polarization::H, {2.7, 0});
      FAIL("expected a merge error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::PathMerge);
    }
  }

  TEST_CASE("blocking examples") {
    PrepSettings s;
    const auto full = eight_path_state(s);
    REQUIRE(full.num_paths() == 8);
    auto none = block_paths(full, {});
    CHECK(none.discarded_probability == doctest::Approx(0.0));

    const auto uniform8 = [] {
      Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(16);
      for (int i = 0; i < 8; ++i) amp(2 * i) = 1.0 / std::sqrt(8.0);
      std::vector<Point> pos;
      for (int i = 0; i < 8; ++i) pos.push_back({1.0 * i, 0.0});
      return PolPathState(pos, amp * amp.adjoint());
    }();
    const auto six = block_paths(uniform8, {2, 6});
    CHECK(six.state.num_paths() == 6);
    CHECK(six.discarded_probability == doctest::Approx(0.25));
    const auto rho = six.state.path_state();
    for (int i = 0; i < 6; ++i) CHECK(rho(i, i).real() == doctest::Approx(1.0 / 6.0));

    const auto one = block_paths(uniform8, {0, 1, 2, 3, 4, 5, 6});
    CHECK(purity(one.state.path_state()) == doctest::Approx(1.0));
    try {
      (void)block_paths(uniform8, {0, 1, 2, 3, 4, 5, 6, 7});
      FAIL("expected an empty-state error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyState);
    }
  }

  TEST_CASE("blocking a zero-amplitude path leaves the state unchanged") {
    PrepSettings s;
    s.phi_deg = 0.0;  // all light stays horizontal at the first displacer
    const auto full = eight_path_state(s);
    int empty = -1;
    for (int i = 0; i < full.num_paths(); ++i) {
      if (full.path_weight(i) < 1e-14) empty = i;
    }
    REQUIRE(empty >= 0);
    const auto kept = block_paths(full, {empty});
    CHECK(kept.discarded_probability == doctest::Approx(0.0));
  }

  TEST_CASE("spinning plate: analytic average equals the 720-angle average") {
    Eigen::Vector2cd v(0.6, Complex(0.3, -0.74));
    auto s = apply_displacer(PolPathState::single_path({0, 0}, v), Polarization::H, {2.7, 0});
    s = apply_waveplate(s, Waveplate::Quarter, 20.0);
    const auto analytic = apply_spinning_hwp(s);
    CHECK((analytic.joint() - numeric_spin_average(s.joint())).cwiseAbs().maxCoeff() < 1e-9);

    const auto h = apply_spinning_hwp(PolPathState::single_path({0, 0}, Polarization::H));
    CHECK(h.joint()(0, 0).real() == doctest::Approx(0.5));
    CHECK(h.joint()(1, 1).real() == doctest::Approx(0.5));
  }

  TEST_CASE("mixer limits") {
    const auto h = apply_waveplate(PolPathState::single_path({0, 0}, Polarization::H), Waveplate::Half, 22.5);
    const auto mixed = mix_spinning_hwp(h, 22.5);
    const auto pol = mixed.polarization_state();
    CHECK((pol - 0.5 * Eigen::Matrix2cd::Identity()).norm() < 1e-12);
    const auto kept = mix_spinning_hwp(h, 0.0);
    CHECK((kept.polarization_state() * kept.polarization_state()).trace().real() == doctest::Approx(1.0));
  }

  TEST_CASE("mixer never raises purity") {
    for (double tau = 0; tau <= 45; tau += 3) {
      Eigen::Vector2cd v(0.8, Complex(0.1, 0.59));
      const auto s = PolPathState::single_path({0, 0}, v);
      const auto m = mix_spinning_hwp(s, tau);
      CHECK((m.joint() * m.joint()).trace().real() <= 1.0 + 1e-12);
      CHECK(m.trace() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("six-path state geometry and pure limit") {
    const auto p = prepare_six_path_state({});
    CHECK(p.rho.dim() == 6);
    const auto grid = PathGeometry::grid_2x3();
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(std::hypot(p.geometry[i].x - grid[i].x, p.geometry[i].y - grid[i].y) < 1e-12);
    }
    CHECK(validate_geometry(p.geometry).valid);
    CHECK(angle_set(p.geometry).size() == 8);
    CHECK(purity(p.rho) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(is_physical(p.rho, 1e-12));
  }

  TEST_CASE("six-path state purity follows (5 + 4 cos^2 4 tau) / 9") {
    for (double zeta : {0.0, 30.0, 45.0, 71.0}) {
      for (double tau = 0; tau <= 45; tau += 2.5) {
        PrepSettings s;
        s.zeta_deg = zeta;
        s.tau_deg = tau;
        const double c = std::cos(4 * tau * kPi / 180);
        CHECK(std::abs(purity(prepare_six_path_state(s).rho) - (5 + 4 * c * c) / 9) < 1e-12);
      }
    }
    PrepSettings s;
    s.tau_deg = 22.5;
    CHECK(purity(prepare_six_path_state(s).rho) == doctest::Approx(5.0 / 9.0).epsilon(1e-12));
  }

  TEST_CASE("six-path state purity is monotone in tau on [0, 22.5]") {
    double last = 2.0;
    for (double tau = 0; tau <= 22.5; tau += 0.5) {
      PrepSettings s;
      s.tau_deg = tau;
      const double p = purity(prepare_six_path_state(s).rho);
      CHECK(p <= last + 1e-12);
      last = p;
    }
  }

  TEST_CASE("all but one path blocked gives [1]") {
    PrepSettings s;
    s.blocked = std::vector<int>{0, 1, 2, 3, 4, 5, 6};
    const auto p = prepare_six_path_state(s);
    REQUIRE(p.rho.dim() == 1);
    CHECK(p.rho(0, 0).real() == doctest::Approx(1.0));
  }

  TEST_CASE("trace-out variant keeps orthogonally polarized paths incoherent") {
    PrepSettings s;
    s.analyzer_deg.reset();
    const auto p = prepare_six_path_state(s);
    // Without a polarizer the paths leaving the last displacer as H and V
    // cannot interfere, so the pure limit is lost.
    CHECK(purity(p.rho) < 0.99);
  }

  TEST_CASE("decoherence factors") {
    const auto rho = DensityMatrix::uniform_pure(3);
    const auto d = apply_decoherence(rho, {{0, 2, 0.5}, {1, 2, 0.5}});
    CHECK(std::abs(d(0, 2)) == doctest::Approx(0.5 / 3.0));
    CHECK(std::abs(d(2, 1)) == doctest::Approx(0.5 / 3.0));
    CHECK(std::abs(d(0, 1)) == doctest::Approx(1.0 / 3.0));
    CHECK(is_physical(d));
    CHECK_THROWS_AS(apply_decoherence(rho, {{0, 2, 1.5}}), Error);
    // Damping one coherence of a pure three-path state alone leaves a negative eigenvalue.
    try {
      (void)apply_decoherence(rho, {{0, 2, 0.5}});
      FAIL("expected an unphysical-input error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnphysicalInput);
    }
  }

  TEST_CASE("square state") {
    const auto a = prepare_square_state(2.7, 22.5);
    for (int i = 0; i < 4; ++i) {
      CHECK(a.rho(i, i).real() == doctest::Approx(0.25).epsilon(1e-12));
      for (int j = 0; j < 4; ++j) {
        const double m = std::abs(a.rho(i, j));
        CHECK(std::min(m, std::abs(m - 0.25)) < 1e-10);
      }
    }
    CHECK(purity(prepare_square_state(2.7, 0.0).rho) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(validate_geometry(a.geometry).valid);
    const auto b = prepare_square_state(5.0, 22.5);
    CHECK(max_abs_difference(a.rho, b.rho) < 1e-12);
  }

  TEST_CASE("prep settings validation") {
    PrepSettings s;
    s.blocked = std::vector<int>{1, 1};
    CHECK_THROWS_AS(prepare_six_path_state(s), Error);
    s.blocked = std::vector<int>{9};
    CHECK_THROWS_AS(prepare_six_path_state(s), Error);
  }
}
