#pragma once

// End-to-end helpers shared by the command-line tool and the test suites:
// frame simulation for a whole plan, simulated calibration references and
// round-trip reconstruction.

#include <cstdint>
#include <functional>

#include "pathtomo/forward_model.hpp"
#include "pathtomo/reconstruct.hpp"

namespace pathtomo {

/// Worker count: PATHTOMO_THREADS if set and positive, else hardware concurrency.
int thread_budget();

/// Runs fn(0) .. fn(n-1) on up to thread_budget() threads. The first exception
/// thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

struct SimulationOptions {
  NoiseModel noise;
  OftOptions oft;
  bool include_direct = true;
};

/// One frame per planned lens angle plus the direct image. Frame k uses seed
/// derive_seed(seed, k); the direct image comes last.
FrameSet simulate_frames(const DensityMatrix& rho, const PathGeometry& g,
                         const MeasurementPlan& plan, const OpticalConfig& cfg,
                         const SimulationOptions& options, std::uint64_t seed);

/// Calibration references: 1 is the equal-phase uniform superposition, 2 a
/// uniform superposition with quadratic phases k^2 * 0.7 rad.
DensityMatrix reference_state(int dim, int which);

/// Simulates both references with the same optics and calibrates against them.
Calibration simulate_calibration(const PathGeometry& g, const MeasurementPlan& plan,
                                 const OpticalConfig& cfg, const SimulationOptions& options,
                                 std::uint64_t seed, const MeasureOptions& measure = {});

struct RoundTrip {
  ReconstructionResult result;
  double fidelity = 0.0;
};

RoundTrip round_trip(const DensityMatrix& truth, const PathGeometry& g, const MeasurementPlan& plan,
                     const OpticalConfig& cfg, const SimulationOptions& options,
                     const Calibration& cal, std::uint64_t seed,
                     const MeasureOptions& measure = {});

}  // namespace pathtomo
