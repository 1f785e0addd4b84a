#include "pathtomo/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pathtomo {

int thread_budget() {
  if (const char* env = std::getenv("PATHTOMO_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(thread_budget()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

FrameSet simulate_frames(const DensityMatrix& rho, const PathGeometry& g,
                         const MeasurementPlan& plan, const OpticalConfig& cfg,
                         const SimulationOptions& options, std::uint64_t seed) {
  FrameSet frames;
  frames.oft.resize(plan.angles.size());
  parallel_for(plan.angles.size(), [&](std::size_t k) {
    frames.oft[k] = oft_image(rho, g, plan.angles[k].theta_deg, cfg, options.noise, options.oft,
                              derive_seed(seed, k));
  });
  if (options.include_direct) {
    frames.direct = direct_image(rho, g, cfg, options.noise, derive_seed(seed, plan.angles.size()));
  }
  return frames;
}

DensityMatrix reference_state(int dim, int which) {
  if (which == 1) return DensityMatrix::uniform_pure(dim);
  Eigen::VectorXcd amp(dim);
  for (int k = 0; k < dim; ++k) amp(k) = std::polar(1.0, 0.7 * k * k);
  return DensityMatrix::pure(amp);
}

Calibration simulate_calibration(const PathGeometry& g, const MeasurementPlan& plan,
                                 const OpticalConfig& cfg, const SimulationOptions& options,
                                 std::uint64_t seed, const MeasureOptions& measure) {
  const int d = static_cast<int>(g.size());
  ReferenceRun first{"uniform", reference_state(d, 1), {}};
  ReferenceRun second{"quadratic-phase", reference_state(d, 2), {}};
  first.frames = simulate_frames(first.known, g, plan, cfg, options, derive_seed(seed, 1001));
  second.frames = simulate_frames(second.known, g, plan, cfg, options, derive_seed(seed, 1002));
  return calibrate(first, second, plan, g, measure);
}

RoundTrip round_trip(const DensityMatrix& truth, const PathGeometry& g, const MeasurementPlan& plan,
                     const OpticalConfig& cfg, const SimulationOptions& options,
                     const Calibration& cal, std::uint64_t seed, const MeasureOptions& measure) {
  const FrameSet frames = simulate_frames(truth, g, plan, cfg, options, seed);
  RoundTrip out{reconstruct_state(frames, plan, g, cal, cfg, measure), 0.0};
  out.fidelity = fidelity(out.result.rho_physical, truth);
  return out;
}

}  // namespace pathtomo
