#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pathtomo/optics.hpp"

namespace pathtomo {

/// Row-major intensity frame. Columns run along the untransformed axis u,
/// rows along the lens (Fourier) axis.
struct CameraImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;
  /// Lens angle, or nullopt for a direct image.
  std::optional<double> theta_deg;
  OpticalConfig config;
  /// Hidden shift of the k = 0 row, in pixels. Ground truth for tests only.
  double origin_offset_px = 0.0;
  bool mirrored = false;
  std::uint64_t seed = 0;
  /// Accumulated rotate_image angle.
  double rotation_deg = 0.0;

  CameraImage() = default;
  CameraImage(const OpticalConfig& cfg, std::optional<double> theta);

  double& at(int col, int row) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  double at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  double total() const;
  double max() const;
  void scale(double factor);
};

/// Frame noise, applied as Poisson -> read noise -> background -> clamp -> 16-bit quantization.
struct NoiseModel {
  bool poisson = false;
  /// Expected photon count of the whole frame; the noiseless frame is rescaled to it.
  double photon_budget = 0.0;
  bool read_noise = false;
  double read_noise_sigma = 0.0;
  bool background_enabled = false;
  double background = 0.0;

  bool any() const { return poisson || read_noise || background_enabled; }
  void validate() const;

  static NoiseModel none() { return {}; }
  static NoiseModel poisson_only(double photons);
  /// Parses "none", "poisson:<photons>", optionally followed by ",read:<sigma>" and ",bg:<counts>".
  static NoiseModel parse(const std::string& spec);
  std::string to_string() const;
};

void apply_noise(CameraImage& img, const NoiseModel& noise, std::uint64_t seed);

/// Writes <stem>.pgm (P5, maxval 65535, big-endian) and <stem>.json. The
/// origin offset goes into the sidecar only when reveal_truth is set.
void write_frame(const std::filesystem::path& stem, const CameraImage& img, bool reveal_truth = false);

/// Reads a frame written by write_frame; path may name the .pgm or the stem.
CameraImage read_frame(const std::filesystem::path& path);

/// Raw 16-bit PGM codec.
void write_pgm16(const std::filesystem::path& file, int width, int height,
                 const std::vector<std::uint16_t>& samples);
std::vector<std::uint16_t> read_pgm16(const std::filesystem::path& file, int& width, int& height);

/// Seed for the index-th stream derived from a master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace pathtomo
