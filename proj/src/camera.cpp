#include "pathtomo/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "pathtomo/error.hpp"
#include "pathtomo/json_io.hpp"

namespace pathtomo {

namespace fs = std::filesystem;

CameraImage::CameraImage(const OpticalConfig& cfg, std::optional<double> theta)
    : width(cfg.nx),
      height(cfg.ny),
      pixels(static_cast<std::size_t>(cfg.nx) * cfg.ny, 0.0),
      theta_deg(theta),
      config(cfg) {}

double CameraImage::total() const {
  double s = 0;
  for (double v : pixels) s += v;
  return s;
}

double CameraImage::max() const {
  return pixels.empty() ? 0.0 : *std::max_element(pixels.begin(), pixels.end());
}

void CameraImage::scale(double factor) {
  for (double& v : pixels) v *= factor;
}

void NoiseModel::validate() const {
  if (photon_budget < 0 || read_noise_sigma < 0 || background < 0) {
    throw Error(ErrorKind::InvalidArgument, "noise parameters must be non-negative");
  }
  if (poisson && !(photon_budget > 0)) {
    throw Error(ErrorKind::InvalidArgument, "Poisson noise needs a positive photon budget");
  }
}

NoiseModel NoiseModel::poisson_only(double photons) {
  NoiseModel n;
  n.poisson = true;
  n.photon_budget = photons;
  return n;
}

NoiseModel NoiseModel::parse(const std::string& spec) {
  NoiseModel n;
  if (spec.empty() || spec == "none") return n;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::Parse, "bad noise term '" + item + "'");
    const std::string key = item.substr(0, colon);
    double value = 0;
    try {
      value = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "bad noise value in '" + item + "'");
    }
    if (key == "poisson") {
      n.poisson = true;
      n.photon_budget = value;
    } else if (key == "read") {
      n.read_noise = true;
      n.read_noise_sigma = value;
    } else if (key == "bg") {
      n.background_enabled = true;
      n.background = value;
    } else {
      throw Error(ErrorKind::Parse, "unknown noise term '" + key + "'");
    }
  }
  n.validate();
  return n;
}

std::string NoiseModel::to_string() const {
  if (!any()) return "none";
  std::ostringstream os;
  os.precision(17);
  std::string sep;
  if (poisson) {
    os << "poisson:" << photon_budget;
    sep = ",";
  }
  if (read_noise) {
    os << sep << "read:" << read_noise_sigma;
    sep = ",";
  }
  if (background_enabled) os << sep << "bg:" << background;
  return os.str();
}

void apply_noise(CameraImage& img, const NoiseModel& noise, std::uint64_t seed) {
  noise.validate();
  if (!noise.any()) return;
  std::mt19937_64 rng(seed);
  if (noise.poisson) {
    const double total = img.total();
    const double gain = total > 0 ? noise.photon_budget / total : 0.0;
    for (double& v : img.pixels) {
      const double mean = std::max(v, 0.0) * gain;
      v = mean > 0 ? static_cast<double>(std::poisson_distribution<long long>(mean)(rng)) : 0.0;
    }
  }
  if (noise.read_noise && noise.read_noise_sigma > 0) {
    std::normal_distribution<double> normal(0.0, noise.read_noise_sigma);
    for (double& v : img.pixels) v += normal(rng);
  }
  if (noise.background_enabled) {
    for (double& v : img.pixels) v += noise.background;
  }
  for (double& v : img.pixels) v = std::clamp(std::round(v), 0.0, 65535.0);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void write_pgm16(const fs::path& file, int width, int height,
                 const std::vector<std::uint16_t>& samples) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + file.string() + " for writing");
  out << "P5\n" << width << " " << height << "\n65535\n";
  std::vector<char> buf(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    buf[2 * i] = static_cast<char>(samples[i] >> 8);
    buf[2 * i + 1] = static_cast<char>(samples[i] & 0xFF);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + file.string());
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

fs::path with_ext(fs::path p, const char* ext) {
  if (p.extension() == ".pgm" || p.extension() == ".json") p.replace_extension();
  p += ext;
  return p;
}

}  // namespace

std::vector<std::uint16_t> read_pgm16(const fs::path& file, int& width, int& height) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  if (pgm_token(in) != "P5") throw Error(ErrorKind::Parse, file.string() + " is not a binary PGM");
  try {
    width = std::stoi(pgm_token(in));
    height = std::stoi(pgm_token(in));
    if (std::stoi(pgm_token(in)) != 65535) {
      throw Error(ErrorKind::Parse, file.string() + ": expected maxval 65535");
    }
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::Parse, file.string() + ": malformed header");
  }
  if (width <= 0 || height <= 0) throw Error(ErrorKind::Parse, file.string() + ": bad size");
  std::vector<unsigned char> buf(static_cast<std::size_t>(width) * height * 2);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw Error(ErrorKind::Parse, file.string() + ": truncated pixel data");
  }
  std::vector<std::uint16_t> samples(buf.size() / 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  }
  return samples;
}

void write_frame(const fs::path& stem, const CameraImage& img, bool reveal_truth) {
  // Integer frames are stored as counts; anything else is scaled to full range.
  bool integral = true;
  for (double v : img.pixels) {
    if (v < 0 || v > 65535 || v != std::round(v)) {
      integral = false;
      break;
    }
  }
  const double peak = img.max();
  const double counts_per_unit = integral ? 1.0 : (peak > 0 ? 65535.0 / peak : 1.0);
  std::vector<std::uint16_t> samples(img.pixels.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = static_cast<std::uint16_t>(
        std::clamp(std::round(img.pixels[i] * counts_per_unit), 0.0, 65535.0));
  }
  write_pgm16(with_ext(stem, ".pgm"), img.width, img.height, samples);

  Json side;
  side["theta_deg"] = img.theta_deg ? Json(*img.theta_deg) : Json(nullptr);
  side["config"] = img.config;
  side["seed"] = img.seed;
  side["counts_per_unit"] = counts_per_unit;
  side["mirrored"] = img.mirrored;
  side["rotation_deg"] = img.rotation_deg;
  if (reveal_truth) side["origin_offset_px"] = img.origin_offset_px;
  write_json_file(with_ext(stem, ".json"), side);
}

CameraImage read_frame(const fs::path& path) {
  const Json side = read_json_file(with_ext(path, ".json"));
  CameraImage img;
  std::vector<std::uint16_t> samples = read_pgm16(with_ext(path, ".pgm"), img.width, img.height);
  try {
    img.config = side.at("config").get<OpticalConfig>();
    if (!side.at("theta_deg").is_null()) img.theta_deg = side.at("theta_deg").get<double>();
    img.seed = side.value("seed", std::uint64_t{0});
    img.mirrored = side.value("mirrored", false);
    img.rotation_deg = side.value("rotation_deg", 0.0);
    img.origin_offset_px = side.value("origin_offset_px", 0.0);
    const double counts_per_unit = side.value("counts_per_unit", 1.0);
    img.pixels.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) img.pixels[i] = samples[i] / counts_per_unit;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  if (img.width != img.config.nx || img.height != img.config.ny) {
    throw Error(ErrorKind::ConfigMismatch, path.string() + ": image size differs from config");
  }
  return img;
}

}  // namespace pathtomo
