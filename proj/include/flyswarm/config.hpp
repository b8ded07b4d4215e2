#pragma once

// Plain-text run configuration: one `key = value` per line, `#` starts a
// comment. List values are separated by spaces or commas. `obstacle` and
// `frame` may repeat.
//
//   focal_length_px = 500
//   principal_point = 320 240
//   image_size      = 640 480
//   obstacle        = 0 -0.35 4  0.5 1.7  11 0.03   # cx cy cz w h seed cell [min max]
//   frame           = preset:empty-road
//   frame           = left.pgm right.pgm

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "flyswarm/error.hpp"
#include "flyswarm/evolution.hpp"
#include "flyswarm/geometry.hpp"
#include "flyswarm/synth.hpp"
#include "flyswarm/warning.hpp"

namespace flyswarm {

/// One stereo pair of a sequence: a preset scene or two image files.
struct FrameSource {
  std::optional<Preset> preset;
  std::filesystem::path left;
  std::filesystem::path right;
};

struct RunConfig {
  StereoRig rig;
  EvolutionParams evolution;
  WarningParams warning;
  std::size_t generations = 200;

  std::optional<Preset> preset;
  std::filesystem::path left_path;
  std::filesystem::path right_path;
  /// Scene for `synth`, when given explicitly instead of a preset.
  std::optional<Scene> scene;

  std::vector<FrameSource> frames;
  std::size_t frame_generations = 50;

  std::filesystem::path out_dir = ".";
  std::size_t overlay_top_k = 250;
  bool emit_flies = true;
  bool emit_overlay = true;
  bool emit_trace = true;

  std::size_t bench_generations = 100;
  unsigned threads = 1;

  void validate() const {
    rig.validate();
    evolution.validate();
    warning.validate();
    if (generations < 1) throw ConfigError("generations must be at least 1");
    if (frame_generations < 1) throw ConfigError("frame_generations must be at least 1");
    if (left_path.empty() != right_path.empty()) throw ConfigError("--left and --right must be given together");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_values(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::string_view key) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
  return value;
}

}  // namespace detail

inline FrameSource parse_frame_source(std::string_view value) {
  value = detail::trim(value);
  if (value.starts_with("preset:")) return {parse_preset(std::string(value.substr(7))), {}, {}};
  const auto parts = detail::split_values(value);
  if (parts.size() != 2) throw ConfigError("frame needs 'preset:NAME' or a LEFT RIGHT image pair: '" + std::string(value) + "'");
  return {std::nullopt, parts[0], parts[1]};
}

/// Applies one setting. Keys name the struct fields they set.
inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  using detail::parse_number;
  const auto vals = detail::split_values(value);
  auto need = [&](std::size_t n) {
    if (vals.size() != n)
      throw ConfigError(std::string(key) + " expects " + std::to_string(n) + " value(s), got " + std::to_string(vals.size()));
  };
  auto dbl = [&](std::size_t i = 0) { return parse_number<double>(vals.at(i), key); };
  auto uint = [&](std::size_t i = 0) { return parse_number<std::uint64_t>(vals.at(i), key); };
  auto one_dbl = [&] { need(1); return dbl(); };
  auto one_uint = [&] { need(1); return uint(); };
  auto grey = [&](std::size_t i) {
    const auto v = uint(i);
    if (v > 255) throw ConfigError(std::string(key) + ": grey level above 255");
    return static_cast<std::uint8_t>(v);
  };
  auto scene = [&]() -> Scene& {
    if (!cfg.scene) cfg.scene = Scene{};
    return *cfg.scene;
  };

  auto& k = cfg.rig.intrinsics;
  auto& ev = cfg.evolution;
  auto& wp = cfg.warning;

  if (key == "focal_length_px") k.focal_length_px = one_dbl();
  else if (key == "principal_point") { need(2); k.u0 = dbl(0); k.v0 = dbl(1); }
  else if (key == "image_size") { need(2); k.image_width = static_cast<int>(uint(0)); k.image_height = static_cast<int>(uint(1)); }
  else if (key == "baseline_m") cfg.rig.baseline_m = one_dbl();
  else if (key == "camera_height_m") cfg.rig.camera_height_m = one_dbl();
  else if (key == "z_min_m") cfg.rig.z_min_m = one_dbl();
  else if (key == "z_max_m") cfg.rig.z_max_m = one_dbl();

  else if (key == "population_size") ev.population_size = one_uint();
  else if (key == "selection_ratio") ev.selection_ratio = one_dbl();
  else if (key == "mutation_fraction") ev.mutation_fraction = one_dbl();
  else if (key == "crossover_fraction") ev.crossover_fraction = one_dbl();
  else if (key == "immigration_fraction") ev.immigration_fraction = one_dbl();
  else if (key == "mutation_sigma") {
    if (vals.size() == 1) ev.mutation_sigma = Vec3{dbl(), dbl(), dbl()};
    else { need(3); ev.mutation_sigma = Vec3{dbl(0), dbl(1), dbl(2)}; }
  }
  else if (key == "neighborhood_radius") ev.neighborhood_radius = static_cast<int>(one_uint());
  else if (key == "sharing_cell_px") ev.sharing_cell_px = static_cast<int>(one_uint());
  else if (key == "sharing_exponent") ev.sharing_exponent = one_dbl();
  else if (key == "fitness_epsilon") ev.fitness_epsilon = one_dbl();
  else if (key == "rng_seed" || key == "seed") ev.rng_seed = one_uint();

  else if (key == "max_height_m") wp.max_height_m = one_dbl();
  else if (key == "min_height_m") wp.min_height_m = one_dbl();
  else if (key == "max_range_m") wp.max_range_m = one_dbl();
  else if (key == "x_clamp_m") wp.x_clamp_m = one_dbl();
  else if (key == "z_clamp_m") wp.z_clamp_m = one_dbl();

  else if (key == "generations") cfg.generations = one_uint();
  else if (key == "frame_generations") cfg.frame_generations = one_uint();
  else if (key == "overlay_top_k") cfg.overlay_top_k = one_uint();
  else if (key == "bench_generations") cfg.bench_generations = one_uint();
  else if (key == "threads") cfg.threads = static_cast<unsigned>(one_uint());
  else if (key == "preset") { need(1); cfg.preset = parse_preset(vals[0]); }
  else if (key == "left") { need(1); cfg.left_path = vals[0]; }
  else if (key == "right") { need(1); cfg.right_path = vals[0]; }
  else if (key == "out") { need(1); cfg.out_dir = vals[0]; }
  else if (key == "frame") cfg.frames.push_back(parse_frame_source(value));

  else if (key == "background_grey") { need(1); scene().background_grey = grey(0); }
  else if (key == "ground_texture_seed") scene().ground_texture_seed = one_uint();
  else if (key == "ground_texture_cell_m") scene().ground_texture_cell_m = one_dbl();
  else if (key == "ground_texture_range") { need(2); scene().ground_texture_min = grey(0); scene().ground_texture_max = grey(1); }
  else if (key == "ground_grey") { need(1); scene().ground_grey = grey(0); }
  else if (key == "obstacle") {
    if (vals.size() != 7 && vals.size() != 9)
      throw ConfigError("obstacle expects: cx cy cz width height texture_seed texture_cell [min max]");
    TexturedRect r;
    r.center = {dbl(0), dbl(1), dbl(2)};
    r.width_m = dbl(3);
    r.height_m = dbl(4);
    r.texture_seed = uint(5);
    r.texture_cell_m = dbl(6);
    if (vals.size() == 9) { r.texture_min = grey(7); r.texture_max = grey(8); }
    scene().obstacles.push_back(r);
  }
  else throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

inline void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    try {
      apply_setting(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

}  // namespace flyswarm
