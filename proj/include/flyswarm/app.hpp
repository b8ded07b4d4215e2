#pragma once

// The four pipeline commands behind the `flyswarm` executable.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "flyswarm/config.hpp"
#include "flyswarm/error.hpp"
#include "flyswarm/evolution.hpp"
#include "flyswarm/image.hpp"
#include "flyswarm/pnm.hpp"
#include "flyswarm/synth.hpp"
#include "flyswarm/warning.hpp"

namespace flyswarm {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

/// Worker count for fitness evaluation: hardware concurrency, capped by FLYSWARM_THREADS.
inline unsigned evaluation_threads_from_env() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FLYSWARM_THREADS")) {
    unsigned cap = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cap);
    if (ec == std::errc{} && ptr == s.data() + s.size() && cap > 0) n = std::min(n, cap);
  }
  return n;
}

inline void ensure_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!std::filesystem::is_directory(dir)) throw ConfigError("output directory is not writable: " + dir.string());
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

inline StereoFrame frame_from_source(const FrameSource& src, const StereoRig& rig) {
  if (src.preset) {
    auto [l, r] = render_stereo_pair(make_preset(*src.preset, rig), rig);
    return StereoFrame(std::move(l), std::move(r));
  }
  StereoFrame frame(read_pnm_file(src.left), read_pnm_file(src.right));
  frame.check_matches(rig);
  return frame;
}

/// Image pair from --left/--right, else the preset (pedestrian-4m by default).
inline StereoFrame load_detect_frame(const RunConfig& cfg) {
  if (!cfg.left_path.empty()) return frame_from_source({std::nullopt, cfg.left_path, cfg.right_path}, cfg.rig);
  return frame_from_source({cfg.preset.value_or(Preset::Pedestrian4m), {}, {}}, cfg.rig);
}

// ---------------------------------------------------------------- synth

inline void write_truth_csv(std::ostream& out, const Scene& scene, const StereoRig& rig) {
  out << "kind,center_x,center_y,center_z,width_m,height_m,texture_seed,texture_cell_m\n";
  for (const auto& r : scene.obstacles) {
    out << "obstacle," << format_double(r.center.x) << ',' << format_double(r.center.y) << ','
        << format_double(r.center.z) << ',' << format_double(r.width_m) << ',' << format_double(r.height_m) << ','
        << r.texture_seed << ',' << format_double(r.texture_cell_m) << '\n';
  }
  if (scene.ground_texture_seed) {
    out << "ground,0," << format_double(-rig.camera_height_m) << ",0,,," << *scene.ground_texture_seed << ','
        << format_double(scene.ground_texture_cell_m) << '\n';
  }
}

inline Scene scene_for_synth(const RunConfig& cfg) {
  if (cfg.scene) return *cfg.scene;
  return make_preset(cfg.preset.value_or(Preset::EmptyRoad), cfg.rig);
}

/// Renders the configured scene to left.pgm, right.pgm and truth.csv.
inline void run_synth(const RunConfig& cfg) {
  cfg.validate();
  const Scene scene = scene_for_synth(cfg);
  const auto [left, right] = render_stereo_pair(scene, cfg.rig);
  ensure_out_dir(cfg.out_dir);
  write_pnm_file(cfg.out_dir / "left.pgm", left);
  write_pnm_file(cfg.out_dir / "right.pgm", right);
  auto truth = open_output(cfg.out_dir / "truth.csv");
  write_truth_csv(truth, scene, cfg.rig);
}

// ---------------------------------------------------------------- detect

inline void write_flies_csv(std::ostream& out, const Population& pop, const WarningReport& report) {
  out << "x,y,z,raw_fitness,shared_fitness,penalized,warning\n";
  for (std::size_t i = 0; i < pop.flies.size(); ++i) {
    const Fly& f = pop.flies[i];
    out << format_double(f.position.x) << ',' << format_double(f.position.y) << ',' << format_double(f.position.z)
        << ',' << format_double(f.raw_fitness) << ',' << format_double(f.shared_fitness) << ','
        << (f.penalized ? 1 : 0) << ',' << format_double(report.per_fly[i]) << '\n';
  }
}

/// RGB copy of `base` with a 3x3 red cross at every marker. Returns the image.
inline Image draw_overlay(const Image& base, const std::vector<Pixel>& markers) {
  Image out(base.width(), base.height(), 3);
  for (int r = 0; r < base.height(); ++r)
    for (int c = 0; c < base.width(); ++c)
      for (int ch = 0; ch < 3; ++ch) out.at(c, r, ch) = base.at(c, r, base.channels() == 3 ? ch : 0);
  constexpr std::array<std::array<int, 2>, 5> kCross{{{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
  for (const Pixel& p : markers) {
    for (const auto& [dc, dr] : kCross) {
      const int c = p.col + dc;
      const int r = p.row + dr;
      if (!out.contains(c, r)) continue;
      out.at(c, r, 0) = 255;
      out.at(c, r, 1) = 0;
      out.at(c, r, 2) = 0;
    }
  }
  return out;
}

struct DetectResult {
  Population population;
  std::vector<double> trace;  // global warning per generation
  double final_global_warning = 0.0;
  std::size_t overlay_marked = 0;
};

inline void write_trace_line(std::ostream& out, std::size_t generation, double warning) {
  out << generation << ',' << format_double(warning) << '\n';
}

/// Evolves a fresh population on one stereo pair. Writes flies.csv,
/// warning_trace.csv and both overlays into cfg.out_dir; trace lines also go to `log`.
inline DetectResult run_detect(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const StereoFrame frame = load_detect_frame(cfg);
  frame.check_matches(cfg.rig);
  const SearchVolume volume(cfg.rig, cfg.evolution.neighborhood_radius);
  Rng rng(cfg.evolution.rng_seed);

  DetectResult result;
  result.population = initialize_population(volume, cfg.evolution, rng);
  for (std::size_t g = 1; g <= cfg.generations; ++g) {
    const auto summary = step_generation(result.population, frame, volume, cfg.evolution, cfg.warning, rng, cfg.threads);
    result.trace.push_back(summary.global_warning);
    write_trace_line(log, g, summary.global_warning);
  }

  // Score the final population, offspring included.
  score_population(result.population, frame, cfg.rig, cfg.evolution, cfg.warning, cfg.threads);
  const WarningReport report = global_warning(result.population, cfg.warning);
  result.final_global_warning = report.global;

  ensure_out_dir(cfg.out_dir);
  if (cfg.emit_flies) {
    auto out = open_output(cfg.out_dir / "flies.csv");
    write_flies_csv(out, result.population, report);
  }
  if (cfg.emit_trace) {
    auto out = open_output(cfg.out_dir / "warning_trace.csv");
    out << "generation,global_warning\n";
    for (std::size_t g = 0; g < result.trace.size(); ++g) write_trace_line(out, g + 1, result.trace[g]);
  }
  if (cfg.emit_overlay) {
    const auto best = top_k(result.population, std::min(cfg.overlay_top_k, result.population.size()));
    std::vector<Pixel> left_marks;
    std::vector<Pixel> right_marks;
    for (std::size_t i : best) {
      const Projection p = project(cfg.rig, result.population.flies[i].position);
      left_marks.push_back(to_pixel(p.left));
      right_marks.push_back(to_pixel(p.right));
    }
    write_pnm_file(cfg.out_dir / "overlay_left.ppm", draw_overlay(frame.left, left_marks));
    write_pnm_file(cfg.out_dir / "overlay_right.ppm", draw_overlay(frame.right, right_marks));
    result.overlay_marked = best.size();
  }
  return result;
}

// ---------------------------------------------------------------- sequence

struct SequenceResult {
  Population population;
  std::vector<double> trace;
  std::vector<std::size_t> frame_start;  // first generation (1-based) of each frame
};

/// Runs one persistent population over the frames, frame_generations each.
inline SequenceResult run_sequence_frames(const RunConfig& cfg, const std::vector<StereoFrame>& frames,
                                          std::ostream* log = nullptr) {
  cfg.validate();
  if (frames.empty()) throw ConfigError("sequence needs at least one frame");
  const SearchVolume volume(cfg.rig, cfg.evolution.neighborhood_radius);
  Rng rng(cfg.evolution.rng_seed);
  SequenceResult result;
  result.population = initialize_population(volume, cfg.evolution, rng);
  std::size_t g = 0;
  for (const auto& frame : frames) {
    frame.check_matches(cfg.rig);
    result.frame_start.push_back(g + 1);
    for (std::size_t i = 0; i < cfg.frame_generations; ++i) {
      const auto s = step_generation(result.population, frame, volume, cfg.evolution, cfg.warning, rng, cfg.threads);
      result.trace.push_back(s.global_warning);
      ++g;
      if (log) write_trace_line(*log, g, s.global_warning);
    }
  }
  return result;
}

inline SequenceResult run_sequence(const RunConfig& cfg, std::ostream& log) {
  std::vector<StereoFrame> frames;
  frames.reserve(cfg.frames.size());
  for (const auto& src : cfg.frames) {
    if (!src.preset && (src.left.empty() || src.right.empty()))
      throw ConfigError("sequence frame is missing its left or right image");
    frames.push_back(frame_from_source(src, cfg.rig));
  }
  SequenceResult result = run_sequence_frames(cfg, frames, &log);
  ensure_out_dir(cfg.out_dir);
  auto out = open_output(cfg.out_dir / "warning_trace.csv");
  out << "generation,global_warning\n";
  for (std::size_t g = 0; g < result.trace.size(); ++g) write_trace_line(out, g + 1, result.trace[g]);
  return result;
}

// ---------------------------------------------------------------- bench

struct LatencyStats {
  std::size_t population = 0;
  std::size_t generations = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
};

/// Times step_generation on `frame` after a short warm-up.
inline LatencyStats time_generations(const StereoFrame& frame, const StereoRig& rig, EvolutionParams params,
                                     const WarningParams& wp, std::size_t population, std::size_t generations,
                                     unsigned threads = 1) {
  params.population_size = population;
  const SearchVolume volume(rig, params.neighborhood_radius);
  Rng rng(params.rng_seed);
  Population pop = initialize_population(volume, params, rng);
  for (int i = 0; i < 10; ++i) step_generation(pop, frame, volume, params, wp, rng, threads);

  std::vector<double> ms;
  ms.reserve(generations);
  for (std::size_t i = 0; i < generations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    step_generation(pop, frame, volume, params, wp, rng, threads);
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  LatencyStats s;
  s.population = population;
  s.generations = generations;
  if (ms.empty()) return s;
  for (double v : ms) s.mean_ms += v;
  s.mean_ms /= static_cast<double>(ms.size());
  std::sort(ms.begin(), ms.end());
  auto pct = [&](double q) { return ms[std::min(ms.size() - 1, static_cast<std::size_t>(q * (ms.size() - 1) + 0.5))]; };
  s.p50_ms = pct(0.50);
  s.p95_ms = pct(0.95);
  s.max_ms = ms.back();
  return s;
}

struct BenchReport {
  LatencyStats base;
  LatencyStats doubled;
  double scaling() const { return base.mean_ms > 0.0 ? doubled.mean_ms / base.mean_ms : 0.0; }
};

/// Per-generation latency at the configured population and at twice that.
inline BenchReport run_bench(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const StereoFrame frame = load_detect_frame(cfg);
  BenchReport r;
  const std::size_t n = cfg.evolution.population_size;
  r.base = time_generations(frame, cfg.rig, cfg.evolution, cfg.warning, n, cfg.bench_generations, cfg.threads);
  r.doubled = time_generations(frame, cfg.rig, cfg.evolution, cfg.warning, 2 * n, cfg.bench_generations, cfg.threads);
  out << "population,generations,mean_ms,p50_ms,p95_ms,max_ms\n";
  for (const auto* s : {&r.base, &r.doubled}) {
    out << s->population << ',' << s->generations << ',' << format_double(s->mean_ms) << ','
        << format_double(s->p50_ms) << ',' << format_double(s->p95_ms) << ',' << format_double(s->max_ms) << '\n';
  }
  out << "# doubling population scales mean latency by " << format_double(r.scaling()) << "x\n";
  return r;
}

}  // namespace flyswarm
