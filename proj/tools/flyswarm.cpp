// flyswarm: synthetic stereo scenes, fly-swarm obstacle detection and timing.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flyswarm/flyswarm.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> generations;
  std::optional<std::size_t> population;
  std::optional<std::string> out;
  std::optional<std::string> left;
  std::optional<std::string> right;
  std::optional<std::string> preset;
  std::optional<std::size_t> top_k;
  std::vector<std::string> frames;
  std::optional<std::size_t> frame_generations;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--generations", o.generations, "Generations to run");
  cmd->add_option("--population", o.population, "Population size");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--left", o.left, "Left image (PGM/PPM)");
  cmd->add_option("--right", o.right, "Right image (PGM/PPM)");
  cmd->add_option("--preset", o.preset, "Synthetic scene")->check(CLI::IsMember({"empty-road", "pedestrian-4m"}));
}

flyswarm::RunConfig build_config(const Overrides& o) {
  flyswarm::RunConfig cfg;
  if (!o.config.empty()) flyswarm::apply_config_file(cfg, o.config);
  if (o.seed) cfg.evolution.rng_seed = *o.seed;
  if (o.generations) cfg.generations = *o.generations;
  if (o.population) cfg.evolution.population_size = *o.population;
  if (o.out) cfg.out_dir = *o.out;
  if (o.left) cfg.left_path = *o.left;
  if (o.right) cfg.right_path = *o.right;
  if (o.preset) cfg.preset = flyswarm::parse_preset(*o.preset);
  if (o.top_k) cfg.overlay_top_k = *o.top_k;
  if (!o.frames.empty()) {
    cfg.frames.clear();
    for (const auto& f : o.frames) cfg.frames.push_back(flyswarm::parse_frame_source(f));
  }
  if (o.frame_generations) cfg.frame_generations = *o.frame_generations;
  cfg.threads = flyswarm::evaluation_threads_from_env();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fly-swarm stereo obstacle detection"};
  app.require_subcommand(1);
  Overrides o;

  auto* synth = app.add_subcommand("synth", "Render a synthetic stereo pair with ground truth");
  add_common(synth, o);

  auto* detect = app.add_subcommand("detect", "Evolve flies on a stereo pair and report the collision warning");
  add_common(detect, o);
  detect->add_option("--top-k", o.top_k, "Flies marked on the overlays");

  auto* sequence = app.add_subcommand("sequence", "Evolve one population across a sequence of stereo pairs");
  add_common(sequence, o);
  sequence->add_option("--frame", o.frames, "preset:NAME or LEFT,RIGHT (repeatable, in order)");
  sequence->add_option("--frame-generations", o.frame_generations, "Generations per frame");

  auto* bench = app.add_subcommand("bench", "Time generations at the configured population and twice it");
  add_common(bench, o);

  CLI11_PARSE(app, argc, argv);

  try {
    flyswarm::RunConfig cfg = build_config(o);
    if (*synth) {
      flyswarm::run_synth(cfg);
    } else if (*detect) {
      const auto r = flyswarm::run_detect(cfg, std::cout);
      std::cerr << "final global warning: " << flyswarm::format_double(r.final_global_warning) << '\n';
    } else if (*sequence) {
      flyswarm::run_sequence(cfg, std::cout);
    } else if (*bench) {
      if (o.generations) cfg.bench_generations = *o.generations;
      flyswarm::run_bench(cfg, std::cout);
    }
  } catch (const flyswarm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
