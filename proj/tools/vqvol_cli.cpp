#include "vqvol/checkpoint.hpp"
#include "vqvol/codec.hpp"
#include "vqvol/config.hpp"
#include "vqvol/evaluate.hpp"
#include "vqvol/metrics.hpp"
#include "vqvol/phantom.hpp"
#include "vqvol/trainer.hpp"
#include "vqvol/volume.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace vqvol;

namespace {

struct Dataset {
  std::vector<Volume> volumes;
  std::vector<std::string> names;
};

Dataset load_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::invalid_argument("data directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".vol") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::invalid_argument("no .vol files in " + dir.string());
  Dataset d;
  for (const auto& f : files) {
    d.volumes.push_back(read_vol(f));
    d.names.push_back(f.stem().string());
  }
  return d;
}

Dims3 parse_dims(const std::vector<Index>& v) {
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw std::invalid_argument("--dims takes 1 or 3 values");
}

std::uint64_t volume_seed(std::uint64_t seed, Index i) { return seed * 1000003ULL + static_cast<std::uint64_t>(i); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << text << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D VQ-VAE for volumetric compression"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Generate synthetic brain phantoms");
  fs::path gen_out;
  Index gen_n = 20;
  std::string gen_cohort = "control";
  std::vector<Index> gen_dims{24};
  std::uint64_t gen_seed = 0;
  double gen_noise = 0.02;
  bool gen_scale = false;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--n", gen_n, "Number of phantoms")->check(CLI::PositiveNumber);
  gen->add_option("--cohort", gen_cohort, "control or atrophy")->check(CLI::IsMember({"control", "atrophy"}));
  gen->add_option("--dims", gen_dims, "Volume dims (1 or 3 values)");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--noise", gen_noise, "Noise sigma")->check(CLI::NonNegativeNumber);
  gen->add_flag("--scale", gen_scale, "Apply robust 1/99 percentile min-max scaling");

  auto* tr = app.add_subcommand("train", "Train a model");
  fs::path tr_config, tr_data, tr_out, tr_init, tr_resume, tr_log;
  long long tr_steps = 200;
  std::optional<std::uint64_t> tr_seed;
  std::string tr_mode;
  tr->add_option("--config", tr_config, "Experiment config JSON")->check(CLI::ExistingFile);
  tr->add_option("--data", tr_data, "Training data directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--steps", tr_steps, "Optimization steps")->check(CLI::NonNegativeNumber);
  tr->add_option("--out", tr_out, "Output checkpoint")->required();
  tr->add_option("--seed", tr_seed, "Overrides train.seed");
  auto* init_opt = tr->add_option("--init", tr_init, "Fine-tune from this checkpoint")->check(CLI::ExistingFile);
  tr->add_option("--resume", tr_resume, "Resume this checkpoint")->check(CLI::ExistingFile)->excludes(init_opt);
  tr->add_option("--mode", tr_mode, "Training mode label")->check(CLI::IsMember({"H", "P", "PB"}));
  tr->add_option("--log", tr_log, "Write per-step losses as JSON lines");

  auto* ev = app.add_subcommand("evaluate", "Evaluate reconstructions of a test set");
  fs::path ev_ckpt, ev_data, ev_report;
  ev->add_option("--ckpt", ev_ckpt)->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data)->required()->check(CLI::ExistingDirectory);
  ev->add_option("--report", ev_report, "Output report JSON")->required();

  auto* cp = app.add_subcommand("compress", "Encode a volume into a VQC1 code stream");
  fs::path cp_ckpt, cp_in, cp_out;
  cp->add_option("--ckpt", cp_ckpt)->required()->check(CLI::ExistingFile);
  cp->add_option("--in", cp_in)->required()->check(CLI::ExistingFile);
  cp->add_option("--out", cp_out)->required();

  auto* dc = app.add_subcommand("decompress", "Decode a VQC1 code stream");
  fs::path dc_ckpt, dc_in, dc_out;
  dc->add_option("--ckpt", dc_ckpt)->required()->check(CLI::ExistingFile);
  dc->add_option("--in", dc_in)->required()->check(CLI::ExistingFile);
  dc->add_option("--out", dc_out)->required();

  auto* rc = app.add_subcommand("report-compression", "Print latent size and compression ratios");
  fs::path rc_config;
  std::string rc_preset;
  auto* rc_cfg_opt = rc->add_option("--config", rc_config, "Experiment config JSON")->check(CLI::ExistingFile);
  rc->add_option("--preset", rc_preset, "desk or full")->check(CLI::IsMember({"desk", "full"}))->excludes(rc_cfg_opt);

  auto* tm = app.add_subcommand("tmap", "Voxelwise Welch t-map between two groups");
  fs::path tm_a, tm_b, tm_out;
  tm->add_option("--group-a", tm_a)->required()->check(CLI::ExistingDirectory);
  tm->add_option("--group-b", tm_b)->required()->check(CLI::ExistingDirectory);
  tm->add_option("--out", tm_out, "Output VOL1 t-map")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      fs::create_directories(gen_out);
      const Dims3 dims = parse_dims(gen_dims);
      for (Index i = 0; i < gen_n; ++i) {
        PhantomSpec spec = PhantomSpec::for_cohort(parse_cohort(gen_cohort), dims, volume_seed(gen_seed, i));
        spec.noise_sigma = gen_noise;
        Phantom p = generate_phantom(spec);
        if (gen_scale) p.volume = robust_minmax(p.volume);
        char name[32];
        std::snprintf(name, sizeof(name), "phantom_%04lld", static_cast<long long>(i));
        write_vol(gen_out / (std::string(name) + ".vol"), p.volume);
        write_mask(gen_out / (std::string(name) + ".mask"), p.labels);
      }
      std::cout << "wrote " << gen_n << " phantoms to " << gen_out.string() << '\n';
    } else if (*tr) {
      const Dataset data = load_dir(tr_data);
      TrainingState state;
      if (!tr_resume.empty()) {
        state = load_checkpoint(tr_resume);
        if (!tr_config.empty() && !(load_experiment_config(tr_config).model == state.config.model)) {
          throw std::invalid_argument("resume: --config model differs from the checkpoint");
        }
        if (!tr_mode.empty()) state.mode = tr_mode;
      } else {
        ExperimentConfig cfg = tr_config.empty() ? ExperimentConfig{} : load_experiment_config(tr_config);
        if (tr_seed) cfg.train.seed = *tr_seed;
        if (!tr_init.empty()) {
          state = fine_tune_state(load_checkpoint(tr_init), cfg, tr_mode.empty() ? "PB" : tr_mode);
        } else {
          state = initial_state(cfg, tr_mode.empty() ? "H" : tr_mode);
        }
      }
      std::ofstream log;
      if (!tr_log.empty()) {
        log.open(tr_log);
        if (!log) throw std::invalid_argument("cannot write " + tr_log.string());
      }
      const Index every = state.config.train.log_every;
      train(state, data.volumes, tr_steps, [&](const TrainLogEntry& e) {
        nlohmann::json j = {{"step", e.step}, {"lr", e.lr}, {"total", e.total}, {"reconstruction", e.reconstruction},
                            {"codebook", e.codebook}, {"mse", e.mse}, {"perplexity", e.perplexity}};
        if (log.is_open()) log << j.dump() << '\n';
        if (e.step % every == 0) std::cout << j.dump() << '\n';
      });
      save_checkpoint(tr_out, state);
      std::cout << "saved " << tr_out.string() << " at step " << state.step << '\n';
    } else if (*ev) {
      const TrainingState state = load_checkpoint(ev_ckpt);
      const Dataset data = load_dir(ev_data);
      write_text(ev_report, report_json(evaluate_model(state.model, data.volumes, data.names, state.mode)));
      std::cout << "wrote " << ev_report.string() << '\n';
    } else if (*cp) {
      const TrainingState state = load_checkpoint(cp_ckpt);
      const auto bytes = compress(read_vol(cp_in), state.model);
      write_file(cp_out, bytes);
      std::cout << "wrote " << bytes.size() << " bytes to " << cp_out.string() << '\n';
    } else if (*dc) {
      const TrainingState state = load_checkpoint(dc_ckpt);
      write_vol(dc_out, decompress(read_file(dc_in), state.model));
      std::cout << "wrote " << dc_out.string() << '\n';
    } else if (*rc) {
      ModelConfig cfg = ModelConfig::desk();
      if (!rc_config.empty()) cfg = load_experiment_config(rc_config).model;
      if (rc_preset == "full") cfg = ModelConfig::full_res();
      const CompressionReport r = compression_report(cfg);
      const nlohmann::json j = {{"latent_variables", r.latent_variables}, {"input_voxels", r.input_voxels},
                                {"variable_ratio", r.variable_ratio},     {"bitwise_ratio", r.bitwise_ratio},
                                {"payload_bytes", r.payload_bytes},       {"header_bytes", r.header_bytes},
                                {"bytes", r.bytes},                       {"input_bytes", r.input_bytes}};
      std::cout << j.dump(2) << '\n';
    } else if (*tm) {
      const TMap t = t_map(load_dir(tm_a).volumes, load_dir(tm_b).volumes);
      write_vol(tm_out, t.t);
      std::cout << "wrote " << tm_out.string() << " (" << t.valid_count() << " valid voxels, mean |t| "
                << t.mean_abs() << ")\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
