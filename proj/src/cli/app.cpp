#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "radar/cli/commands.hpp"
#include "radar/core/json_io.hpp"

namespace radar::cli {

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string unseen_endpoint;
  std::string checkpoint;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Run configuration (JSON)");
  cmd->add_option("--seed", f.seed, "Overrides the configured seed");
  cmd->add_option("--out", f.out, "Overrides the output directory");
  cmd->add_option("--unseen-endpoint", f.unseen_endpoint,
                  "HTTP endpoint of the unseen paraphraser (falls back to RADAR_UNSEEN_ENDPOINT)");
  cmd->add_option("--checkpoint", f.checkpoint, "Detector checkpoint");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig::defaults() : RunConfig::load(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.unseen_endpoint.empty()) {
    cfg.eval.unseen.kind = "http";
    cfg.eval.unseen.endpoint = f.unseen_endpoint;
  }
  cfg.validate();
  return cfg;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Timestamps live only here so that every other output is reproducible.
void write_sidecar(const RunConfig& cfg, const std::string& command, const std::string& started, int argc,
                   char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  write_json_file(cfg.out_dir / "meta" / (command + ".json"),
                  {{"command", command}, {"argv", args}, {"started_at", started}, {"finished_at", utc_now()}});
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Adversarially trained AI-text detection"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-default-config", print_defaults, "Print the default configuration and exit");

  CommonFlags prepare_f, train_f, eval_f, transfer_f, ensemble_f, detect_f;
  std::string detect_input;
  auto* prepare = app.add_subcommand("prepare", "Build the AI-text corpus and data splits");
  add_common(prepare, prepare_f);
  auto* train = app.add_subcommand("train", "Adversarially train the detector and paraphraser");
  add_common(train, train_f);
  auto* detect = app.add_subcommand("detect", "Score texts with a trained detector (JSONL to stdout)");
  add_common(detect, detect_f);
  detect->add_option("--input", detect_input, "Input file, one text per line (default: stdin)");
  auto* evaluate = app.add_subcommand("eval", "Evaluate detectors under the configured schemas");
  add_common(evaluate, eval_f);
  auto* transfer = app.add_subcommand("transfer", "Cross-model transferability matrix");
  add_common(transfer, transfer_f);
  auto* ensemble = app.add_subcommand("ensemble", "Ensemble two detectors over a sweep of weights");
  add_common(ensemble, ensemble_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (print_defaults) {
      std::cout << RunConfig::defaults().to_json().dump(2) << "\n";
      return 0;
    }
    const std::string started = utc_now();
    if (*prepare) {
      const auto cfg = resolve(prepare_f);
      const auto m = cmd_prepare(cfg);
      write_sidecar(cfg, "prepare", started, argc, argv);
      std::cerr << "prepared " << data_dir(cfg).string() << " (vocabulary " << m.vocabulary.size() << ", skipped "
                << m.skipped_short + m.skipped_failed << ")\n";
    } else if (*train) {
      const auto cfg = resolve(train_f);
      const auto dir = cmd_train(cfg);
      write_sidecar(cfg, "train", started, argc, argv);
      std::cerr << "checkpoints in " << dir.string() << "\n";
    } else if (*detect) {
      if (detect_f.checkpoint.empty()) throw Error("detect: --checkpoint is required");
      if (detect_input.empty()) {
        cmd_detect(detect_f.checkpoint, std::cin, std::cout);
      } else {
        std::ifstream in(detect_input);
        if (!in) throw Error("cannot open " + detect_input);
        cmd_detect(detect_f.checkpoint, in, std::cout);
      }
    } else if (*evaluate) {
      const auto cfg = resolve(eval_f);
      std::optional<std::filesystem::path> ckpt;
      if (!eval_f.checkpoint.empty()) ckpt = eval_f.checkpoint;
      cmd_eval(cfg, ckpt);
      write_sidecar(cfg, "eval", started, argc, argv);
      std::cerr << "reports in " << report_dir(cfg).string() << "\n";
    } else if (*transfer) {
      const auto cfg = resolve(transfer_f);
      cmd_transfer(cfg);
      write_sidecar(cfg, "transfer", started, argc, argv);
    } else if (*ensemble) {
      auto cfg = resolve(ensemble_f);
      if (!ensemble_f.checkpoint.empty()) cfg.ensemble.augmented = ensemble_f.checkpoint;
      cmd_ensemble(cfg);
      write_sidecar(cfg, "ensemble", started, argc, argv);
    } else {
      std::cerr << app.help();
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace radar::cli
