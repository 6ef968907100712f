#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "radar/cli/config.hpp"
#include "radar/corpus/corpus.hpp"
#include "radar/eval/studies.hpp"

namespace radar::cli {

/// Files written by `prepare` inside the output directory.
struct PreparedData {
  Vocabulary vocab;
  std::vector<corpus::CorpusTriple> train;
  std::vector<corpus::CorpusTriple> validation;
  std::vector<corpus::CorpusTriple> test;
  corpus::Manifest manifest;
};

std::filesystem::path data_dir(const RunConfig& cfg);
std::filesystem::path checkpoint_dir(const RunConfig& cfg);
std::filesystem::path report_dir(const RunConfig& cfg);

/// Builds the AI-text corpus with the frozen target model and writes the
/// splits, the target model and a manifest.
corpus::Manifest cmd_prepare(const RunConfig& cfg);
PreparedData load_prepared(const std::filesystem::path& dir);

/// Warm-starts the paraphraser, runs adversarial training and writes the
/// checkpoint directory. Returns the checkpoint directory.
std::filesystem::path cmd_train(const RunConfig& cfg);

/// Reads one text per line (plain, or JSON with "text" and optional "id")
/// and writes {"id", "ai_score"} lines. Returns the number of texts scored.
std::size_t cmd_detect(const std::filesystem::path& checkpoint, std::istream& in, std::ostream& out);

/// Writes report.json, report.csv, scores.jsonl and plot CSVs.
eval::EvalReport cmd_eval(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint = {});
eval::TransferMatrix cmd_transfer(const RunConfig& cfg);
eval::EnsembleSweep cmd_ensemble(const RunConfig& cfg);

/// Command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace radar::cli
