#pragma once

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "radar/lm/language_model.hpp"
#include "radar/lm/ngram.hpp"
#include "radar/lm/rnn.hpp"

namespace radar::lm {

/// Self-describing container: format version, backend kind, vocabulary,
/// hyperparameters and parameters (flat blocks or n-gram counts).
nlohmann::json lm_to_json(const LanguageModel& lm);
std::unique_ptr<LanguageModel> lm_from_json(const nlohmann::json& j);

void save_lm(const std::filesystem::path& path, const LanguageModel& lm);
std::unique_ptr<LanguageModel> load_lm(const std::filesystem::path& path);
/// Loads a checkpoint that must hold a recurrent model.
std::unique_ptr<RnnLM> load_rnn(const std::filesystem::path& path);

}  // namespace radar::lm
