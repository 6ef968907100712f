#pragma once

#include <span>
#include <vector>

namespace radar::eval {

struct ScoredLabel {
  /// Higher means more likely AI-text.
  double ai_score = 0.0;
  bool is_ai = false;
};

/// Mann-Whitney AUROC with AI-text as the positive class, computed from mid
/// ranks so that ties count one half. Throws "degenerate labels" unless both
/// classes are present.
double auroc(std::span<const ScoredLabel> scores);
double auroc(std::span<const double> ai_scores, std::span<const double> human_scores);

/// O(n_ai * n_human) pair count; reference implementation for tests.
double auroc_pairwise(std::span<const double> ai_scores, std::span<const double> human_scores);

}  // namespace radar::eval
