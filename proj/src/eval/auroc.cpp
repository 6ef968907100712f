#include "radar/eval/auroc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "radar/core/types.hpp"

namespace radar::eval {

double auroc(std::span<const ScoredLabel> scores) {
  std::size_t n_ai = 0;
  for (const auto& s : scores) {
    if (std::isnan(s.ai_score)) throw Error("auroc: NaN score");
    n_ai += s.is_ai ? 1 : 0;
  }
  const std::size_t n_human = scores.size() - n_ai;
  if (n_ai == 0 || n_human == 0) throw Error("degenerate labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].ai_score < scores[b].ai_score; });
  // Sum of doubled mid ranks of the AI examples keeps the arithmetic integral.
  std::uint64_t rank_sum2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]].ai_score == scores[order[i]].ai_score) ++j;
    const std::uint64_t mid2 = static_cast<std::uint64_t>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (scores[order[t]].is_ai) rank_sum2 += mid2;
    i = j;
  }
  const std::uint64_t base2 = static_cast<std::uint64_t>(n_ai) * (n_ai + 1);
  const double u2 = static_cast<double>(rank_sum2 - base2);
  return u2 / (2.0 * static_cast<double>(n_ai) * static_cast<double>(n_human));
}

double auroc(std::span<const double> ai_scores, std::span<const double> human_scores) {
  std::vector<ScoredLabel> all;
  all.reserve(ai_scores.size() + human_scores.size());
  for (double s : ai_scores) all.push_back({s, true});
  for (double s : human_scores) all.push_back({s, false});
  return auroc(all);
}

double auroc_pairwise(std::span<const double> ai_scores, std::span<const double> human_scores) {
  if (ai_scores.empty() || human_scores.empty()) throw Error("degenerate labels");
  std::uint64_t twice = 0;
  for (double a : ai_scores)
    for (double h : human_scores) twice += a > h ? 2 : (a == h ? 1 : 0);
  return static_cast<double>(twice) / (2.0 * static_cast<double>(ai_scores.size() * human_scores.size()));
}

}  // namespace radar::eval
