#include "fast0tag/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fast0tag/errors.hpp"

namespace f0t {

double image_average_precision(const RankedTagList& ranking,
                               const std::set<std::string>& relevant) {
  if (relevant.empty()) throw DataError("average precision: empty relevant set");
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranking.entries.size(); ++k) {
    if (relevant.count(ranking.entries[k].tag) != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  if (hits != relevant.size()) {
    throw DataError("average precision: " + std::to_string(relevant.size() - hits) +
                    " relevant tag(s) absent from the ranking");
  }
  return sum / static_cast<double>(relevant.size());
}

std::pair<double, std::size_t> miap(const std::vector<RankedTagList>& rankings,
                                    const std::vector<std::set<std::string>>& truths) {
  if (rankings.size() != truths.size()) {
    throw DataError("miap: rankings and truths are misaligned");
  }
  double sum = 0.0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    if (truths[i].empty()) {
      ++skipped;
      continue;
    }
    sum += image_average_precision(rankings[i], truths[i]);
    ++scored;
  }
  if (scored == 0) throw DataError("miap: every image skipped; mean undefined");
  return {sum / static_cast<double>(scored), skipped};
}

Prf prf_at_k(const std::vector<RankedTagList>& rankings,
             const std::vector<std::set<std::string>>& truths, int k) {
  if (rankings.size() != truths.size()) {
    throw DataError("prf_at_k: rankings and truths are misaligned");
  }
  if (k < 1) throw DataError("prf_at_k: K must be positive");
  std::size_t hits = 0;
  std::size_t scored = 0;
  std::size_t total_relevant = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    if (truths[i].empty()) continue;
    const auto& entries = rankings[i].entries;
    if (entries.size() < static_cast<std::size_t>(k)) {
      throw DataError("prf_at_k: ranking with " + std::to_string(entries.size()) +
                      " entries is shorter than K=" + std::to_string(k));
    }
    for (int r = 0; r < k; ++r) {
      if (truths[i].count(entries[static_cast<std::size_t>(r)].tag) != 0) ++hits;
    }
    ++scored;
    total_relevant += truths[i].size();
  }
  if (scored == 0) throw DataError("prf_at_k: every image skipped");
  Prf out;
  out.precision = static_cast<double>(hits) /
                  (static_cast<double>(k) * static_cast<double>(scored));
  out.recall = static_cast<double>(hits) / static_cast<double>(total_relevant);
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

RankedTagList random_ranking(const std::vector<std::string>& candidates, Rng& rng) {
  if (candidates.empty()) throw DataError("random_ranking: empty candidates");
  std::vector<std::string> order = candidates;
  rng.shuffle(order);
  RankedTagList out;
  out.entries.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.entries.push_back({order[i], static_cast<double>(order.size() - i)});
  }
  return out;
}

EvalReport evaluate(const std::vector<RankedTagList>& rankings,
                    const std::vector<std::set<std::string>>& truths,
                    const std::vector<int>& ks) {
  if (rankings.size() != truths.size()) {
    throw DataError("evaluate: rankings and truths are misaligned");
  }
  std::vector<RankedTagList> kept_rankings;
  std::vector<std::set<std::string>> kept_truths;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    std::set<std::string> active;
    for (const auto& entry : rankings[i].entries) {
      if (truths[i].count(entry.tag) != 0) active.insert(entry.tag);
    }
    if (active.empty()) {
      ++skipped;
      continue;
    }
    kept_rankings.push_back(rankings[i]);
    kept_truths.push_back(std::move(active));
  }
  if (kept_rankings.empty()) {
    throw DataError("evaluate: no image has a relevant tag in its candidate vocabulary");
  }

  EvalReport report;
  report.miap = miap(kept_rankings, kept_truths).first;
  for (const int k : ks) {
    report.per_k[k] = prf_at_k(kept_rankings, kept_truths, k);
  }
  report.images_scored = kept_rankings.size();
  report.images_skipped_no_positives = skipped;
  return report;
}

void write_report_text(std::ostream& out, const EvalReport& report) {
  std::ostringstream line;
  line << std::setprecision(6) << std::fixed;
  line << "miap " << report.miap << '\n';
  for (const auto& [k, prf] : report.per_k) {
    line << "p@" << k << ' ' << prf.precision << '\n';
    line << "r@" << k << ' ' << prf.recall << '\n';
    line << "f1@" << k << ' ' << prf.f1 << '\n';
  }
  out << line.str();
  out << "images_scored " << report.images_scored << '\n';
  out << "images_skipped " << report.images_skipped_no_positives << '\n';
}

void write_report_json(std::ostream& out, const EvalReport& report) {
  nlohmann::ordered_json j;
  j["miap"] = report.miap;
  for (const auto& [k, prf] : report.per_k) {
    const std::string suffix = std::to_string(k);
    j["p@" + suffix] = prf.precision;
    j["r@" + suffix] = prf.recall;
    j["f1@" + suffix] = prf.f1;
  }
  j["images_scored"] = report.images_scored;
  j["images_skipped"] = report.images_skipped_no_positives;
  out << j.dump(2) << '\n';
}

}  // namespace f0t
