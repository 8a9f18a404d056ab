#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fast0tag/rng.hpp"
#include "fast0tag/tagger.hpp"

namespace f0t {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double miap = 0.0;
  std::map<int, Prf> per_k;
  std::size_t images_scored = 0;
  std::size_t images_skipped_no_positives = 0;
};

// Average precision of one ranking: mean over the ranks holding a relevant
// tag of (relevant tags within the top k) / k. Requires a nonempty relevant
// set, all of whose tags appear in the ranking.
double image_average_precision(const RankedTagList& ranking,
                               const std::set<std::string>& relevant);

// Mean AP over images with at least one relevant tag; returns the mean and
// the number of skipped zero-positive images. Throws if every image is
// skipped (undefined mean).
std::pair<double, std::size_t> miap(const std::vector<RankedTagList>& rankings,
                                    const std::vector<std::set<std::string>>& truths);

// Micro-averaged top-K precision/recall/F1 over the images with at least one
// relevant tag. Every ranking must have at least K entries.
Prf prf_at_k(const std::vector<RankedTagList>& rankings,
             const std::vector<std::set<std::string>>& truths, int k);

// Uniform random permutation of the candidates with descending placeholder
// scores; the Random baseline.
RankedTagList random_ranking(const std::vector<std::string>& candidates, Rng& rng);

// Full report: intersects each truth set with its ranking's tags (the active
// candidate vocabulary), skips images left with no positives, and computes
// MiAP plus P/R/F1 at each requested K.
EvalReport evaluate(const std::vector<RankedTagList>& rankings,
                    const std::vector<std::set<std::string>>& truths,
                    const std::vector<int>& ks);

// Flat key-value text block: miap, p@K/r@K/f1@K per requested K,
// images_scored, images_skipped.
void write_report_text(std::ostream& out, const EvalReport& report);
void write_report_json(std::ostream& out, const EvalReport& report);

}  // namespace f0t
