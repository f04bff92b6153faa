#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "proxydiff/tree_diff.hpp"
#include "proxydiff/vuln_detect.hpp"

namespace proxydiff {

struct DimensionScores {
  double position = 0.0;
  double pattern = 0.0;
  double semantic = 0.0;
  double type = 0.0;
};

struct SemanticFeatures {
  double function_name = 0.0;   // fuzzy name similarity
  double node_type = 0.0;       // node kind relevance to the vulnerability type
  double keyword_overlap = 0.0; // Jaccard of change tokens and finding keywords
  double op_similarity = 0.0;   // edit kind relevance to the vulnerability type
  double trait_match = 0.0;     // snippet contains a trait keyword
  double impact_area = 0.0;     // same function / same contract
};

struct MatchWeights {
  double position = 0.3;
  double pattern = 0.25;
  double semantic = 0.3;
  double type = 0.15;
};

struct SemanticWeights {
  double function_name = 0.3;
  double node_type = 0.2;
  double keyword_overlap = 0.15;
  double op_similarity = 0.15;
  double trait_match = 0.1;
  double impact_area = 0.1;
};

struct MatchPair {
  int change_id = 0;
  int finding_id = 0;
  DimensionScores scores;
  SemanticFeatures features;
  double confidence = 0.0;
};

struct MatchOptions {
  double threshold = 0.6;       // pairs are kept when confidence is strictly greater
  bool enhanced = true;         // false drops the semantic dimension
};

/// Step function of the absolute line distance.
double position_score(int line_distance);
double position_score(const ChangeRecord& change, const Finding& finding);

/// 0.1 per distinct finding keyword present (case-insensitive, whole word) in
/// the +-5 line window around the change; capped at 1.
double pattern_score(const ChangeRecord& change, const Finding& finding, std::string_view source);

SemanticFeatures semantic_features(const ChangeRecord& change, const Finding& finding);
double semantic_score(const SemanticFeatures& features, const SemanticWeights& weights = {});
std::pair<double, SemanticFeatures> semantic_score(const ChangeRecord& change, const Finding& finding);

double type_score(EditKind op, VulnType type);
double type_score(const ChangeRecord& change, const Finding& finding);

double confidence(const DimensionScores& scores, const MatchWeights& weights = {});

/// Feature tables exposed for tests and the report schema documentation.
double node_type_relevance(std::string_view node_kind, VulnType type);
double op_similarity(EditKind op, VulnType type);
double name_similarity(std::string_view a, std::string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Scores one pair. `source` is the text on the change's side.
MatchPair score_pair(const ChangeRecord& change, const Finding& finding, std::string_view source,
                     const MatchOptions& options = {});

/// Scores the full cross product and keeps pairs above the threshold, sorted
/// by confidence descending, then (change_id, finding_id). Deletes are scored
/// against `v1_source`, everything else against `v2_source`.
std::vector<MatchPair> match_all(const std::vector<ChangeRecord>& changes,
                                 const std::vector<Finding>& findings, std::string_view v2_source,
                                 std::string_view v1_source, const MatchOptions& options = {});

}  // namespace proxydiff
