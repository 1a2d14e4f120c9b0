#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "groupscope/corpus.hpp"
#include "groupscope/embeddings.hpp"
#include "groupscope/multitask_model.hpp"

namespace groupscope {

/// Linear coefficients of the four importance criteria.
struct CriterionWeights {
  double posterior = 1.0;  // u_p
  double length = 1.0;     // u_l
  double rank = 1.0;       // u_r
  double frequency = 1.0;  // u_f

  void validate() const;
  bool operator==(const CriterionWeights&) const = default;
};

struct CueExtractionConfig {
  double epsilon = 1e-6;
  CriterionWeights weights;
  std::size_t top_k_display = 10;

  void validate() const;
};

/// Contiguous token range [begin, end) inside one instance.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct ExtractedSpan {
  Span span;
  std::size_t seed = 0;  // index of the attention maximum
  double cumulative_attention = 0;
  double threshold = 0;
};

/// Grows a span around the attention maximum while the span's mean
/// attention stays at or above max(a) - var(a) / 2.
ExtractedSpan extract_span(std::span<const double> attention);
ExtractedSpan extract_span(const AttentionTrace& trace);

struct LanguageCue {
  std::string instance_id;
  Span span;
  std::string text;
  double cumulative_attention = 0;
  double posterior_score = 0;  // p, min-max normalized
  double length = 0;           // l_len
  double rank = 0;             // r in (0, 1]
  double frequency = 0;        // f
  double importance = 0;       // w_seq
  double attribute_value = 0;
  std::array<double, 2> group_posterior{};  // Red, Blue
};

/// (u_p p + u_l log(l + eps)) / (u_r r + u_f log(f + eps)), natural log.
double importance_score(double p, double length, double rank, double frequency, const CriterionWeights& w,
                        double epsilon);

/// Sorts by importance descending, ties by instance id.
void rank_cues(std::vector<LanguageCue>& cues);

/// One cue per training instance of the model's attribute, ranked.
std::vector<LanguageCue> mine(const TrainedAttributeModel& model, const Dataset& d, const EmbeddingPair& embeddings,
                              const CueExtractionConfig& cfg = {});

/// Recomputes importance with new weights and re-sorts.
std::vector<LanguageCue> reweight(std::vector<LanguageCue> cues, const CriterionWeights& weights,
                                  double epsilon = 1e-6);

/// Number of instances whose token stream contains the phrase contiguously.
std::size_t phrase_frequency(const Dataset& d, const std::vector<std::string>& phrase);

nlohmann::json to_json(const LanguageCue& c);
/// One JSON object per line.
std::string cues_to_jsonl(const std::vector<LanguageCue>& cues);

}  // namespace groupscope
