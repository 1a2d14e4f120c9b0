#pragma once

// Payload builders shared by the CLI and the HTTP service so both emit the
// same bytes for the same inputs.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "groupscope/contrastive.hpp"
#include "groupscope/corpus.hpp"
#include "groupscope/cue_miner.hpp"
#include "groupscope/eval_harness.hpp"
#include "groupscope/group_insights.hpp"

namespace groupscope {

/// Pretty-printed JSON plus a trailing newline.
std::string render_artifact(const nlohmann::json& j);

nlohmann::json dataset_summary(const Dataset& d);
nlohmann::json summary_payload(const Dataset& d, const std::vector<std::string>& attributes = {});
nlohmann::json density_payload(const Dataset& d, const std::string& attribute);
nlohmann::json subgroups_payload(const ClusterResult& r, const Dataset& d);

/// The first `top` cues (all when nullopt) as JSONL.
std::string cues_jsonl(const std::vector<LanguageCue>& ranked, std::optional<std::size_t> top);
nlohmann::json cues_payload(const Dataset& d, const std::string& attribute, const std::vector<LanguageCue>& ranked,
                            const CriterionWeights& weights, std::optional<std::size_t> top);

nlohmann::json histogram_payload(const Evaluation& e, const Dataset& d);

struct ExplainRequest {
  ContrastMode mode = ContrastMode::p;
  std::string fact_id;
  std::optional<std::string> other_id;
};

ExplainRequest parse_explain_request(const nlohmann::json& body);
ContrastMode parse_mode(const std::string& text);

/// Splits "a,b,c", dropping empty items.
std::vector<std::string> split_list(const std::string& text);

}  // namespace groupscope
