#include "groupscope/payloads.hpp"

#include <sstream>

#include "groupscope/errors.hpp"

namespace groupscope {

using nlohmann::json;

std::string render_artifact(const json& j) { return j.dump(2) + "\n"; }

json dataset_summary(const Dataset& d) {
  json attrs = json::array();
  for (const auto& s : d.schema()) attrs.push_back(s.name);
  json buckets = json::object();
  if (d.has_split()) {
    for (auto b : {SplitBucket::train, SplitBucket::validate, SplitBucket::test}) {
      buckets[std::string(to_string(b))] = d.bucket(b).size();
    }
  }
  return {{"id", d.checksum().substr(0, 16)},
          {"checksum", d.checksum()},
          {"n_instances", d.size()},
          {"n_attributes", d.schema().size()},
          {"attributes", attrs},
          {"group_counts", {{"Red", d.group_count(Group::red)}, {"Blue", d.group_count(Group::blue)}}},
          {"split", d.has_split() ? buckets : json(nullptr)}};
}

json summary_payload(const Dataset& d, const std::vector<std::string>& attributes) {
  json items = json::array();
  for (const auto& s : summarize(d, attributes)) items.push_back(to_json(s, d));
  return {{"checksum", d.checksum()}, {"alpha", kSignificanceLevel}, {"attributes", std::move(items)}};
}

json density_payload(const Dataset& d, const std::string& attribute) {
  json j = to_json(conditional_density(d, attribute));
  j["checksum"] = d.checksum();
  return j;
}

json subgroups_payload(const ClusterResult& r, const Dataset& d) {
  json j = to_json(r);
  j["checksum"] = d.checksum();
  return j;
}

std::string cues_jsonl(const std::vector<LanguageCue>& ranked, std::optional<std::size_t> top) {
  const std::size_t n = top ? std::min(*top, ranked.size()) : ranked.size();
  return cues_to_jsonl(std::vector<LanguageCue>(ranked.begin(), ranked.begin() + static_cast<long>(n)));
}

json cues_payload(const Dataset& d, const std::string& attribute, const std::vector<LanguageCue>& ranked,
                  const CriterionWeights& weights, std::optional<std::size_t> top) {
  const std::size_t n = top ? std::min(*top, ranked.size()) : ranked.size();
  json cues = json::array();
  for (std::size_t i = 0; i < n; ++i) cues.push_back(to_json(ranked[i]));
  return {{"checksum", d.checksum()},
          {"attribute", attribute},
          {"weights", {{"u_p", weights.posterior}, {"u_l", weights.length}, {"u_r", weights.rank}, {"u_f", weights.frequency}}},
          {"total", ranked.size()},
          {"cues", std::move(cues)}};
}

json histogram_payload(const Evaluation& e, const Dataset& d) {
  return {{"checksum", d.checksum()},
          {"source", e.source},
          {"attribute", e.attribute.empty() ? json(nullptr) : json(e.attribute)},
          {"metrics", to_json(e.metrics)},
          {"histogram", to_json(dual_histogram(e.records))}};
}

ContrastMode parse_mode(const std::string& text) {
  if (text == "p") return ContrastMode::p;
  if (text == "o") return ContrastMode::o;
  throw ValidationError("mode must be 'p' or 'o'", 0, "mode");
}

ExplainRequest parse_explain_request(const json& body) {
  if (!body.is_object()) throw ValidationError("request body must be a JSON object");
  ExplainRequest r;
  if (!body.contains("mode") || !body["mode"].is_string()) throw ValidationError("missing string", 0, "mode");
  r.mode = parse_mode(body["mode"].get<std::string>());
  if (!body.contains("fact_id") || !body["fact_id"].is_string()) {
    throw ValidationError("missing string", 0, "fact_id");
  }
  r.fact_id = body["fact_id"].get<std::string>();
  if (body.contains("other_id") && !body["other_id"].is_null()) {
    if (!body["other_id"].is_string()) throw ValidationError("must be a string", 0, "other_id");
    r.other_id = body["other_id"].get<std::string>();
  }
  if (r.mode == ContrastMode::o && !r.other_id) throw ValidationError("o-mode needs a second instance", 0, "other_id");
  return r;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace groupscope
