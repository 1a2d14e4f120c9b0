#include "groupscope/cue_miner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "groupscope/errors.hpp"
#include "groupscope/stats.hpp"

namespace groupscope {

using nlohmann::json;

namespace {
// Absolute slack when comparing a span mean against the threshold, so that
// exactly uniform attention is not split by rounding in the running sum.
constexpr double kThresholdSlack = 1e-12;
}  // namespace

void CriterionWeights::validate() const {
  for (double w : {posterior, length, rank, frequency}) {
    if (!std::isfinite(w) || w < 0) throw ValidationError("criterion weights must be finite and nonnegative");
  }
  if (posterior == 0 && length == 0) throw ValidationError("numerator weights u_p and u_l are both zero");
  if (rank == 0 && frequency == 0) throw ValidationError("denominator weights u_r and u_f are both zero");
}

void CueExtractionConfig::validate() const {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be positive");
  if (top_k_display < 1) throw ValidationError("top_k_display must be at least 1");
  weights.validate();
}

ExtractedSpan extract_span(std::span<const double> a) {
  if (a.empty()) throw ValidationError("attention trace is empty");
  const std::size_t n = a.size();
  const std::size_t seed = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
  const double threshold = a[seed] - 0.5 * stats::population_variance(a);

  ExtractedSpan out;
  out.seed = seed;
  out.threshold = threshold;
  std::size_t begin = seed, end = seed + 1;
  double sum = a[seed];
  for (;;) {
    const double k = static_cast<double>(end - begin + 1);
    const double left = begin > 0 ? (sum + a[begin - 1]) / k : -std::numeric_limits<double>::infinity();
    const double right = end < n ? (sum + a[end]) / k : -std::numeric_limits<double>::infinity();
    const bool left_ok = begin > 0 && left >= threshold - kThresholdSlack;
    const bool right_ok = end < n && right >= threshold - kThresholdSlack;
    if (!left_ok && !right_ok) break;
    if (left_ok && (!right_ok || left >= right)) {
      --begin;
      sum += a[begin];
    } else {
      sum += a[end];
      ++end;
    }
  }
  out.span = {begin, end};
  out.cumulative_attention = sum;
  return out;
}

ExtractedSpan extract_span(const AttentionTrace& trace) {
  return extract_span(std::span<const double>(trace.weights.data(), static_cast<std::size_t>(trace.weights.size())));
}

double importance_score(double p, double length, double rank, double frequency, const CriterionWeights& w,
                        double epsilon) {
  return (w.posterior * p + w.length * std::log(length + epsilon)) /
         (w.rank * rank + w.frequency * std::log(frequency + epsilon));
}

void rank_cues(std::vector<LanguageCue>& cues) {
  std::stable_sort(cues.begin(), cues.end(), [](const LanguageCue& a, const LanguageCue& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    if (a.instance_id != b.instance_id) return id_less(a.instance_id, b.instance_id);
    return a.span.begin < b.span.begin;
  });
}

std::size_t phrase_frequency(const Dataset& d, const std::vector<std::string>& phrase) {
  if (phrase.empty()) return 0;
  std::size_t count = 0;
  for (const auto& inst : d.instances()) {
    const auto& t = inst.tokens;
    if (t.size() < phrase.size()) continue;
    if (std::search(t.begin(), t.end(), phrase.begin(), phrase.end()) != t.end()) ++count;
  }
  return count;
}

std::vector<LanguageCue> mine(const TrainedAttributeModel& model, const Dataset& d, const EmbeddingPair& embeddings,
                              const CueExtractionConfig& cfg) {
  cfg.validate();
  const std::size_t attr = d.attribute_index(model.attribute.name);
  if (d.schema()[attr].kind != model.attribute.kind || d.schema()[attr].levels != model.attribute.levels) {
    throw ValidationError("model attribute '" + model.attribute.name + "' does not match the dataset schema");
  }

  const auto members = d.bucket(SplitBucket::train);
  std::vector<LanguageCue> cues;
  cues.reserve(members.size());
  std::vector<double> raw_posterior;
  std::map<std::vector<std::string>, std::size_t> frequency_cache;

  for (std::size_t i : members) {
    const auto& inst = d.instances()[i];
    const auto pred = predict(model, inst, embeddings);
    const auto ex = extract_span(pred.trace);

    LanguageCue cue;
    cue.instance_id = inst.id;
    cue.span = ex.span;
    std::vector<std::string> phrase(inst.tokens.begin() + static_cast<std::ptrdiff_t>(ex.span.begin),
                                    inst.tokens.begin() + static_cast<std::ptrdiff_t>(ex.span.end));
    for (std::size_t k = 0; k < phrase.size(); ++k) {
      if (k) cue.text += ' ';
      cue.text += phrase[k];
    }
    cue.cumulative_attention = ex.cumulative_attention;
    cue.length = static_cast<double>(ex.span.length());
    auto [it, fresh] = frequency_cache.try_emplace(phrase, 0);
    if (fresh) it->second = phrase_frequency(d, phrase);
    cue.frequency = static_cast<double>(it->second);
    cue.attribute_value = d.numeric_value(i, attr);
    cue.group_posterior = pred.group_posterior;
    raw_posterior.push_back(pred.group_posterior[static_cast<std::size_t>(inst.group)]);
    cues.push_back(std::move(cue));
  }
  if (cues.empty()) return cues;

  const auto [lo, hi] = std::minmax_element(raw_posterior.begin(), raw_posterior.end());
  const double range = *hi - *lo;
  const double total = static_cast<double>(cues.size());
  for (std::size_t k = 0; k < cues.size(); ++k) {
    cues[k].posterior_score = range > 0 ? (raw_posterior[k] - *lo) / range : 1.0;
    // Competition rank: ties share the best position.
    const auto higher = std::count_if(cues.begin(), cues.end(), [&](const LanguageCue& c) {
      return c.cumulative_attention > cues[k].cumulative_attention;
    });
    cues[k].rank = static_cast<double>(higher + 1) / total;
  }
  return reweight(std::move(cues), cfg.weights, cfg.epsilon);
}

std::vector<LanguageCue> reweight(std::vector<LanguageCue> cues, const CriterionWeights& weights, double epsilon) {
  weights.validate();
  for (auto& c : cues) {
    c.importance = importance_score(c.posterior_score, c.length, c.rank, c.frequency, weights, epsilon);
  }
  rank_cues(cues);
  return cues;
}

json to_json(const LanguageCue& c) {
  return {{"instance_id", c.instance_id},
          {"span", {c.span.begin, c.span.end}},
          {"text", c.text},
          {"k", c.span.length()},
          {"cumulative_attention", c.cumulative_attention},
          {"p", c.posterior_score},
          {"l_len", c.length},
          {"r", c.rank},
          {"f", c.frequency},
          {"w_seq", c.importance},
          {"mean_attribute_value", c.attribute_value},
          {"group_posterior", {{"Red", c.group_posterior[0]}, {"Blue", c.group_posterior[1]}}}};
}

std::string cues_to_jsonl(const std::vector<LanguageCue>& cues) {
  std::string out;
  for (const auto& c : cues) {
    out += to_json(c).dump();
    out += '\n';
  }
  return out;
}

}  // namespace groupscope
