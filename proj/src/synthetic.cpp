#include "groupscope/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "groupscope/errors.hpp"
#include "groupscope/util.hpp"

namespace groupscope {

namespace {

constexpr std::array<const char*, 16> kOnsets{"b", "d", "f", "g", "k", "l", "m", "n",
                                              "p", "r", "s", "t", "v", "z", "ch", "sh"};
constexpr std::array<const char*, 5> kVowels{"a", "e", "i", "o", "u"};

AttributeValue random_value(const AttributeSchema& s, std::mt19937_64& rng) {
  if (s.categorical()) return static_cast<std::size_t>(uniform_index(rng, s.levels.size()));
  return uniform_real(rng, -1.0, 1.0);
}

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

}  // namespace

std::string filler_word(std::size_t i) {
  // Three syllables give 80^3 distinct words; the odd multiplier permutes
  // indices so neighbouring words differ in every syllable.
  i = (i * 7919) % (80 * 80 * 80);
  std::string w;
  for (int k = 0; k < 3; ++k) {
    const std::size_t syl = i % 80;
    i /= 80;
    w += kOnsets[syl % kOnsets.size()];
    w += kVowels[syl / kOnsets.size()];
  }
  return w;
}

Dataset planted_corpus(const PlantedCorpusConfig& cfg) {
  if (cfg.instances < 4) throw ValidationError("planted corpus needs at least 4 instances");
  if (cfg.phrase.empty()) throw ValidationError("planted phrase is empty");
  if (cfg.min_length < cfg.phrase.size() + 1 || cfg.max_length < cfg.min_length) {
    throw ValidationError("sentence lengths cannot hold the planted phrase");
  }
  auto schema = default_schema();
  std::mt19937_64 rng(cfg.seed);
  std::vector<Instance> out;
  std::vector<std::size_t> attr_index;
  std::size_t target = schema.size();
  for (std::size_t a = 0; a < schema.size(); ++a) {
    if (schema[a].name == cfg.attribute) target = a;
  }
  if (target == schema.size() || schema[target].categorical()) {
    throw ValidationError("planted attribute must be a continuous schema attribute");
  }
  for (std::size_t i = 0; i < cfg.instances; ++i) {
    Instance inst;
    inst.id = std::to_string(i + 1);
    inst.author_id = "u" + std::to_string(uniform_index(rng, cfg.instances / 2 + 1));
    inst.group = i % 2 == 0 ? Group::red : Group::blue;
    const std::size_t len = cfg.min_length + uniform_index(rng, cfg.max_length - cfg.min_length + 1);
    std::vector<std::string> tokens;
    for (std::size_t t = 0; t < len; ++t) tokens.push_back(filler_word(uniform_index(rng, cfg.vocabulary)));
    if (inst.group == Group::blue) {
      const std::size_t at = uniform_index(rng, len - cfg.phrase.size() + 1);
      std::copy(cfg.phrase.begin(), cfg.phrase.end(), tokens.begin() + static_cast<long>(at));
    }
    inst.text = join(tokens);
    inst.tokens = tokens;
    for (const auto& s : schema) inst.values.push_back(random_value(s, rng));
    const double centre = inst.group == Group::blue ? cfg.attribute_shift : -cfg.attribute_shift;
    inst.values[target] = clamp_unit(centre + cfg.attribute_noise * standard_normal(rng));
    out.push_back(std::move(inst));
  }
  return Dataset(schema, std::move(out));
}

BlobCorpus blob_corpus(std::size_t n, std::uint64_t seed) {
  static constexpr std::array<std::array<double, 2>, 3> centres{{{-0.6, -0.5}, {0.6, -0.5}, {0.0, 0.6}}};
  auto schema = default_schema();
  Dataset probe(schema, {});
  const std::size_t valence = probe.attribute_index("Valence");
  const std::size_t dominance = probe.attribute_index("Dominance");
  std::mt19937_64 rng(seed);
  BlobCorpus b;
  b.attributes = {"Valence", "Dominance"};
  std::vector<Instance> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t blob = i % centres.size();
    Instance inst;
    inst.id = std::to_string(i + 1);
    inst.author_id = "u" + std::to_string(i + 1);
    inst.group = uniform_index(rng, 2) == 0 ? Group::red : Group::blue;
    inst.text = "blob " + std::to_string(blob) + " item " + std::to_string(i + 1);
    inst.tokens = tokenize(inst.text);
    for (const auto& s : probe.schema()) inst.values.push_back(random_value(s, rng));
    inst.values[valence] = clamp_unit(centres[blob][0] + 0.08 * standard_normal(rng));
    inst.values[dominance] = clamp_unit(centres[blob][1] + 0.08 * standard_normal(rng));
    b.labels.push_back(blob);
    out.push_back(std::move(inst));
  }
  b.dataset = Dataset(probe.schema(), std::move(out));
  return b;
}

Dataset explanation_corpus(std::size_t n, std::uint64_t seed) {
  auto schema = default_schema();
  Dataset probe(schema, {});
  const std::size_t fairness = probe.attribute_index("Fairness");
  const std::size_t valence = probe.attribute_index("Valence");
  std::mt19937_64 rng(seed);
  std::vector<Instance> out;
  for (std::size_t i = 0; i < n; ++i) {
    Instance inst;
    inst.id = std::to_string(i + 1);
    inst.author_id = "u" + std::to_string(1 + uniform_index(rng, n / 3 + 1));
    std::vector<std::string> tokens;
    const std::size_t len = 5 + uniform_index(rng, 6);
    for (std::size_t t = 0; t < len; ++t) tokens.push_back(filler_word(uniform_index(rng, 60)));
    inst.text = join(tokens);
    inst.tokens = tokens;
    for (const auto& s : probe.schema()) inst.values.push_back(random_value(s, rng));
    // Blue leans on fairness virtue, and on high valence otherwise; 5% label noise.
    const auto level = std::get<std::size_t>(inst.values[fairness]);
    const double v = std::get<double>(inst.values[valence]);
    bool blue = level == 0 || (level != 3 && v > 0.2);
    if (uniform_index(rng, 20) == 0) blue = !blue;
    inst.group = blue ? Group::blue : Group::red;
    out.push_back(std::move(inst));
  }
  return Dataset(probe.schema(), std::move(out));
}

}  // namespace groupscope
