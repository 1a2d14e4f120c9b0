#include "groupscope/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "groupscope/errors.hpp"
#include "groupscope/util.hpp"

namespace groupscope {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kMoralLevels = {"virtue", "both", "none", "vice"};
constexpr std::string_view kDatasetFormat = "groupscope-dataset";

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void validate_schema(const std::vector<AttributeSchema>& schema) {
  std::set<std::string> names;
  for (const auto& a : schema) {
    if (a.name.empty()) throw ValidationError("attribute with empty name");
    if (!names.insert(a.name).second) throw ValidationError("duplicate attribute '" + a.name + "'");
    if (a.categorical()) {
      std::set<std::string> distinct(a.levels.begin(), a.levels.end());
      if (a.levels.size() < 2 || distinct.size() != a.levels.size()) {
        throw ValidationError("categorical attribute '" + a.name + "' needs >= 2 distinct levels");
      }
    } else if (!a.levels.empty()) {
      throw ValidationError("continuous attribute '" + a.name + "' declares levels");
    }
  }
}

}  // namespace

// Schema -------------------------------------------------------------------

std::optional<std::size_t> AttributeSchema::level_index(std::string_view level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == level) return i;
  }
  return std::nullopt;
}

double AttributeSchema::ordinal_score(std::size_t level) const {
  if (levels.size() < 2) return 0.0;
  return 1.0 - 2.0 * static_cast<double>(level) / static_cast<double>(levels.size() - 1);
}

std::vector<std::string> canonical_level_order(std::vector<std::string> levels) {
  auto rank = [](const std::string& l) -> std::size_t {
    auto it = std::find(kMoralLevels.begin(), kMoralLevels.end(), l);
    return static_cast<std::size_t>(it - kMoralLevels.begin());
  };
  const bool all_moral = std::all_of(levels.begin(), levels.end(),
                                     [&](const std::string& l) { return rank(l) < kMoralLevels.size(); });
  if (all_moral) {
    std::stable_sort(levels.begin(), levels.end(),
                     [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
  }
  return levels;
}

std::vector<AttributeSchema> default_schema() {
  const std::vector<std::string> moral(kMoralLevels.begin(), kMoralLevels.end());
  return {
      {"Valence", AttributeKind::continuous, {}, 0},
      {"Dominance", AttributeKind::continuous, {}, 1},
      {"Care", AttributeKind::categorical, moral, 2},
      {"Fairness", AttributeKind::categorical, moral, 3},
      {"Loyalty", AttributeKind::categorical, moral, 4},
      {"Authority", AttributeKind::categorical, moral, 5},
      {"Purity", AttributeKind::categorical, moral, 6},
  };
}

std::vector<AttributeSchema> parse_schema(const json& j) {
  if (!j.is_array()) throw ValidationError("schema must be a JSON array");
  std::vector<AttributeSchema> schema;
  int order = 0;
  for (const auto& item : j) {
    AttributeSchema a;
    a.name = item.at("name").get<std::string>();
    const auto kind = item.value("kind", std::string("continuous"));
    if (kind == "continuous") {
      a.kind = AttributeKind::continuous;
    } else if (kind == "categorical") {
      a.kind = AttributeKind::categorical;
    } else {
      throw ValidationError("attribute '" + a.name + "' has unknown kind '" + kind + "'");
    }
    if (item.contains("levels")) a.levels = item.at("levels").get<std::vector<std::string>>();
    if (a.categorical()) a.levels = canonical_level_order(std::move(a.levels));
    a.display_order = item.value("display_order", order);
    ++order;
    schema.push_back(std::move(a));
  }
  validate_schema(schema);
  return schema;
}

std::vector<AttributeSchema> load_schema(const std::filesystem::path& path) {
  try {
    return parse_schema(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json schema_to_json(const std::vector<AttributeSchema>& schema) {
  json out = json::array();
  for (const auto& a : schema) {
    json item = {{"name", a.name},
                 {"kind", a.categorical() ? "categorical" : "continuous"},
                 {"display_order", a.display_order}};
    if (a.categorical()) item["levels"] = a.levels;
    out.push_back(std::move(item));
  }
  return out;
}

// Small enums ----------------------------------------------------------------

std::string_view to_string(Group g) noexcept { return g == Group::red ? "Red" : "Blue"; }

std::optional<Group> parse_group(std::string_view text) {
  const auto t = to_lower(text);
  if (t == "red") return Group::red;
  if (t == "blue") return Group::blue;
  return std::nullopt;
}

std::string_view to_string(SplitBucket b) noexcept {
  switch (b) {
    case SplitBucket::train: return "train";
    case SplitBucket::validate: return "validate";
    case SplitBucket::test: return "test";
  }
  return "train";
}

std::optional<SplitBucket> parse_bucket(std::string_view text) {
  if (text == "train") return SplitBucket::train;
  if (text == "validate") return SplitBucket::validate;
  if (text == "test") return SplitBucket::test;
  return std::nullopt;
}

// Tokenization ---------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::string_view word = text.substr(i, j - i);
    i = j;

    while (!word.empty() && is_punct(word.back())) word.remove_suffix(1);
    while (!word.empty() && is_punct(word.front())) {
      const bool tag = (word.front() == '#' || word.front() == '@') && word.size() > 1 &&
                       !is_punct(word[1]);
      if (tag) break;
      word.remove_prefix(1);
    }
    if (!word.empty()) tokens.push_back(to_lower(word));
  }
  return tokens;
}

bool id_less(std::string_view a, std::string_view b) noexcept {
  auto digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  const bool da = digits(a), db = digits(b);
  if (da && db) {
    auto strip = [](std::string_view s) {
      const auto p = s.find_first_not_of('0');
      return p == std::string_view::npos ? std::string_view("0") : s.substr(p);
    };
    const auto sa = strip(a), sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
    return a < b;
  }
  if (da != db) return da;
  return a < b;
}

// Dataset --------------------------------------------------------------------

Dataset::Dataset(std::vector<AttributeSchema> schema, std::vector<Instance> instances,
                 std::vector<std::optional<SplitBucket>> split) {
  validate_schema(schema);

  std::vector<std::size_t> perm(schema.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return schema[a].display_order < schema[b].display_order;
  });
  for (std::size_t k = 0; k < perm.size(); ++k) schema_.push_back(std::move(schema[perm[k]]));

  std::unordered_set<std::string> ids;
  for (auto& inst : instances) {
    if (inst.id.empty()) throw ValidationError("instance with empty id");
    if (!ids.insert(inst.id).second) throw ValidationError("duplicate id '" + inst.id + "'");
    if (inst.tokens.empty()) throw ValidationError("instance '" + inst.id + "' has no tokens");
    if (inst.values.size() != schema_.size()) {
      throw ValidationError("instance '" + inst.id + "' does not cover the schema");
    }
    std::vector<AttributeValue> ordered(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) ordered[k] = inst.values[perm[k]];
    inst.values = std::move(ordered);
    for (std::size_t k = 0; k < schema_.size(); ++k) {
      const auto& a = schema_[k];
      const auto& v = inst.values[k];
      if (a.categorical()) {
        const auto* level = std::get_if<std::size_t>(&v);
        if (!level || *level >= a.levels.size()) {
          throw ValidationError("instance '" + inst.id + "': invalid level for '" + a.name + "'");
        }
      } else {
        const auto* x = std::get_if<double>(&v);
        if (!x || !std::isfinite(*x) || *x < -1.0 || *x > 1.0) {
          throw ValidationError("instance '" + inst.id + "': " + a.name + " outside [-1, 1]");
        }
      }
    }
  }
  instances_ = std::move(instances);

  if (!split.empty()) {
    if (split.size() != instances_.size() ||
        std::any_of(split.begin(), split.end(), [](const auto& b) { return !b.has_value(); })) {
      throw ValidationError("split assignment must cover every instance");
    }
    split_ = std::move(split);
  }
  checksum_ = sha256_hex(dataset_body(*this).dump());
}

std::size_t Dataset::attribute_index(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (schema_[i].name == name) return i;
  }
  throw NotFoundError("unknown attribute '" + std::string(name) + "'");
}

std::optional<std::size_t> Dataset::find_instance(std::string_view id) const {
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    if (instances_[i].id == id) return i;
  }
  return std::nullopt;
}

const Instance& Dataset::instance(std::string_view id) const {
  if (auto i = find_instance(id)) return instances_[*i];
  throw NotFoundError("unknown instance '" + std::string(id) + "'");
}

double Dataset::numeric_value(std::size_t instance, std::size_t attribute) const {
  const auto& v = instances_[instance].values[attribute];
  if (const auto* x = std::get_if<double>(&v)) return *x;
  return schema_[attribute].ordinal_score(std::get<std::size_t>(v));
}

std::string Dataset::display_value(std::size_t instance, std::size_t attribute) const {
  const auto& v = instances_[instance].values[attribute];
  if (const auto* level = std::get_if<std::size_t>(&v)) return schema_[attribute].levels[*level];
  std::ostringstream ss;
  ss.precision(2);
  ss << std::fixed << std::get<double>(v);
  return ss.str();
}

std::optional<SplitBucket> Dataset::bucket_of(std::size_t instance) const {
  if (split_.empty()) return std::nullopt;
  return split_[instance];
}

std::vector<std::size_t> Dataset::bucket(SplitBucket b) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    if (split_.empty() || split_[i] == b) out.push_back(i);
  }
  return out;
}

std::size_t Dataset::group_count(Group g) const {
  return static_cast<std::size_t>(std::count_if(instances_.begin(), instances_.end(),
                                                [g](const Instance& i) { return i.group == g; }));
}

// Ingestion ------------------------------------------------------------------

namespace {

Instance parse_record(const json& rec, const std::vector<AttributeSchema>& schema, std::size_t line) {
  if (!rec.is_object()) throw ValidationError("record is not a JSON object", line);
  Instance inst;

  auto string_field = [&](const char* name, bool required) -> std::string {
    if (!rec.contains(name) || rec.at(name).is_null()) {
      if (required) throw ValidationError("missing field", line, name);
      return {};
    }
    const auto& v = rec.at(name);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ValidationError("expected string", line, name);
  };

  inst.id = string_field("id", true);
  inst.author_id = string_field("author_id", false);
  inst.text = string_field("text", true);
  const auto group_text = string_field("group", true);
  const auto group = parse_group(group_text);
  if (!group) throw ValidationError("group must be Red or Blue, got '" + group_text + "'", line, "group");
  inst.group = *group;

  inst.tokens = tokenize(inst.text);
  if (inst.tokens.empty()) throw ValidationError("text has no tokens", line, "text");

  if (!rec.contains("attributes") || !rec.at("attributes").is_object()) {
    throw ValidationError("missing attributes object", line, "attributes");
  }
  const auto& attrs = rec.at("attributes");
  for (const auto& [key, _] : attrs.items()) {
    const bool known = std::any_of(schema.begin(), schema.end(),
                                   [&](const AttributeSchema& a) { return a.name == key; });
    if (!known) throw ValidationError("unknown attribute '" + key + "'", line, "attributes." + key);
  }
  for (const auto& a : schema) {
    const std::string field = "attributes." + a.name;
    if (!attrs.contains(a.name)) throw ValidationError("missing attribute value", line, field);
    const auto& v = attrs.at(a.name);
    if (a.categorical()) {
      if (!v.is_string()) throw ValidationError("expected level name", line, field);
      const auto level = a.level_index(v.get<std::string>());
      if (!level) throw ValidationError("unknown level '" + v.get<std::string>() + "'", line, field);
      inst.values.emplace_back(*level);
    } else {
      if (!v.is_number()) throw ValidationError("expected number", line, field);
      const double x = v.get<double>();
      if (!std::isfinite(x) || x < -1.0 || x > 1.0) {
        std::ostringstream msg;
        msg << "record '" << inst.id << "': " << a.name << " = " << x << " outside [-1, 1]";
        throw ValidationError(msg.str(), line, field);
      }
      inst.values.emplace_back(x);
    }
  }
  return inst;
}

}  // namespace

Dataset ingest(std::istream& source, const std::vector<AttributeSchema>& schema) {
  validate_schema(schema);
  std::vector<Instance> instances;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), is_space)) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    auto inst = parse_record(rec, schema, lineno);
    if (!ids.insert(inst.id).second) {
      throw ValidationError("duplicate id '" + inst.id + "'", lineno, "id");
    }
    instances.push_back(std::move(inst));
  }
  return Dataset(schema, std::move(instances));
}

Dataset ingest(const std::filesystem::path& path, const std::vector<AttributeSchema>& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return ingest(in, schema);
}

Dataset ingest_text(std::string_view jsonl, const std::vector<AttributeSchema>& schema) {
  std::istringstream in{std::string(jsonl)};
  return ingest(in, schema);
}

namespace {

json attributes_json(const Dataset& d, std::size_t i) {
  json attrs = json::object();
  for (std::size_t k = 0; k < d.schema().size(); ++k) {
    const auto& v = d.instances()[i].values[k];
    if (const auto* level = std::get_if<std::size_t>(&v)) {
      attrs[d.schema()[k].name] = d.schema()[k].levels[*level];
    } else {
      attrs[d.schema()[k].name] = std::get<double>(v);
    }
  }
  return attrs;
}

}  // namespace

std::string to_jsonl(const Dataset& d) {
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& inst = d.instances()[i];
    json rec = {{"id", inst.id},
                {"author_id", inst.author_id},
                {"text", inst.text},
                {"group", to_string(inst.group)},
                {"attributes", attributes_json(d, i)}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

// Splitting ------------------------------------------------------------------

namespace {

template <std::size_t N>
std::array<std::size_t, N> largest_remainder(std::size_t total, const std::array<double, N>& quotas) {
  std::array<std::size_t, N> out{};
  std::array<double, N> rem{};
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < N; ++b) {
    const double q = std::max(0.0, quotas[b]);
    out[b] = static_cast<std::size_t>(std::floor(q));
    rem[b] = q - std::floor(q);
    assigned += out[b];
  }
  while (assigned > total) {
    // Guards against quotas that round up past the total.
    for (std::size_t b = N; b-- > 0 && assigned > total;) {
      if (out[b] > 0) {
        --out[b];
        --assigned;
      }
    }
  }
  std::array<std::size_t, N> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % N) {
    ++out[order[k]];
    ++assigned;
  }
  return out;
}

}  // namespace

std::array<std::size_t, 3> bucket_sizes(std::size_t n, const SplitFractions& f) {
  const double nd = static_cast<double>(n);
  return largest_remainder<3>(n, {f.train * nd, f.validate * nd, f.test * nd});
}

Dataset assign_split(const Dataset& d, const SplitFractions& f, std::uint64_t seed) {
  if (!(f.train > 0 && f.validate > 0 && f.test > 0) ||
      std::abs(f.train + f.validate + f.test - 1.0) > 1e-9) {
    throw ValidationError("split fractions must be positive and sum to 1");
  }
  const std::size_t n = d.size();
  if (n < 3) throw ValidationError("insufficient instances: need at least 3 to fill 3 buckets");

  const auto sizes = bucket_sizes(n, f);
  const std::size_t n_red = d.group_count(Group::red);
  const double scale = static_cast<double>(n_red) / static_cast<double>(n);
  const auto red_sizes = largest_remainder<3>(
      n_red, {scale * static_cast<double>(sizes[0]), scale * static_cast<double>(sizes[1]),
              scale * static_cast<double>(sizes[2])});

  std::mt19937_64 rng(seed);
  std::vector<std::optional<SplitBucket>> split(n);
  for (const Group g : {Group::red, Group::blue}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (d.instances()[i].group == g) members.push_back(i);
    }
    shuffle(members, rng);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < 3; ++b) {
      const std::size_t count = g == Group::red ? red_sizes[b] : sizes[b] - red_sizes[b];
      for (std::size_t k = 0; k < count; ++k) split[members[pos++]] = static_cast<SplitBucket>(b);
    }
  }
  return Dataset(d.schema(), d.instances(), std::move(split));
}

std::vector<std::size_t> search(const Dataset& d, std::string_view query) {
  const auto q = to_lower(query);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (q.empty() || to_lower(d.instances()[i].text).find(q) != std::string::npos) out.push_back(i);
  }
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    return id_less(d.instances()[a].id, d.instances()[b].id);
  });
  return out;
}

// Persistence ----------------------------------------------------------------

json dataset_body(const Dataset& d) {
  json instances = json::array();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& inst = d.instances()[i];
    instances.push_back({{"id", inst.id},
                         {"author_id", inst.author_id},
                         {"text", inst.text},
                         {"tokens", inst.tokens},
                         {"group", to_string(inst.group)},
                         {"attributes", attributes_json(d, i)}});
  }
  json split = nullptr;
  if (d.has_split()) {
    split = json::object();
    for (std::size_t i = 0; i < d.size(); ++i) split[d.instances()[i].id] = to_string(*d.split()[i]);
  }
  return {{"schema", schema_to_json(d.schema())}, {"instances", std::move(instances)}, {"split", std::move(split)}};
}

json to_snapshot(const Dataset& d) {
  return {{"format", kDatasetFormat},
          {"version", kDatasetFormatVersion},
          {"checksum", d.checksum()},
          {"body", dataset_body(d)}};
}

Dataset from_snapshot(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kDatasetFormat) {
    throw FormatError("not a dataset snapshot");
  }
  if (!j.contains("version") || !j.at("version").is_number_integer() ||
      j.at("version").get<int>() != kDatasetFormatVersion) {
    throw FormatError("unsupported dataset snapshot version");
  }
  const auto& body = j.at("body");
  const std::string stored = j.value("checksum", std::string());
  if (sha256_hex(body.dump()) != stored) throw IntegrityError("dataset checksum mismatch");

  try {
    auto schema = parse_schema(body.at("schema"));
    std::vector<Instance> instances;
    std::size_t line = 0;
    for (const auto& rec : body.at("instances")) {
      ++line;
      auto inst = parse_record(rec, schema, line);
      inst.tokens = rec.at("tokens").get<std::vector<std::string>>();
      instances.push_back(std::move(inst));
    }
    std::vector<std::optional<SplitBucket>> split;
    if (!body.at("split").is_null()) {
      for (const auto& inst : instances) {
        const auto b = parse_bucket(body.at("split").at(inst.id).get<std::string>());
        if (!b) throw FormatError("bad split bucket for '" + inst.id + "'");
        split.push_back(b);
      }
    }
    return Dataset(std::move(schema), std::move(instances), std::move(split));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed dataset snapshot: ") + e.what());
  }
}

void persist(const Dataset& d, const std::filesystem::path& path) {
  write_file(path, to_snapshot(d).dump() + "\n");
}

Dataset load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return from_snapshot(j);
}

}  // namespace groupscope
