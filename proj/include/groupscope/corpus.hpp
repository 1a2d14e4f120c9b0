#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace groupscope {

enum class AttributeKind { continuous, categorical };

struct AttributeSchema {
  std::string name;
  AttributeKind kind = AttributeKind::continuous;
  std::vector<std::string> levels;  // categorical only, in display order
  int display_order = 0;

  bool categorical() const noexcept { return kind == AttributeKind::categorical; }
  std::optional<std::size_t> level_index(std::string_view level) const;

  /// Equally spaced score in [-1, 1]; the first declared level maps to +1
  /// and the last to -1.
  double ordinal_score(std::size_t level) const;

  bool operator==(const AttributeSchema&) const = default;
};

/// The seven affect/moral attributes of the demo corpus.
std::vector<AttributeSchema> default_schema();

/// Reorders moral-foundation style levels to virtue, both, none, vice.
std::vector<std::string> canonical_level_order(std::vector<std::string> levels);

enum class Group : std::uint8_t { red = 0, blue = 1 };
inline constexpr std::size_t kGroupCount = 2;

std::string_view to_string(Group g) noexcept;
std::optional<Group> parse_group(std::string_view text);
inline Group other(Group g) noexcept { return g == Group::red ? Group::blue : Group::red; }

/// A continuous value, or the index of a categorical level.
using AttributeValue = std::variant<double, std::size_t>;

struct Instance {
  std::string id;
  std::string author_id;
  std::string text;
  std::vector<std::string> tokens;
  Group group = Group::red;
  std::vector<AttributeValue> values;  // aligned with Dataset::schema()

  bool operator==(const Instance&) const = default;
};

enum class SplitBucket : std::uint8_t { train = 0, validate = 1, test = 2 };
std::string_view to_string(SplitBucket b) noexcept;
std::optional<SplitBucket> parse_bucket(std::string_view text);

struct SplitFractions {
  double train = 0.5;
  double validate = 0.15;
  double test = 0.35;
};

/// Lowercases, splits on whitespace and strips leading/trailing punctuation.
/// A leading '#' or '@' is kept so hashtags and mentions stay whole.
std::vector<std::string> tokenize(std::string_view text);

/// Natural ordering for ids: all-digit ids compare numerically, everything
/// else lexicographically (digits-only ids sort first).
bool id_less(std::string_view a, std::string_view b) noexcept;

/// Immutable, validated collection of instances plus their schema. The
/// schema is stored sorted by display_order.
class Dataset {
public:
  Dataset() = default;
  Dataset(std::vector<AttributeSchema> schema, std::vector<Instance> instances,
          std::vector<std::optional<SplitBucket>> split = {});

  const std::vector<AttributeSchema>& schema() const noexcept { return schema_; }
  const std::vector<Instance>& instances() const noexcept { return instances_; }
  std::size_t size() const noexcept { return instances_.size(); }

  std::size_t attribute_index(std::string_view name) const;  // throws NotFoundError
  const AttributeSchema& attribute(std::string_view name) const {
    return schema_[attribute_index(name)];
  }
  std::optional<std::size_t> find_instance(std::string_view id) const;
  const Instance& instance(std::string_view id) const;  // throws NotFoundError

  /// Continuous value, or ordinal score for categorical attributes.
  double numeric_value(std::size_t instance, std::size_t attribute) const;
  std::string display_value(std::size_t instance, std::size_t attribute) const;

  bool has_split() const noexcept { return !split_.empty(); }
  std::optional<SplitBucket> bucket_of(std::size_t instance) const;
  /// Instance indices in the bucket; all instances when no split is assigned.
  std::vector<std::size_t> bucket(SplitBucket b) const;
  const std::vector<std::optional<SplitBucket>>& split() const noexcept { return split_; }

  std::size_t group_count(Group g) const;

  /// Hex SHA-256 of the canonical JSON body.
  const std::string& checksum() const noexcept { return checksum_; }

  bool operator==(const Dataset& o) const {
    return schema_ == o.schema_ && instances_ == o.instances_ && split_ == o.split_;
  }

private:
  std::vector<AttributeSchema> schema_;
  std::vector<Instance> instances_;
  std::vector<std::optional<SplitBucket>> split_;
  std::string checksum_;
};

// Ingestion -----------------------------------------------------------------

std::vector<AttributeSchema> parse_schema(const nlohmann::json& j);
std::vector<AttributeSchema> load_schema(const std::filesystem::path& path);
nlohmann::json schema_to_json(const std::vector<AttributeSchema>& schema);

/// Parses JSONL records (one object per line, blank lines ignored).
Dataset ingest(std::istream& source, const std::vector<AttributeSchema>& schema);
Dataset ingest(const std::filesystem::path& path, const std::vector<AttributeSchema>& schema);
Dataset ingest_text(std::string_view jsonl, const std::vector<AttributeSchema>& schema);

/// Writes instances back as JSONL records accepted by ingest().
std::string to_jsonl(const Dataset& d);

// Splitting and search ------------------------------------------------------

/// Bucket sizes for n items by largest remainder.
std::array<std::size_t, 3> bucket_sizes(std::size_t n, const SplitFractions& f);

/// Stratified, seeded train/validate/test partition.
Dataset assign_split(const Dataset& d, const SplitFractions& fractions, std::uint64_t seed);

/// Case-insensitive substring match over raw text, ordered by id.
std::vector<std::size_t> search(const Dataset& d, std::string_view query);

// Persistence ---------------------------------------------------------------

inline constexpr int kDatasetFormatVersion = 1;

nlohmann::json dataset_body(const Dataset& d);
nlohmann::json to_snapshot(const Dataset& d);
Dataset from_snapshot(const nlohmann::json& j);

void persist(const Dataset& d, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

}  // namespace groupscope
