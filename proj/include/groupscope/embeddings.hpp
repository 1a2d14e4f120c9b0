#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace groupscope {

struct OovPolicy {
  enum class Kind { zero, hashed_random } kind = Kind::hashed_random;
  std::uint64_t seed = 13;

  static OovPolicy zero() { return {Kind::zero, 0}; }
  static OovPolicy hashed(std::uint64_t seed) { return {Kind::hashed_random, seed}; }
};

/// Deterministic pseudo-random vector for a token: components are uniform in
/// [-0.5, 0.5) drawn from a splitmix64 stream keyed by fnv1a64(token) ^ seed.
Eigen::VectorXd hashed_vector(std::string_view token, std::uint64_t seed, std::size_t dimension);

/// Token -> vector lookup with a fixed dimension and an out-of-vocabulary policy.
class EmbeddingTable {
public:
  EmbeddingTable(std::size_t dimension, OovPolicy oov);

  void add(std::string token, std::span<const double> vector);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return index_.size(); }
  const OovPolicy& oov_policy() const noexcept { return oov_; }
  bool contains(std::string_view token) const;

  /// Vector for the token, resolved through the OOV policy when absent.
  Eigen::VectorXd lookup(std::string_view token) const;

  /// Text format: one "token v1 ... vd" line per token, in insertion order.
  std::string to_text() const;

private:
  std::size_t dimension_;
  OovPolicy oov_;
  std::vector<std::string> tokens_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingTable load_table(const std::filesystem::path& path, OovPolicy oov);
EmbeddingTable parse_table(std::string_view text, OovPolicy oov);

/// Writes a reproducible table of hashed vectors for the given vocabulary.
EmbeddingTable generate_synthetic_table(const std::vector<std::string>& vocabulary,
                                        std::size_t dimension, std::uint64_t seed);

/// The two tables whose vectors are concatenated per token.
class EmbeddingPair {
public:
  EmbeddingPair(EmbeddingTable first, EmbeddingTable second);

  /// Two empty tables whose every lookup falls back to hashed vectors.
  static EmbeddingPair synthetic(std::size_t dimension = 16, std::uint64_t seed_a = 101,
                                 std::uint64_t seed_b = 202);

  std::size_t dimension() const noexcept { return 2 * first_.dimension(); }
  const EmbeddingTable& first() const noexcept { return first_; }
  const EmbeddingTable& second() const noexcept { return second_; }

private:
  EmbeddingTable first_;
  EmbeddingTable second_;
};

/// Embedded token sequence; column t holds x_t.
struct EmbeddedSequence {
  std::string instance_id;
  Eigen::MatrixXd vectors;  // dimension x n

  std::size_t length() const noexcept { return static_cast<std::size_t>(vectors.cols()); }
};

EmbeddedSequence embed(const EmbeddingPair& tables, const std::vector<std::string>& tokens,
                       std::string instance_id = {});

}  // namespace groupscope
