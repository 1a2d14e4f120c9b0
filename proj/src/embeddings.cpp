#include "groupscope/embeddings.hpp"

#include <charconv>
#include <optional>
#include <sstream>

#include "groupscope/errors.hpp"
#include "groupscope/util.hpp"

namespace groupscope {

Eigen::VectorXd hashed_vector(std::string_view token, std::uint64_t seed, std::size_t dimension) {
  std::uint64_t state = fnv1a64(token) ^ seed;
  Eigen::VectorXd v(static_cast<Eigen::Index>(dimension));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = unit_double(splitmix64(state)) - 0.5;
  return v;
}

EmbeddingTable::EmbeddingTable(std::size_t dimension, OovPolicy oov) : dimension_(dimension), oov_(oov) {
  if (dimension == 0) throw ValidationError("embedding dimension must be positive");
}

void EmbeddingTable::add(std::string token, std::span<const double> vector) {
  if (vector.size() != dimension_) {
    throw ValidationError("vector for '" + token + "' has " + std::to_string(vector.size()) +
                          " components, expected " + std::to_string(dimension_));
  }
  if (index_.contains(token)) throw ValidationError("duplicate token '" + token + "'");
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  data_.insert(data_.end(), vector.begin(), vector.end());
}

bool EmbeddingTable::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

Eigen::VectorXd EmbeddingTable::lookup(std::string_view token) const {
  if (auto it = index_.find(std::string(token)); it != index_.end()) {
    return Eigen::Map<const Eigen::VectorXd>(data_.data() + it->second * dimension_,
                                             static_cast<Eigen::Index>(dimension_));
  }
  if (oov_.kind == OovPolicy::Kind::zero) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension_));
  return hashed_vector(token, oov_.seed, dimension_);
}

std::string EmbeddingTable::to_text() const {
  std::string out;
  char buf[32];
  for (std::size_t t = 0; t < tokens_.size(); ++t) {
    out += tokens_[t];
    for (std::size_t k = 0; k < dimension_; ++k) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, data_[t * dimension_ + k]);
      out += ' ';
      out.append(buf, end);
    }
    out += '\n';
  }
  return out;
}

EmbeddingTable parse_table(std::string_view text, OovPolicy oov) {
  std::optional<EmbeddingTable> table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t row = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    values.clear();
    std::string num;
    while (fields >> num) {
      double x = 0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), x);
      if (ec != std::errc() || ptr != num.data() + num.size()) {
        throw ValidationError("non-numeric component '" + num + "'", row);
      }
      values.push_back(x);
    }
    if (values.empty()) throw ValidationError("row has no vector components", row);
    if (!table) table.emplace(values.size(), oov);
    if (values.size() != table->dimension()) {
      throw ValidationError("ragged row: " + std::to_string(values.size()) + " components, expected " +
                                std::to_string(table->dimension()),
                            row);
    }
    try {
      table->add(token, values);
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), row);
    }
  }
  if (!table) throw ValidationError("empty embedding file");
  return std::move(*table);
}

EmbeddingTable load_table(const std::filesystem::path& path, OovPolicy oov) {
  return parse_table(read_file(path), oov);
}

EmbeddingTable generate_synthetic_table(const std::vector<std::string>& vocabulary, std::size_t dimension,
                                        std::uint64_t seed) {
  EmbeddingTable table(dimension, OovPolicy::hashed(seed));
  for (const auto& token : vocabulary) {
    if (table.contains(token)) continue;
    const Eigen::VectorXd v = hashed_vector(token, seed, dimension);
    table.add(token, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
  }
  return table;
}

EmbeddingPair::EmbeddingPair(EmbeddingTable first, EmbeddingTable second)
    : first_(std::move(first)), second_(std::move(second)) {
  if (first_.dimension() != second_.dimension()) {
    throw ValidationError("embedding tables have unequal dimensions (" + std::to_string(first_.dimension()) +
                          " vs " + std::to_string(second_.dimension()) + ")");
  }
}

EmbeddingPair EmbeddingPair::synthetic(std::size_t dimension, std::uint64_t seed_a, std::uint64_t seed_b) {
  return {EmbeddingTable(dimension, OovPolicy::hashed(seed_a)), EmbeddingTable(dimension, OovPolicy::hashed(seed_b))};
}

EmbeddedSequence embed(const EmbeddingPair& tables, const std::vector<std::string>& tokens,
                       std::string instance_id) {
  const auto d = static_cast<Eigen::Index>(tables.first().dimension());
  EmbeddedSequence seq{std::move(instance_id), Eigen::MatrixXd(2 * d, static_cast<Eigen::Index>(tokens.size()))};
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    seq.vectors.col(col).head(d) = tables.first().lookup(tokens[t]);
    seq.vectors.col(col).tail(d) = tables.second().lookup(tokens[t]);
  }
  return seq;
}

}  // namespace groupscope
