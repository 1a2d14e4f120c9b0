#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groupscope/corpus.hpp"

namespace groupscope {

/// Corpus where a fixed phrase marks Blue instances and shifts one
/// continuous attribute.
struct PlantedCorpusConfig {
  std::size_t instances = 2000;
  std::vector<std::string> phrase{"golden", "harbor", "lights"};
  std::string attribute = "Dominance";
  double attribute_shift = 0.5;  // Blue centred at +shift, Red at -shift
  double attribute_noise = 0.15;
  std::size_t vocabulary = 400;
  std::size_t min_length = 6;
  std::size_t max_length = 14;
  std::uint64_t seed = 2024;
};

Dataset planted_corpus(const PlantedCorpusConfig& cfg = {});

/// Filler word i, e.g. "w17"-style tokens spelled as pronounceable syllables.
std::string filler_word(std::size_t i);

struct BlobCorpus {
  Dataset dataset;
  std::vector<std::string> attributes;  // the clustered attributes
  std::vector<std::size_t> labels;      // planted blob per instance
};

/// Three Gaussian blobs over Valence and Dominance (sd 0.08); other
/// attributes are uniform noise.
BlobCorpus blob_corpus(std::size_t n = 600, std::uint64_t seed = 11);

/// Small mixed corpus where Fairness and Valence drive the group; used by
/// the explanation fixtures.
Dataset explanation_corpus(std::size_t n = 120, std::uint64_t seed = 5);

}  // namespace groupscope
