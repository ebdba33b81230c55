#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dnnc/common.hpp"

namespace dnnc {

struct EdaParams {
  double edit_prob = 0.1;
  std::size_t augmentations_per_technique = 1;
  std::uint64_t seed = 0;
};

/// word -> synonyms. Lookups are lowercase; self-synonyms are dropped on load.
class SynonymLexicon {
 public:
  SynonymLexicon() = default;
  explicit SynonymLexicon(std::map<std::string, std::vector<std::string>> entries);

  static SynonymLexicon from_json(std::string_view bytes);
  static SynonymLexicon load(const std::string& path);

  const std::vector<std::string>* synonyms(std::string_view word) const;
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

enum class EdaTechnique { SynonymReplacement, RandomInsertion, RandomSwap, RandomDeletion };

/// Applies each technique separately to the original utterance, producing
/// 4 * params.augmentations_per_technique variants in technique order
/// (replacement, insertion, swap, deletion), repeated per augmentation round.
std::vector<std::string> eda_augment(std::string_view utterance, const EdaParams& params,
                                     const SynonymLexicon& lexicon);

std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words);

std::vector<std::string> synonym_replacement(const std::vector<std::string>& words, double p,
                                             const SynonymLexicon& lexicon, Rng& rng);
std::vector<std::string> random_insertion(const std::vector<std::string>& words, std::size_t edits,
                                          const SynonymLexicon& lexicon, Rng& rng);
std::vector<std::string> random_swap(const std::vector<std::string>& words, std::size_t edits, Rng& rng);
std::vector<std::string> random_deletion(const std::vector<std::string>& words, double p, Rng& rng);

/// Exchanges positions i and j.
std::vector<std::string> swap_positions(std::vector<std::string> words, std::size_t i, std::size_t j);

/// Edit count for swap/insertion: 0 when p == 0, else max(1, round(p * length)).
std::size_t eda_edit_count(double p, std::size_t length);

}  // namespace dnnc
