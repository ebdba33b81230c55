#include "dnnc/augment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "dnnc/corpus.hpp"

namespace dnnc {

SynonymLexicon::SynonymLexicon(std::map<std::string, std::vector<std::string>> entries) {
  for (auto& [word, syns] : entries) {
    const std::string key = to_lower(word);
    std::vector<std::string> kept;
    for (auto& s : syns) {
      if (to_lower(s) != key && !trim(s).empty()) kept.push_back(trim(s));
    }
    if (!kept.empty()) entries_[key] = std::move(kept);
  }
}

SynonymLexicon SynonymLexicon::from_json(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
    return SynonymLexicon(doc.get<std::map<std::string, std::vector<std::string>>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synonym lexicon: ") + e.what());
  }
}

SynonymLexicon SynonymLexicon::load(const std::string& path) { return from_json(read_file(path)); }

const std::vector<std::string>* SynonymLexicon::synonyms(std::string_view word) const {
  auto it = entries_.find(to_lower(word));
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> split_words(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::size_t eda_edit_count(double p, std::size_t length) {
  if (p <= 0.0) return 0;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(p * static_cast<double>(length))));
}

std::vector<std::string> synonym_replacement(const std::vector<std::string>& words, double p,
                                             const SynonymLexicon& lexicon, Rng& rng) {
  std::vector<std::string> out = words;
  for (auto& w : out) {
    if (!rng.bernoulli(p)) continue;
    if (const auto* syns = lexicon.synonyms(w)) w = (*syns)[rng.index(syns->size())];
  }
  return out;
}

std::vector<std::string> random_insertion(const std::vector<std::string>& words, std::size_t edits,
                                          const SynonymLexicon& lexicon, Rng& rng) {
  std::vector<std::string> out = words;
  for (std::size_t e = 0; e < edits; ++e) {
    std::vector<const std::vector<std::string>*> candidates;
    for (const auto& w : out) {
      if (const auto* syns = lexicon.synonyms(w)) candidates.push_back(syns);
    }
    if (candidates.empty()) break;
    const auto& syns = *candidates[rng.index(candidates.size())];
    const std::string& inserted = syns[rng.index(syns.size())];
    const std::size_t pos = rng.index(out.size() + 1);
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), inserted);
  }
  return out;
}

std::vector<std::string> swap_positions(std::vector<std::string> words, std::size_t i, std::size_t j) {
  if (i >= words.size() || j >= words.size()) throw std::out_of_range("swap_positions: index out of range");
  std::swap(words[i], words[j]);
  return words;
}

std::vector<std::string> random_swap(const std::vector<std::string>& words, std::size_t edits, Rng& rng) {
  std::vector<std::string> out = words;
  if (out.size() < 2) return out;
  for (std::size_t e = 0; e < edits; ++e) {
    const std::size_t i = rng.index(out.size());
    std::size_t j = rng.index(out.size() - 1);
    if (j >= i) ++j;
    out = swap_positions(std::move(out), i, j);
  }
  return out;
}

std::vector<std::string> random_deletion(const std::vector<std::string>& words, double p, Rng& rng) {
  std::vector<std::string> out;
  for (const auto& w : words) {
    if (!rng.bernoulli(p)) out.push_back(w);
  }
  if (out.empty() && !words.empty()) out.push_back(words[rng.index(words.size())]);
  return out;
}

std::vector<std::string> eda_augment(std::string_view utterance, const EdaParams& params,
                                     const SynonymLexicon& lexicon) {
  if (params.edit_prob < 0.0 || params.edit_prob > 1.0) {
    throw std::invalid_argument("eda_augment: edit_prob must lie in [0, 1]");
  }
  const auto words = split_words(utterance);
  if (words.empty()) throw std::invalid_argument("eda_augment: empty utterance");

  Rng rng(params.seed);
  const double p = params.edit_prob;
  const std::size_t edits = eda_edit_count(p, words.size());
  std::vector<std::string> out;
  out.reserve(4 * params.augmentations_per_technique);
  for (std::size_t round = 0; round < params.augmentations_per_technique; ++round) {
    out.push_back(join_words(synonym_replacement(words, p, lexicon, rng)));
    out.push_back(join_words(random_insertion(words, edits, lexicon, rng)));
    out.push_back(join_words(random_swap(words, edits, rng)));
    out.push_back(join_words(random_deletion(words, p, rng)));
  }
  return out;
}

}  // namespace dnnc
