#pragma once

#include <cstdint>

#include "dnnc/corpus.hpp"

namespace dnnc {

/// Split sizes for the templated toy corpus.
struct SyntheticSpec {
  std::uint64_t seed = 7;
  std::size_t train_per_intent = 40;
  std::size_t dev_per_intent = 10;
  std::size_t test_per_intent = 30;
  std::size_t oos_dev = 30;
  std::size_t oos_test = 100;
};

/// Five-intent templated corpus (two domains: "banking" and "assistant") with
/// held-out out-of-scope utterances drawn from unrelated topics. Utterances are
/// unique across all splits and pools. Deterministic in spec.seed.
Corpus make_synthetic_corpus(const SyntheticSpec& spec = {});

}  // namespace dnnc
