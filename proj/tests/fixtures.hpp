#pragma once

#include <string>
#include <vector>

#include "nextline/pipeline.hpp"
#include "support.hpp"

namespace testing {

// `chains` disjoint chains of `length` lines, each chain one block repeated
// `repeats` times in its own file.
inline std::vector<nextline::LineSequence> chain_corpus(int chains, int length, int repeats) {
  std::vector<nextline::LineSequence> out;
  for (int c = 0; c < chains; ++c) {
    nextline::Block block;
    for (int i = 0; i < length; ++i) {
      block.push_back("c" + std::to_string(c) + "_" + std::to_string(i) + " = step(" + std::to_string(i) + ")");
    }
    out.push_back({"chain" + std::to_string(c) + ".py", std::vector<nextline::Block>(repeats, block)});
  }
  return out;
}

inline nextline::PipelineConfig small_config() {
  nextline::PipelineConfig cfg;
  cfg.train.vector_size = 32;
  cfg.train.epochs = 20;
  cfg.train.workers = 1;
  return cfg;
}

}  // namespace testing
