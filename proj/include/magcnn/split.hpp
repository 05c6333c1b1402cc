#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "magcnn/common.hpp"
#include "magcnn/dataset.hpp"
#include "magcnn/rng.hpp"

namespace magcnn {

inline constexpr int kFoldCount = 10;

struct SplitResult {
  std::vector<int> test;                 // 10 percent, stratified
  std::array<std::vector<int>, 10> folds;  // stratified partition of the rest

  std::vector<int> cv_pool() const {
    std::vector<int> out;
    for (const auto& fold : folds) {
      out.insert(out.end(), fold.begin(), fold.end());
    }
    return out;
  }
};

// Stratified 10% test split plus ten near-equal stratified folds over the
// remainder. Per class: shuffle under the seed, floor(n/10) test graphs
// (at least one when the class has two or more), then deal the rest across
// folds, rotating the starting fold so totals stay balanced. Classes with a
// single instance skip the test set with a warning.
inline SplitResult split_dataset(const std::vector<int>& labels,
                                 int class_count, std::uint64_t seed,
                                 const WarnFn& warn = warn_to_stderr) {
  if (labels.size() < 20) {
    throw ConfigError("split needs at least 20 graphs, got " +
                      std::to_string(labels.size()));
  }
  Rng rng(seed);
  SplitResult result;
  std::size_t dealt = 0;
  for (int c = 0; c < class_count; ++c) {
    std::vector<int> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(static_cast<int>(i));
    }
    rng.shuffle(members);
    std::size_t test_take = members.size() / 10;
    if (test_take == 0) {
      if (members.size() >= 2) {
        test_take = 1;
      } else if (warn) {
        warn("class " + std::to_string(c) +
             " has fewer than 2 instances; kept out of the test split");
      }
    }
    for (std::size_t i = 0; i < test_take; ++i) {
      result.test.push_back(members[i]);
    }
    for (std::size_t i = test_take; i < members.size(); ++i) {
      result.folds[dealt % kFoldCount].push_back(members[i]);
      ++dealt;
    }
  }
  return result;
}

}  // namespace magcnn
