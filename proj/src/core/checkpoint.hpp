#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/model.hpp"

namespace vusc {

// A trained classifier set: the BoW vocabulary shared by every aspect plus
// one model bundle per aspect.
struct TrainedModel {
  Vocab features;
  std::vector<AspectModel> aspects;

  const AspectModel* find(const std::string& aspect) const;
};

void save_checkpoint(const std::string& path, const TrainedModel& model);

// Rejects files whose stored vocabulary hashes do not match their word lists,
// and, when given, a feature vocabulary hash other than `expected_feature_hash`.
TrainedModel load_checkpoint(const std::string& path, std::optional<std::uint64_t> expected_feature_hash = {});

std::string format_hash(std::uint64_t hash);

}  // namespace vusc
