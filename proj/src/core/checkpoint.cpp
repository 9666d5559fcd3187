#include "core/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "core/error.hpp"

namespace vusc {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kFormat = "vusc-checkpoint";
constexpr int kVersion = 1;

json vocab_to_json(const Vocab& vocab) {
  json counts = json::array();
  for (std::size_t i = 0; i < vocab.size(); ++i) counts.push_back(vocab.frequency(i));
  return json{{"hash", format_hash(vocab.hash())}, {"words", vocab.words()}, {"counts", std::move(counts)}};
}

Vocab vocab_from_json(const json& j, const std::string& what) {
  Vocab vocab;
  const auto& words = j.at("words");
  const auto& counts = j.at("counts");
  if (words.size() != counts.size()) fail(ErrorKind::Parse, "checkpoint " + what + " vocabulary is malformed");
  for (std::size_t i = 0; i < words.size(); ++i) vocab.add(words[i].get<std::string>(), counts[i].get<std::size_t>());
  if (format_hash(vocab.hash()) != j.at("hash").get<std::string>())
    fail(ErrorKind::Parse, "checkpoint " + what + " vocabulary hash mismatch");
  return vocab;
}

std::vector<double> matrix_from_json(const json& j, std::size_t expected, const std::string& what) {
  auto values = j.get<std::vector<double>>();
  if (values.size() != expected) fail(ErrorKind::Parse, "checkpoint matrix '" + what + "' has wrong size");
  return values;
}

}  // namespace

const AspectModel* TrainedModel::find(const std::string& aspect) const {
  for (const auto& a : aspects)
    if (a.aspect == aspect) return &a;
  return nullptr;
}

std::string format_hash(std::uint64_t hash) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
  return buf;
}

void save_checkpoint(const std::string& path, const TrainedModel& model) {
  json root;
  root["format"] = kFormat;
  root["version"] = kVersion;
  root["features"] = vocab_to_json(model.features);
  json aspects = json::array();
  for (const auto& a : model.aspects) {
    json j;
    j["aspect"] = a.aspect;
    j["num_classes"] = a.sentiment.num_classes;
    j["feature_dim"] = a.sentiment.dim;
    j["embedding_dim"] = a.opinion.dim;
    j["weights"] = a.sentiment.weights;
    j["context"] = a.opinion.context;
    j["opinion_embeddings"] = a.opinion.embeddings;
    j["opinions"] = vocab_to_json(a.opinion.opinions);
    j["targets"] = vocab_to_json(a.opinion.targets);
    std::vector<int> relevant(a.opinion.relevant.begin(), a.opinion.relevant.end());
    j["relevant_targets"] = relevant;
    j["prior"] = a.prior.kind == PriorKind::Uniform ? json("uniform") : json(a.prior.logits);
    aspects.push_back(std::move(j));
  }
  root["aspects"] = std::move(aspects);

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write checkpoint: " + path);
  out << root.dump(1) << '\n';
  if (!out) fail(ErrorKind::Io, "failed writing checkpoint: " + path);
}

TrainedModel load_checkpoint(const std::string& path, std::optional<std::uint64_t> expected_feature_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
  try {
    if (root.at("format") != kFormat || root.at("version") != kVersion)
      fail(ErrorKind::Parse, path + ": not a version " + std::to_string(kVersion) + " checkpoint");
    TrainedModel model;
    model.features = vocab_from_json(root.at("features"), "feature");
    if (expected_feature_hash && model.features.hash() != *expected_feature_hash)
      fail(ErrorKind::Parse, path + ": feature vocabulary hash " + format_hash(model.features.hash()) +
                                 " does not match expected " + format_hash(*expected_feature_hash));
    for (const auto& j : root.at("aspects")) {
      AspectModel a;
      a.aspect = j.at("aspect").get<std::string>();
      const auto classes = j.at("num_classes").get<std::size_t>();
      const auto feature_dim = j.at("feature_dim").get<std::size_t>();
      const auto embedding_dim = j.at("embedding_dim").get<std::size_t>();
      if (feature_dim != model.features.size())
        fail(ErrorKind::Parse, path + ": aspect '" + a.aspect + "' feature dimension disagrees with vocabulary");
      a.sentiment = SentimentModel(classes, feature_dim);
      a.sentiment.weights = matrix_from_json(j.at("weights"), classes * feature_dim, "weights");
      a.opinion = OpinionModel(classes, embedding_dim, vocab_from_json(j.at("opinions"), "opinion"),
                               vocab_from_json(j.at("targets"), "target"));
      a.opinion.context = matrix_from_json(j.at("context"), classes * embedding_dim, "context");
      a.opinion.embeddings = matrix_from_json(j.at("opinion_embeddings"),
                                              a.opinion.num_opinions() * embedding_dim, "opinion_embeddings");
      auto relevant = j.at("relevant_targets").get<std::vector<int>>();
      if (relevant.size() != a.opinion.targets.size())
        fail(ErrorKind::Parse, path + ": relevant_targets has wrong size");
      a.opinion.relevant.assign(relevant.begin(), relevant.end());
      const auto& prior = j.at("prior");
      if (prior.is_string()) {
        a.prior = PriorModel::uniform();
      } else {
        a.prior = PriorModel{PriorKind::Learned, matrix_from_json(prior, classes, "prior")};
      }
      model.aspects.push_back(std::move(a));
    }
    return model;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path + ": malformed checkpoint: " + e.what());
  }
}

}  // namespace vusc
