// Writes the separable test fixture: a 200-document corpus whose severity
// classes use disjoint vocabularies, matching expert labels, and the cue list
// the stub zero-shot server scores with.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "CLI11.hpp"
#include "depsev/labeling.hpp"
#include "depsev/rng.hpp"
#include "json.hpp"

using namespace depsev;
using nlohmann::json;

namespace {

struct ClassSpec {
  SeverityLabel label;
  int count;
  SeverityLabel vocab;  // whose word list the documents draw from
};

const std::map<SeverityLabel, std::vector<std::string>> kVocab = {
    {SeverityLabel::Normal,
     {"garden", "picnic", "sunshine", "bicycle", "concert", "recipe", "holiday",
      "football", "laughing", "beach", "festival", "painting", "puppy", "camping",
      "birthday", "coffee", "hiking", "weekend", "cinema", "music"}},
    {SeverityLabel::Mild,
     {"meh", "gloomy", "sluggish", "grumpy", "rainy", "bored", "drained", "overcast",
      "blah", "flat", "dull", "moody", "mopey", "lethargic", "tedious", "sighing",
      "unmotivated", "listless", "foggy", "grey"}},
    {SeverityLabel::Moderate,
     {"insomnia", "crying", "isolated", "withdrawn", "appetite", "lonely", "numb",
      "heavy", "aching", "tearful", "guilty", "restless", "sleepless", "empty",
      "shaky", "skipping", "avoiding", "overwhelmed", "anxious", "stuck"}},
    {SeverityLabel::Severe,
     {"hopeless", "worthless", "unbearable", "despair", "trapped", "agony", "burden",
      "suicidal", "collapse", "paralysed", "shattered", "darkness", "torment",
      "ruined", "unreachable", "screaming", "drowning", "broken", "crushing", "dying"}},
};

const std::vector<std::string> kFiller = {"i", "the", "and", "my", "it", "was", "so",
                                          "to", "a", "of", "with", "have", "been"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the separable fixture"};
  std::string out = "data/fixture";
  std::uint64_t seed = 2024;
  app.add_option("--out", out);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  const std::array<ClassSpec, 6> classes = {{
      {SeverityLabel::Normal, 70, SeverityLabel::Normal},
      {SeverityLabel::Mild, 40, SeverityLabel::Mild},
      {SeverityLabel::Borderline, 10, SeverityLabel::Mild},
      {SeverityLabel::Moderate, 50, SeverityLabel::Moderate},
      {SeverityLabel::Severe, 24, SeverityLabel::Severe},
      {SeverityLabel::Extreme, 6, SeverityLabel::Severe},
  }};

  std::vector<std::pair<SeverityLabel, SeverityLabel>> plan;  // (label, vocab)
  for (const auto& c : classes) {
    for (int i = 0; i < c.count; ++i) plan.emplace_back(c.label, c.vocab);
  }
  Rng rng(seed);
  rng.shuffle(std::span(plan));

  std::filesystem::create_directories(out);
  std::ofstream corpus(std::filesystem::path(out) / "corpus.jsonl", std::ios::binary);
  std::vector<ExpertAnnotation> labels;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& words = kVocab.at(plan[i].second);
    const std::size_t n = 10 + rng.below(11);
    std::string body;
    for (std::size_t w = 0; w < n; ++w) {
      if (!body.empty()) body += ' ';
      if (rng.below(3) == 0) body += kFiller[rng.below(kFiller.size())] + ' ';
      body += words[rng.below(words.size())];
    }
    if (i % 17 == 0) body += " see https://example.org/post/" + std::to_string(i);
    char id[32];
    std::snprintf(id, sizeof id, "doc%03zu", i);
    json rec = {{"id", id},
                {"source", "fixture"},
                {"created_at", 1600000000 + static_cast<std::int64_t>(i) * 3600},
                {"body", body},
                {"language", "en"}};
    if (i % 5 == 0) rec["title"] = "Post " + std::to_string(i);
    corpus << rec.dump() << '\n';
    labels.push_back({id, "expert-1", plan[i].first,
                      1700000000 + static_cast<std::int64_t>(i)});
  }
  std::ofstream(std::filesystem::path(out) / "expert_labels.csv", std::ios::binary)
      << expert_labels_csv(labels);

  std::ofstream cues(std::filesystem::path(out) / "zeroshot_cues.tsv", std::ios::binary);
  for (const auto& [label, words] : kVocab) {
    for (const auto& w : words) cues << to_string(label) << '\t' << w << '\n';
  }
  std::printf("wrote %zu documents to %s\n", plan.size(), out.c_str());
  return 0;
}
