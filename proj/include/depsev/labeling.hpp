#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depsev/bdi_lexicon.hpp"
#include "depsev/corpus.hpp"
#include "depsev/severity.hpp"

namespace depsev {

enum class VoteSource : std::uint8_t { Keyword, ZeroShot, Expert };

std::string_view to_string(VoteSource source);
VoteSource vote_source_from_string(std::string_view name);

struct LabelVote {
  std::string doc_id;
  VoteSource source = VoteSource::Keyword;
  SeverityLabel label = SeverityLabel::Normal;
  std::optional<double> confidence;  // zero-shot votes only
  std::int64_t created_at = 0;

  bool operator==(const LabelVote&) const = default;
};

enum class Agreement : std::uint8_t { Unanimous, Majority, ExpertFallback };

std::string_view to_string(Agreement agreement);

struct FusedLabel {
  std::string doc_id;
  SeverityLabel label = SeverityLabel::Normal;
  Agreement agreement = Agreement::Unanimous;
  std::array<LabelVote, 3> votes;  // keyword, zero-shot, expert
};

/// Per-source weights in (keyword, zero-shot, expert) order.
struct FusionWeights {
  double keyword = 1.0;
  double zeroshot = 1.0;
  double expert = 1.0;
};

class MergeMap {
 public:
  /// Borderline -> Mild, Extreme -> Severe, the rest to themselves.
  MergeMap();
  explicit MergeMap(std::array<CoarseLabel, 6> mapping) : map_(mapping) {}

  CoarseLabel operator()(SeverityLabel label) const {
    return map_[static_cast<std::size_t>(label)];
  }
  const std::array<CoarseLabel, 6>& mapping() const { return map_; }

 private:
  std::array<CoarseLabel, 6> map_;
};

struct ExpertAnnotation {
  std::string doc_id;
  std::string annotator_id;
  SeverityLabel label = SeverityLabel::Normal;
  std::int64_t submitted_at = 0;

  bool operator==(const ExpertAnnotation&) const = default;
};

LabelVote keyword_label(const CleanDocument& doc, const BdiLexicon& lexicon,
                        const SeverityBands& bands, std::int64_t created_at = 0);

/// Turns a zero-shot response into a vote: argmax score, ties toward the more
/// severe label. `labels` must be exactly a permutation of `labelset`
/// (case-insensitive) and scores must lie in [0, 1].
LabelVote zeroshot_vote(const std::string& doc_id,
                        std::span<const std::string> labels,
                        std::span<const double> scores,
                        std::span<const SeverityLabel> labelset,
                        std::int64_t created_at = 0);

/// Three votes for one document, one per source. Without weights this is
/// plain majority with the expert deciding three-way splits; with weights the
/// heaviest label wins and any tie for first goes to the expert.
FusedLabel fuse(const LabelVote& kw, const LabelVote& zs, const LabelVote& ex,
                const std::optional<FusionWeights>& weights = std::nullopt);

CoarseLabel merge_rare(SeverityLabel label, const MergeMap& merge = MergeMap{});

std::string to_json_line(const LabelVote& vote);
LabelVote vote_from_json(std::string_view line);
std::string to_json_line(const FusedLabel& fused, const MergeMap& merge);
FusedLabel fused_from_json(std::string_view line);

std::vector<LabelVote> read_votes(const std::filesystem::path& path);
void write_votes(const std::filesystem::path& path,
                 const std::vector<LabelVote>& votes);

/// CSV columns doc_id, annotator_id, label, submitted_at with a header row.
std::string expert_labels_csv(const std::vector<ExpertAnnotation>& annotations);
std::vector<ExpertAnnotation> parse_expert_labels_csv(std::string_view csv);
std::vector<ExpertAnnotation> read_expert_labels(
    const std::filesystem::path& path);

}  // namespace depsev
