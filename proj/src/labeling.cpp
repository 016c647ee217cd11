#include "depsev/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "depsev/error.hpp"
#include "depsev/text.hpp"
#include "json.hpp"

namespace depsev {

using nlohmann::json;

std::string_view to_string(VoteSource source) {
  switch (source) {
    case VoteSource::Keyword: return "keyword";
    case VoteSource::ZeroShot: return "zeroshot";
    case VoteSource::Expert: return "expert";
  }
  return "?";
}

VoteSource vote_source_from_string(std::string_view name) {
  if (name == "keyword") return VoteSource::Keyword;
  if (name == "zeroshot") return VoteSource::ZeroShot;
  if (name == "expert") return VoteSource::Expert;
  throw Error(ErrorKind::Validation, "unknown vote source '" + std::string(name) + "'");
}

std::string_view to_string(Agreement agreement) {
  switch (agreement) {
    case Agreement::Unanimous: return "unanimous";
    case Agreement::Majority: return "majority";
    case Agreement::ExpertFallback: return "expert_fallback";
  }
  return "?";
}

namespace {

Agreement agreement_from_string(std::string_view s) {
  if (s == "unanimous") return Agreement::Unanimous;
  if (s == "majority") return Agreement::Majority;
  if (s == "expert_fallback") return Agreement::ExpertFallback;
  throw Error(ErrorKind::Parse, "unknown agreement '" + std::string(s) + "'");
}

}  // namespace

MergeMap::MergeMap()
    : map_{CoarseLabel::Normal, CoarseLabel::Mild,   CoarseLabel::Mild,
           CoarseLabel::Moderate, CoarseLabel::Severe, CoarseLabel::Severe} {}

LabelVote keyword_label(const CleanDocument& doc, const BdiLexicon& lexicon,
                        const SeverityBands& bands, std::int64_t created_at) {
  if (doc.language != lexicon.language()) {
    throw Error(ErrorKind::Validation, "document " + doc.id + " is '" +
                                           doc.language + "' but lexicon is '" +
                                           lexicon.language() + "'");
  }
  const auto s = lexicon.score(doc);
  return {doc.id, VoteSource::Keyword, map_score_to_band(s.total, bands),
          std::nullopt, created_at};
}

LabelVote zeroshot_vote(const std::string& doc_id,
                        std::span<const std::string> labels,
                        std::span<const double> scores,
                        std::span<const SeverityLabel> labelset,
                        std::int64_t created_at) {
  if (labels.size() != scores.size()) {
    throw Error(ErrorKind::Protocol,
                "zero-shot response: labels and scores differ in length");
  }
  std::vector<SeverityLabel> parsed;
  for (const auto& l : labels) {
    auto s = parse_severity(l);
    if (!s || std::find(labelset.begin(), labelset.end(), *s) == labelset.end()) {
      throw Error(ErrorKind::Protocol,
                  "zero-shot response label '" + l + "' not in the label set");
    }
    parsed.push_back(*s);
  }
  std::vector<SeverityLabel> a = parsed, b(labelset.begin(), labelset.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) {
    throw Error(ErrorKind::Protocol,
                "zero-shot response labels do not match the label set");
  }
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]) || scores[i] < 0.0 || scores[i] > 1.0) {
      throw Error(ErrorKind::Protocol, "zero-shot score outside [0, 1]");
    }
    if (!best || scores[i] > scores[*best] ||
        (scores[i] == scores[*best] && parsed[i] > parsed[*best])) {
      best = i;
    }
  }
  if (!best) throw Error(ErrorKind::Protocol, "zero-shot response is empty");
  return {doc_id, VoteSource::ZeroShot, parsed[*best], scores[*best], created_at};
}

FusedLabel fuse(const LabelVote& kw, const LabelVote& zs, const LabelVote& ex,
                const std::optional<FusionWeights>& weights) {
  if (kw.doc_id != zs.doc_id || kw.doc_id != ex.doc_id) {
    throw Error(ErrorKind::Validation, "fuse: votes refer to different documents");
  }
  if (kw.source != VoteSource::Keyword || zs.source != VoteSource::ZeroShot ||
      ex.source != VoteSource::Expert) {
    throw Error(ErrorKind::Validation,
                "fuse: need exactly one keyword, zero-shot and expert vote");
  }
  const FusionWeights w = weights.value_or(FusionWeights{});
  for (double x : {w.keyword, w.zeroshot, w.expert}) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw Error(ErrorKind::Validation, "fusion weights must be positive");
    }
  }

  std::array<double, 6> mass{};
  mass[rank(kw.label)] += w.keyword;
  mass[rank(zs.label)] += w.zeroshot;
  mass[rank(ex.label)] += w.expert;
  const double top = *std::max_element(mass.begin(), mass.end());
  const auto winners = std::count(mass.begin(), mass.end(), top);

  FusedLabel out;
  out.doc_id = kw.doc_id;
  out.votes = {kw, zs, ex};
  if (winners > 1) {
    out.label = ex.label;
    out.agreement = Agreement::ExpertFallback;
    return out;
  }
  out.label = static_cast<SeverityLabel>(
      std::distance(mass.begin(), std::max_element(mass.begin(), mass.end())));
  out.agreement = (kw.label == zs.label && zs.label == ex.label)
                      ? Agreement::Unanimous
                      : Agreement::Majority;
  return out;
}

CoarseLabel merge_rare(SeverityLabel label, const MergeMap& merge) {
  return merge(label);
}

namespace {

json vote_json(const LabelVote& v) {
  json j = {{"doc_id", v.doc_id},
            {"source", to_string(v.source)},
            {"label", to_string(v.label)},
            {"created_at", v.created_at}};
  if (v.confidence) j["confidence"] = *v.confidence;
  return j;
}

LabelVote vote_from(const json& j) {
  try {
    LabelVote v;
    v.doc_id = j.at("doc_id").get<std::string>();
    v.source = vote_source_from_string(j.at("source").get<std::string>());
    v.label = severity_from_string(j.at("label").get<std::string>());
    v.created_at = j.value("created_at", std::int64_t{0});
    if (auto it = j.find("confidence"); it != j.end() && !it->is_null()) {
      v.confidence = it->get<double>();
    }
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("vote record: ") + e.what());
  }
}

}  // namespace

std::string to_json_line(const LabelVote& vote) { return vote_json(vote).dump(); }

LabelVote vote_from_json(std::string_view line) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::Parse, "vote record is not JSON");
  return vote_from(j);
}

std::string to_json_line(const FusedLabel& fused, const MergeMap& merge) {
  json j = {{"doc_id", fused.doc_id},
            {"label", to_string(fused.label)},
            {"coarse", to_string(merge(fused.label))},
            {"agreement", to_string(fused.agreement)},
            {"votes", json::array({vote_json(fused.votes[0]),
                                   vote_json(fused.votes[1]),
                                   vote_json(fused.votes[2])})}};
  return j.dump();
}

FusedLabel fused_from_json(std::string_view line) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::Parse, "fused record is not JSON");
  try {
    FusedLabel f;
    f.doc_id = j.at("doc_id").get<std::string>();
    f.label = severity_from_string(j.at("label").get<std::string>());
    f.agreement = agreement_from_string(j.at("agreement").get<std::string>());
    const auto& votes = j.at("votes");
    if (votes.size() != 3) throw Error(ErrorKind::Parse, "fused record needs 3 votes");
    for (std::size_t i = 0; i < 3; ++i) f.votes[i] = vote_from(votes[i]);
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("fused record: ") + e.what());
  }
}

std::vector<LabelVote> read_votes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::vector<LabelVote> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!text::trim(line).empty()) out.push_back(vote_from_json(line));
  }
  return out;
}

void write_votes(const std::filesystem::path& path,
                 const std::vector<LabelVote>& votes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& v : votes) out << to_json_line(v) << '\n';
}

std::string expert_labels_csv(const std::vector<ExpertAnnotation>& annotations) {
  std::string out = "doc_id,annotator_id,label,submitted_at\n";
  for (const auto& a : annotations) {
    out += a.doc_id + ',' + a.annotator_id + ',' + std::string(to_string(a.label)) +
           ',' + std::to_string(a.submitted_at) + '\n';
  }
  return out;
}

std::vector<ExpertAnnotation> parse_expert_labels_csv(std::string_view csv) {
  std::vector<ExpertAnnotation> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (line_no == 1 && t.starts_with("doc_id")) continue;
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream ls{std::string(t)};
    while (std::getline(ls, cell, ',')) cols.emplace_back(text::trim(cell));
    if (cols.size() != 4) {
      throw Error(ErrorKind::Parse,
                  "expert labels line " + std::to_string(line_no) +
                      ": expected doc_id,annotator_id,label,submitted_at");
    }
    ExpertAnnotation a;
    a.doc_id = cols[0];
    a.annotator_id = cols[1];
    a.label = severity_from_string(cols[2]);
    try {
      a.submitted_at = std::stoll(cols[3]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "expert labels line " +
                                        std::to_string(line_no) +
                                        ": bad submitted_at");
    }
    if (a.doc_id.empty()) {
      throw Error(ErrorKind::Parse,
                  "expert labels line " + std::to_string(line_no) + ": empty doc_id");
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<ExpertAnnotation> read_expert_labels(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_expert_labels_csv(ss.str());
}

}  // namespace depsev
