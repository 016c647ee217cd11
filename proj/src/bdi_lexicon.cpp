#include "depsev/bdi_lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "depsev/error.hpp"
#include "depsev/text.hpp"

namespace depsev {

std::vector<QuestionnaireItem> load_questionnaire(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read questionnaire " + path.string());

  std::map<int, std::vector<QuestionnaireOption>> grouped;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto a = t.find('\t');
    const auto b = a == std::string_view::npos ? a : t.find('\t', a + 1);
    if (b == std::string_view::npos) {
      throw Error(ErrorKind::Parse, "questionnaire line " +
                                        std::to_string(line_no) +
                                        ": expected item<TAB>score<TAB>statement");
    }
    int item = 0, score = 0;
    try {
      item = std::stoi(std::string(t.substr(0, a)));
      score = std::stoi(std::string(t.substr(a + 1, b - a - 1)));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "questionnaire line " +
                                        std::to_string(line_no) +
                                        ": non-numeric item or score");
    }
    grouped[item].push_back({std::string(text::trim(t.substr(b + 1))), score});
  }

  std::vector<QuestionnaireItem> items;
  for (const auto& [index, opts] : grouped) {
    if (opts.size() != 4) {
      throw Error(ErrorKind::Validation,
                  "questionnaire item " + std::to_string(index) + " has " +
                      std::to_string(opts.size()) + " options, expected 4");
    }
    QuestionnaireItem it;
    it.index = index;
    std::copy(opts.begin(), opts.end(), it.options.begin());
    items.push_back(std::move(it));
  }
  if (items.size() != kQuestionnaireItems || items.front().index != 1 ||
      items.back().index != kQuestionnaireItems) {
    throw Error(ErrorKind::Validation,
                "questionnaire must define items 1..21, found " +
                    std::to_string(items.size()) + " items");
  }
  return items;
}

BdiLexicon::BdiLexicon(std::string language, std::vector<LexiconEntry> entries)
    : language_(std::move(language)), entries_(std::move(entries)) {
  std::set<std::pair<int, std::string>> seen;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.item_index < 1 || e.item_index > kQuestionnaireItems) {
      throw Error(ErrorKind::Validation,
                  "lexicon item index out of range: " +
                      std::to_string(e.item_index));
    }
    if (e.score < 0 || e.score > kMaxItemScore) {
      throw Error(ErrorKind::Validation,
                  "lexicon score out of range for '" + e.keyword + "'");
    }
    if (e.keyword.empty()) {
      throw Error(ErrorKind::Validation, "empty lexicon keyword");
    }
    if (!seen.emplace(e.item_index, e.keyword).second) {
      throw Error(ErrorKind::Validation,
                  "keyword '" + e.keyword + "' repeated within item " +
                      std::to_string(e.item_index));
    }
    by_keyword_[e.keyword].push_back(i);
  }
}

BdiScore BdiLexicon::score(const CleanDocument& doc) const {
  std::unordered_set<std::string_view> tokens;
  for (auto t : text::split_whitespace(doc.text)) tokens.insert(t);

  std::vector<std::size_t> hits;
  for (auto tok : tokens) {
    auto it = by_keyword_.find(std::string(tok));
    if (it == by_keyword_.end()) continue;
    hits.insert(hits.end(), it->second.begin(), it->second.end());
  }
  // Lexicon order keeps the match list independent of hash iteration order.
  std::sort(hits.begin(), hits.end());

  BdiScore s;
  for (auto i : hits) {
    const auto& e = entries_[i];
    s.matched_keywords.push_back({e.keyword, e.item_index, e.score});
    auto [it, inserted] = s.per_item.try_emplace(e.item_index, e.score);
    if (!inserted) it->second = std::max(it->second, e.score);
  }
  for (const auto& [item, v] : s.per_item) s.total += v;
  return s;
}

void BdiLexicon::export_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& e : entries_) {
    out << e.item_index << '\t' << e.keyword << '\t' << e.score << '\n';
  }
}

BdiLexicon BdiLexicon::import_tsv(const std::filesystem::path& path,
                                  std::string language) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read lexicon " + path.string());
  std::vector<LexiconEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    std::istringstream ss(line);
    std::string item, kw, score;
    if (!std::getline(ss, item, '\t') || !std::getline(ss, kw, '\t') ||
        !std::getline(ss, score)) {
      throw Error(ErrorKind::Parse,
                  "lexicon line " + std::to_string(line_no) + " malformed");
    }
    try {
      entries.push_back({std::stoi(item), kw, std::stoi(score)});
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse,
                  "lexicon line " + std::to_string(line_no) + " malformed");
    }
  }
  return BdiLexicon(std::move(language), std::move(entries));
}

BdiLexicon build_lexicon(const std::vector<QuestionnaireItem>& items,
                         const StopList& stops, const WarningSink& warn) {
  if (items.empty()) {
    throw Error(ErrorKind::Validation, "empty questionnaire");
  }
  std::set<int> indices;
  std::vector<LexiconEntry> entries;
  for (const auto& item : items) {
    if (!indices.insert(item.index).second) {
      throw Error(ErrorKind::Validation,
                  "duplicate questionnaire item " + std::to_string(item.index));
    }
    std::set<int> scores;
    for (const auto& opt : item.options) {
      if (opt.statement.empty()) {
        throw Error(ErrorKind::Validation, "empty statement in item " +
                                               std::to_string(item.index));
      }
      scores.insert(opt.score);
    }
    if (scores != std::set<int>{0, 1, 2, 3}) {
      throw Error(ErrorKind::Validation,
                  "item " + std::to_string(item.index) +
                      " options must be scored exactly 0, 1, 2, 3");
    }

    const std::size_t first = entries.size();
    for (const auto& opt : item.options) {
      bool any = false;
      for (auto& tok : text::normalize_tokens(opt.statement)) {
        if (stops.contains(tok)) continue;
        any = true;
        auto it = std::find_if(entries.begin() + static_cast<std::ptrdiff_t>(first),
                               entries.end(),
                               [&](const LexiconEntry& e) { return e.keyword == tok; });
        if (it == entries.end()) {
          entries.push_back({item.index, std::move(tok), opt.score});
        } else {
          it->score = std::max(it->score, opt.score);
        }
      }
      if (!any && warn) {
        warn("item " + std::to_string(item.index) + " option scored " +
             std::to_string(opt.score) + " has only stop words");
      }
    }
  }
  return BdiLexicon(stops.language(), std::move(entries));
}

BdiScore score_text(const CleanDocument& doc, const BdiLexicon& lexicon) {
  return lexicon.score(doc);
}

SeverityBands::SeverityBands(std::vector<Band> bands) : bands_(std::move(bands)) {
  if (bands_.empty()) throw Error(ErrorKind::Validation, "no severity bands");
  int prev = -1;
  for (const auto& [upper, label] : bands_) {
    if (upper <= prev) {
      throw Error(ErrorKind::Validation,
                  "severity band bounds must be strictly increasing from 0");
    }
    prev = upper;
  }
  if (prev != kMaxTotalScore) {
    throw Error(ErrorKind::Validation, "last severity band must end at 63");
  }
}

SeverityBands SeverityBands::standard() {
  return SeverityBands({{10, SeverityLabel::Normal},
                        {16, SeverityLabel::Mild},
                        {20, SeverityLabel::Borderline},
                        {30, SeverityLabel::Moderate},
                        {40, SeverityLabel::Severe},
                        {63, SeverityLabel::Extreme}});
}

SeverityBands SeverityBands::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read bands file " + path.string());
  std::vector<Band> bands;
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto parts = text::split_whitespace(line);
    if (parts.empty()) continue;
    if (parts.size() != 2) {
      throw Error(ErrorKind::Parse, "bands line must be 'upper_bound label'");
    }
    int upper = 0;
    try {
      upper = std::stoi(std::string(parts[0]));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "bad band bound '" + std::string(parts[0]) + "'");
    }
    bands.emplace_back(upper, severity_from_string(parts[1]));
  }
  return SeverityBands(std::move(bands));
}

SeverityLabel map_score_to_band(int score, const SeverityBands& bands) {
  if (score < 0 || score > kMaxTotalScore) {
    throw Error(ErrorKind::Validation,
                "score " + std::to_string(score) + " outside 0..63");
  }
  for (const auto& [upper, label] : bands.bands()) {
    if (score <= upper) return label;
  }
  throw Error(ErrorKind::Validation, "score not covered by bands");
}

}  // namespace depsev
