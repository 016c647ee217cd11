#include "depsev/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

#include "depsev/error.hpp"
#include "depsev/text.hpp"
#include "json.hpp"

namespace depsev {

using nlohmann::json;

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) {
    for (auto c : row) t += c;
  }
  return t;
}

ConfusionMatrix confusion(std::span<const CoarseLabel> y_true,
                          std::span<const CoarseLabel> y_pred,
                          std::span<const CoarseLabel> classes) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorKind::Validation, "confusion: y_true and y_pred lengths differ");
  }
  if (y_true.empty()) {
    throw Error(ErrorKind::Validation, "confusion: no samples, metrics undefined");
  }
  ConfusionMatrix cm;
  cm.classes.assign(classes.begin(), classes.end());
  const std::size_t k = classes.size();
  cm.counts.assign(k, std::vector<std::size_t>(k, 0));
  auto index = [&](CoarseLabel l) {
    auto it = std::find(classes.begin(), classes.end(), l);
    if (it == classes.end()) {
      throw Error(ErrorKind::Validation,
                  "confusion: label " + std::string(to_string(l)) + " not in class list");
    }
    return static_cast<std::size_t>(it - classes.begin());
  };
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ++cm.counts[index(y_true[i])][index(y_pred[i])];
  }
  return cm;
}

EvalReport metrics(const ConfusionMatrix& cm, std::string model, std::string language) {
  const std::size_t total = cm.total();
  if (total == 0) throw Error(ErrorKind::Validation, "metrics: empty confusion matrix");
  EvalReport r;
  r.model = std::move(model);
  r.language = std::move(language);
  r.sample_count = total;
  const std::size_t k = cm.classes.size();
  std::size_t trace = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = cm.counts[c][c], row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += cm.counts[c][j];
      col += cm.counts[j][c];
    }
    trace += tp;
    ClassMetrics m;
    m.label = cm.classes[c];
    m.support = row;
    m.precision = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    m.recall = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    const double pr = m.precision + m.recall;
    m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    r.macro_precision += m.precision;
    r.macro_recall += m.recall;
    r.macro_f1 += m.f1;
    r.per_class.push_back(m);
  }
  if (k) {
    r.macro_precision /= static_cast<double>(k);
    r.macro_recall /= static_cast<double>(k);
    r.macro_f1 /= static_cast<double>(k);
  }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  return r;
}

namespace {

std::string two_dp(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string lpad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

std::string render_report(std::span<const EvalReport> reports, ReportFormat format) {
  if (reports.empty()) return {};
  const auto& first = reports.front();
  for (const auto& r : reports) {
    bool same = r.per_class.size() == first.per_class.size();
    for (std::size_t i = 0; same && i < r.per_class.size(); ++i) {
      same = r.per_class[i].label == first.per_class[i].label;
    }
    if (!same) {
      throw Error(ErrorKind::Validation, "reports have inconsistent class lists");
    }
  }

  std::ostringstream out;
  if (format == ReportFormat::Machine) {
    for (const auto& r : reports) {
      for (const auto& m : r.per_class) {
        out << json{{"model", r.model},
                    {"language", r.language},
                    {"class", to_string(m.label)},
                    {"precision", m.precision},
                    {"recall", m.recall},
                    {"f1", m.f1},
                    {"support", m.support}}
                   .dump()
            << '\n';
      }
      out << json{{"model", r.model},
                  {"language", r.language},
                  {"accuracy", r.accuracy},
                  {"samples", r.sample_count}}
                 .dump()
          << '\n';
      out << json{{"model", r.model},
                  {"language", r.language},
                  {"macro_precision", r.macro_precision},
                  {"macro_recall", r.macro_recall},
                  {"macro_f1", r.macro_f1}}
                 .dump()
          << '\n';
    }
    return out.str();
  }

  constexpr std::size_t kClassW = 10, kMetricW = 11, kColW = 7;
  out << pad("Class", kClassW) << pad("Metric", kMetricW);
  for (const auto& r : reports) out << lpad(r.model, kColW);
  out << '\n';
  const std::size_t width = kClassW + kMetricW + kColW * reports.size();
  out << std::string(width, '-') << '\n';
  static constexpr const char* kMetricNames[] = {"Precision", "Recall", "F-1"};
  for (std::size_t c = 0; c < first.per_class.size(); ++c) {
    for (int m = 0; m < 3; ++m) {
      out << pad(m == 0 ? std::string(to_string(first.per_class[c].label)) : "", kClassW)
          << pad(kMetricNames[m], kMetricW);
      for (const auto& r : reports) {
        const auto& cm = r.per_class[c];
        const double v = m == 0 ? cm.precision : m == 1 ? cm.recall : cm.f1;
        out << lpad(two_dp(v), kColW);
      }
      out << '\n';
    }
  }
  out << std::string(width, '-') << '\n';
  out << pad("Accuracy", kClassW) << pad("", kMetricW);
  for (const auto& r : reports) out << lpad(two_dp(r.accuracy), kColW);
  out << '\n';
  return out.str();
}

std::vector<EvalReport> parse_machine_report(std::string_view content) {
  std::vector<EvalReport> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::Parse, "machine report line is not JSON");
    try {
      const auto key = std::make_pair(j.at("model").get<std::string>(),
                                      j.at("language").get<std::string>());
      auto [it, inserted] = index.try_emplace(key, out.size());
      if (inserted) {
        out.emplace_back();
        out.back().model = key.first;
        out.back().language = key.second;
      }
      auto& r = out[it->second];
      if (j.contains("class")) {
        ClassMetrics m;
        m.label = coarse_from_string(j.at("class").get<std::string>());
        m.precision = j.at("precision").get<double>();
        m.recall = j.at("recall").get<double>();
        m.f1 = j.at("f1").get<double>();
        m.support = j.value("support", std::size_t{0});
        r.per_class.push_back(m);
      } else if (j.contains("accuracy")) {
        r.accuracy = j.at("accuracy").get<double>();
        r.sample_count = j.value("samples", std::size_t{0});
      } else if (j.contains("macro_f1")) {
        r.macro_precision = j.at("macro_precision").get<double>();
        r.macro_recall = j.at("macro_recall").get<double>();
        r.macro_f1 = j.at("macro_f1").get<double>();
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("machine report: ") + e.what());
    }
  }
  return out;
}

namespace {

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

std::vector<ConsistencyFlag> validate_report_consistency(
    std::span<const PublishedRow> rows, double tolerance) {
  constexpr double kRounding = 0.005;
  std::vector<ConsistencyFlag> flags;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    // F1 is increasing in both arguments, so the extremes sit at the corners.
    const double lo = harmonic(std::max(0.0, r.precision - kRounding),
                               std::max(0.0, r.recall - kRounding));
    const double hi = harmonic(std::min(1.0, r.precision + kRounding),
                               std::min(1.0, r.recall + kRounding));
    if (r.f1 + kRounding < lo - tolerance || r.f1 - kRounding > hi + tolerance) {
      flags.push_back({i, r.label, lo, hi});
    }
  }
  return flags;
}

std::vector<PublishedRow> parse_published_rows(std::string_view content) {
  std::vector<PublishedRow> rows;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto parts = text::split_whitespace(line);
    if (parts.empty()) continue;
    if (parts.size() != 4) {
      throw Error(ErrorKind::Parse, "published row " + std::to_string(line_no) +
                                        ": expected 'label precision recall f1'");
    }
    try {
      rows.push_back({std::string(parts[0]), std::stod(std::string(parts[1])),
                      std::stod(std::string(parts[2])), std::stod(std::string(parts[3]))});
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse,
                  "published row " + std::to_string(line_no) + ": non-numeric value");
    }
  }
  return rows;
}

}  // namespace depsev
