#pragma once

#include <span>
#include <string>
#include <vector>

#include "depsev/severity.hpp"

namespace depsev {

struct ConfusionMatrix {
  std::vector<CoarseLabel> classes;
  std::vector<std::vector<std::size_t>> counts;  // [true][predicted]

  std::size_t total() const;
};

ConfusionMatrix confusion(std::span<const CoarseLabel> y_true,
                          std::span<const CoarseLabel> y_pred,
                          std::span<const CoarseLabel> classes);

struct ClassMetrics {
  CoarseLabel label = CoarseLabel::Normal;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::string model;  // column name, e.g. "NB"
  std::string language;
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::size_t sample_count = 0;
};

/// Per-class precision/recall/F1 (0/0 counts as 0) and accuracy.
EvalReport metrics(const ConfusionMatrix& cm, std::string model = {},
                   std::string language = {});

enum class ReportFormat { Text, Machine };

/// Text: class x metric rows with one column per model and a final accuracy
/// row, values to two decimals. Machine: one JSON record per class and model,
/// then accuracy and macro-average records, at full precision.
std::string render_report(std::span<const EvalReport> reports, ReportFormat format);

/// Parses records written by render_report(..., Machine).
std::vector<EvalReport> parse_machine_report(std::string_view text);

struct PublishedRow {
  std::string label;  // free-form identifier, e.g. "en/SVM/Normal"
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ConsistencyFlag {
  std::size_t row = 0;
  std::string label;
  double f1_min = 0.0;  // attainable harmonic-mean range given rounding
  double f1_max = 0.0;
};

/// Flags rows whose F1 cannot be the harmonic mean of their precision and
/// recall once every printed value is allowed +-0.005 of rounding and
/// `tolerance` of slack.
std::vector<ConsistencyFlag> validate_report_consistency(
    std::span<const PublishedRow> rows, double tolerance);

/// Lines of "label precision recall f1" ('#' comments allowed).
std::vector<PublishedRow> parse_published_rows(std::string_view text);

}  // namespace depsev
