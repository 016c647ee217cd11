#include "doctest.h"
#include "support.hpp"

#include <cmath>

#include "depsev/error.hpp"
#include "depsev/evaluation.hpp"
#include "depsev/rng.hpp"

using namespace depsev;
using C = CoarseLabel;

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

TEST_CASE("confusion matrix of a small example") {
  const std::vector<C> classes = {C::Normal, C::Mild};
  const std::vector<C> truth = {C::Normal, C::Normal, C::Mild};
  const std::vector<C> pred = {C::Normal, C::Mild, C::Mild};
  const auto cm = confusion(truth, pred, classes);
  CHECK(cm.counts == std::vector<std::vector<std::size_t>>{{1, 1}, {0, 1}});
  const auto r = metrics(cm, "NB", "en");
  CHECK(r.per_class[0].precision == 1.0);
  CHECK(r.per_class[0].recall == 0.5);
  CHECK(std::abs(r.per_class[0].f1 - 2.0 / 3.0) < 1e-12);
  CHECK(r.per_class[1].precision == 0.5);
  CHECK(r.per_class[1].recall == 1.0);
  CHECK(std::abs(r.accuracy - 2.0 / 3.0) < 1e-12);
  CHECK(r.sample_count == 3);
}

TEST_CASE("accuracy is the trace over the total") {
  ConfusionMatrix cm{{C::Normal, C::Severe}, {{2, 1}, {1, 2}}};
  CHECK(std::abs(metrics(cm).accuracy - 4.0 / 6.0) < 1e-12);
}

TEST_CASE("empty and inconsistent inputs are rejected") {
  const std::vector<C> classes = {C::Normal};
  CHECK_THROWS_AS(confusion({}, {}, classes), Error);
  const std::vector<C> a = {C::Normal}, b = {C::Normal, C::Normal};
  CHECK_THROWS_AS(confusion(a, b, classes), Error);
  const std::vector<C> other = {C::Severe};
  CHECK_THROWS_AS(confusion(other, other, classes), Error);
  CHECK_THROWS_AS(metrics(ConfusionMatrix{{C::Normal}, {{0}}}), Error);
}

TEST_CASE("a class never seen nor predicted scores zero") {
  const std::vector<C> classes = {C::Normal, C::Mild, C::Severe};
  const std::vector<C> y = {C::Normal, C::Severe};
  const auto r = metrics(confusion(y, y, classes));
  CHECK(r.per_class[1].precision == 0.0);
  CHECK(r.per_class[1].recall == 0.0);
  CHECK(r.per_class[1].f1 == 0.0);
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("property: metrics agree with direct counting") {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 1 + rng.below(4);
    std::vector<C> classes(kAllCoarse.begin(), kAllCoarse.begin() + static_cast<long>(k));
    const std::size_t n = 1 + rng.below(60);
    std::vector<C> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = classes[rng.below(k)];
      p[i] = rng.unit() < 0.6 ? t[i] : classes[rng.below(k)];
    }
    const auto cm = confusion(t, p, classes);
    CHECK(cm.total() == n);
    const auto r = metrics(cm);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += t[i] == p[i];
    CHECK(std::abs(r.accuracy - static_cast<double>(correct) / static_cast<double>(n)) < 1e-12);
    double macro = 0;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t tp = 0, pred = 0, actual = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += t[i] == classes[c] && p[i] == classes[c];
        pred += p[i] == classes[c];
        actual += t[i] == classes[c];
      }
      const double prec = pred ? double(tp) / double(pred) : 0.0;
      const double rec = actual ? double(tp) / double(actual) : 0.0;
      const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
      CHECK(std::abs(r.per_class[c].precision - prec) < 1e-12);
      CHECK(std::abs(r.per_class[c].recall - rec) < 1e-12);
      CHECK(std::abs(r.per_class[c].f1 - f1) < 1e-12);
      CHECK(r.per_class[c].support == actual);
      CHECK(r.per_class[c].f1 <= std::max(prec, rec) + 1e-12);
      CHECK(r.per_class[c].f1 >= std::min(prec, rec) - 1e-12);
      macro += f1;
    }
    CHECK(std::abs(r.macro_f1 - macro / static_cast<double>(k)) < 1e-12);
  }
}

TEST_CASE("text report layout") {
  const std::vector<C> classes = {C::Normal, C::Mild, C::Moderate, C::Severe};
  const std::vector<C> t = {C::Normal, C::Mild, C::Moderate, C::Severe, C::Normal, C::Mild};
  const std::vector<C> p = {C::Normal, C::Mild, C::Moderate, C::Severe, C::Mild, C::Mild};
  std::vector<EvalReport> reports = {metrics(confusion(t, p, classes), "NB", "en"),
                                     metrics(confusion(t, t, classes), "RF", "en")};
  const auto text = render_report(reports, ReportFormat::Text);
  const auto lines = [&] {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }();
  // Header, rule, 12 class x metric rows, rule, accuracy.
  REQUIRE(lines.size() == 16);
  CHECK(lines[0].find("NB") != std::string::npos);
  CHECK(lines[0].find("RF") != std::string::npos);
  CHECK(lines[2].rfind("Normal", 0) == 0);
  CHECK(lines[2].find("Precision") != std::string::npos);
  // Mild recall row: 2/2 for both; Mild precision for NB is 2/3.
  CHECK(lines[5].find("0.67") != std::string::npos);
  CHECK(lines[15].rfind("Accuracy", 0) == 0);
  CHECK(lines[15].find("0.83") != std::string::npos);
  CHECK(lines[15].find("1.00") != std::string::npos);

  auto broken = reports;
  broken[1].per_class.pop_back();
  CHECK_THROWS_AS(render_report(broken, ReportFormat::Text), Error);
}

TEST_CASE("machine report round-trips at full precision") {
  Rng rng(5);
  const std::vector<C> classes = {C::Normal, C::Mild, C::Moderate};
  std::vector<EvalReport> reports;
  for (const char* model : {"NB", "SVM"}) {
    std::vector<C> t(37), p(37);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = classes[rng.below(3)];
      p[i] = classes[rng.below(3)];
    }
    reports.push_back(metrics(confusion(t, p, classes), model, "lg"));
  }
  const auto back = parse_machine_report(render_report(reports, ReportFormat::Machine));
  REQUIRE(back.size() == reports.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].model == reports[i].model);
    CHECK(back[i].language == "lg");
    CHECK(back[i].accuracy == reports[i].accuracy);
    CHECK(back[i].macro_f1 == reports[i].macro_f1);
    CHECK(back[i].sample_count == 37);
    REQUIRE(back[i].per_class.size() == 3);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(back[i].per_class[c].label == reports[i].per_class[c].label);
      CHECK(back[i].per_class[c].precision == reports[i].per_class[c].precision);
      CHECK(back[i].per_class[c].f1 == reports[i].per_class[c].f1);
    }
  }
  CHECK_THROWS_AS(parse_machine_report("{not json"), Error);
}

TEST_CASE("published row consistency") {
  const std::vector<PublishedRow> rows = {
      {"a", 0.44, 0.79, 0.56}, {"b", 0.10, 0.50, 0.67}, {"c", 1.0, 1.0, 1.0}, {"d", 0, 0, 0}};
  const auto flags = validate_report_consistency(rows, 0.02);
  REQUIRE(flags.size() == 1);
  CHECK(flags[0].row == 1);
  CHECK(flags[0].label == "b");
  CHECK(flags[0].f1_max < 0.2);
}

TEST_CASE("property: honestly rounded rows are never flagged") {
  Rng rng(8);
  std::vector<PublishedRow> rows;
  for (int i = 0; i < 2000; ++i) {
    const double p = rng.unit(), r = rng.unit();
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    rows.push_back({"r" + std::to_string(i), round2(p), round2(r), round2(f)});
  }
  CHECK(validate_report_consistency(rows, 0.0).empty());
}

TEST_CASE("property: tolerance only ever removes flags") {
  Rng rng(9);
  std::vector<PublishedRow> rows;
  for (int i = 0; i < 500; ++i) {
    rows.push_back({"r", round2(rng.unit()), round2(rng.unit()), round2(rng.unit())});
  }
  std::size_t prev = rows.size() + 1;
  for (double tol : {0.0, 0.01, 0.02, 0.05, 0.1, 1.0}) {
    const auto n = validate_report_consistency(rows, tol).size();
    CHECK(n <= prev);
    prev = n;
  }
  CHECK(prev == 0);
}

TEST_CASE("published rows parse") {
  const auto rows = parse_published_rows("# header\nen/NB/Normal 0.44 0.79 0.56\n\n x 1 1 1 # c\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].label == "en/NB/Normal");
  CHECK(rows[0].recall == 0.79);
  CHECK_THROWS_AS(parse_published_rows("a 1 2"), Error);
  CHECK_THROWS_AS(parse_published_rows("a 1 2 x"), Error);
}
