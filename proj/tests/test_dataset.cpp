#include "doctest.h"
#include "support.hpp"

#include <chrono>
#include <set>

#include "depsev/dataset.hpp"
#include "depsev/error.hpp"

using namespace depsev;
using C = CoarseLabel;

namespace {

std::vector<LabeledId> population(const std::map<C, std::size_t>& sizes) {
  std::vector<LabeledId> pop;
  for (const auto& [label, n] : sizes) {
    for (std::size_t i = 0; i < n; ++i) {
      pop.push_back({std::string(to_string(label)) + "-" + std::to_string(i), label});
    }
  }
  return pop;
}

std::size_t count(const std::vector<LabeledId>& v, C label) {
  return std::count_if(v.begin(), v.end(), [&](const LabeledId& x) { return x.label == label; });
}

std::vector<LabeledVector> random_class(Rng& rng, C label, std::size_t n, std::uint32_t dim) {
  std::vector<LabeledVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({std::string(to_string(label)) + std::to_string(i),
                   testing::random_sparse(rng, dim, 5), label, false});
  }
  return out;
}

// True when p = x + u (y - x) for one u in [0, 1), solved per component.
bool on_segment(const SparseVector& p, const SparseVector& x, const SparseVector& y) {
  std::set<std::uint32_t> idx;
  for (const auto* v : {&p, &x, &y}) {
    for (const auto& [i, w] : v->entries()) idx.insert(i);
  }
  std::optional<double> u;
  for (auto i : idx) {
    const double d = y.at(i) - x.at(i);
    const double off = p.at(i) - x.at(i);
    if (std::abs(d) < 1e-15) {
      if (std::abs(off) > 1e-12) return false;
      continue;
    }
    const double ui = off / d;
    if (u && std::abs(*u - ui) > 1e-9) return false;
    u = ui;
  }
  return !u || (*u >= -1e-12 && *u < 1.0);
}

bool on_some_segment(const LabeledVector& p, std::span<const LabeledVector> real) {
  for (const auto& x : real) {
    if (x.label != p.label) continue;
    for (const auto& y : real) {
      if (y.label == p.label && on_segment(p.vector, x.vector, y.vector)) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("split reproduces the published per-class validation/test counts") {
  // English and Luganda V/T counts per class over the full labelled totals.
  const std::map<C, std::size_t> totals = {
      {C::Normal, 301}, {C::Mild, 255}, {C::Moderate, 372}, {C::Severe, 215}};
  const std::map<std::string, std::map<C, ClassSplitCounts>> published = {
      {"en", {{C::Normal, {12, 14}}, {C::Mild, {17, 16}}, {C::Moderate, {15, 14}},
              {C::Severe, {13, 14}}}},
      {"lg", {{C::Normal, {12, 11}}, {C::Mild, {12, 12}}, {C::Moderate, {21, 21}},
              {C::Severe, {12, 14}}}},
  };
  const auto pop = population(totals);
  for (const auto& [lang, counts] : published) {
    const SplitSpec spec{counts, 42};
    const auto s = shuffle_split(pop, spec, lang);
    for (const auto& [label, vt] : counts) {
      CHECK(count(s.validation, label) == vt.validation);
      CHECK(count(s.test, label) == vt.test);
      CHECK(count(s.train, label) == totals.at(label) - vt.validation - vt.test);
    }
    const auto again = shuffle_split(pop, spec, lang);
    CHECK(again.train == s.train);
    CHECK(again.validation == s.validation);
    CHECK(again.test == s.test);
  }
  const SplitSpec en{published.at("en"), 42};
  const auto s = shuffle_split(pop, en);
  CHECK(count(s.train, C::Mild) == 222);
  CHECK(count(s.validation, C::Mild) == 17);
  CHECK(count(s.test, C::Mild) == 16);
}

TEST_CASE("infeasible split counts name the class") {
  const auto pop = population({{C::Severe, 5}});
  const SplitSpec spec{{{C::Severe, {3, 3}}}, 1};
  try {
    shuffle_split(pop, spec);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("Severe") != std::string::npos);
  }
}

TEST_CASE("property: splits partition the population and honour the spec") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::map<C, std::size_t> sizes;
    SplitSpec spec;
    spec.seed = rng.below(1000);
    for (C c : kAllCoarse) {
      sizes[c] = rng.below(30);
      if (rng.below(4) == 0) continue;  // class absent from the spec
      const auto v = rng.below(sizes[c] / 2 + 1);
      const auto t = rng.below(sizes[c] - v + 1);
      spec.counts[c] = {v, t};
    }
    const auto pop = population(sizes);
    const auto s = shuffle_split(pop, spec);
    std::multiset<std::string> all, expected;
    for (const auto* part : {&s.train, &s.validation, &s.test}) {
      for (const auto& x : *part) all.insert(x.doc_id);
    }
    for (const auto& x : pop) expected.insert(x.doc_id);
    CHECK(all == expected);
    for (const auto& [c, vt] : spec.counts) {
      CHECK(count(s.validation, c) == vt.validation);
      CHECK(count(s.test, c) == vt.test);
    }
  }
}

TEST_CASE("different seeds give different shuffles") {
  const auto pop = population({{C::Normal, 40}});
  const SplitSpec a{{{C::Normal, {5, 5}}}, 1};
  const SplitSpec b{{{C::Normal, {5, 5}}}, 2};
  CHECK(shuffle_split(pop, a).test != shuffle_split(pop, b).test);
}

TEST_CASE("SMOTE balancing examples") {
  Rng rng(1);
  auto train = random_class(rng, C::Normal, 10, 8);
  const auto b = random_class(rng, C::Mild, 4, 8);
  train.insert(train.end(), b.begin(), b.end());
  const auto out = smote_oversample(train, 2, 99);
  CHECK(class_counts(out) == std::map<C, std::size_t>{{C::Normal, 10}, {C::Mild, 10}});
  CHECK(std::count_if(out.begin(), out.end(), [](const LabeledVector& v) { return v.synthetic; }) ==
        6);
  // Real points come first, unchanged and in order.
  for (std::size_t i = 0; i < train.size(); ++i) {
    CHECK(out[i].vector == train[i].vector);
    CHECK(out[i].doc_id == train[i].doc_id);
  }
}

TEST_CASE("SMOTE midpoint of two neighbours") {
  std::vector<LabeledVector> two = {
      {"a", SparseVector::from_unsorted({{0, 2.0}, {1, 2.0}}), C::Mild, false},
      {"b", SparseVector::from_unsorted({{0, 4.0}, {1, 4.0}}), C::Mild, false}};
  CHECK(interpolate(SparseVector{}, two[0].vector, 0.5) ==
        SparseVector::from_unsorted({{0, 1.0}, {1, 1.0}}));
  std::vector<LabeledVector> train = two;
  for (int i = 0; i < 4; ++i) {
    train.push_back({"n" + std::to_string(i), SparseVector::from_unsorted({{2, 1.0 + i}}),
                     C::Normal, false});
  }
  const auto out = smote_oversample(train, 1, 5);
  for (const auto& p : out) {
    if (!p.synthetic) continue;
    const double x = p.vector.at(0);
    CHECK(x >= 2.0);
    CHECK(x < 4.0);
    CHECK(p.vector.at(1) == doctest::Approx(x));
  }
}

TEST_CASE("SMOTE on a 50/10 imbalance") {
  Rng rng(2);
  auto train = random_class(rng, C::Normal, 50, 20);
  const auto minority = random_class(rng, C::Severe, 10, 20);
  train.insert(train.end(), minority.begin(), minority.end());

  const auto t0 = std::chrono::steady_clock::now();
  const auto out = smote_oversample(train, 5, 123);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 1.0);
  CHECK(class_counts(out) == std::map<C, std::size_t>{{C::Normal, 50}, {C::Severe, 50}});
  std::size_t checked = 0;
  for (const auto& p : out) {
    if (!p.synthetic) continue;
    CHECK(on_some_segment(p, train));
    ++checked;
  }
  CHECK(checked == 40);

  const auto again = smote_oversample(train, 5, 123);
  REQUIRE(again.size() == out.size());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].vector == out[i].vector);
  const auto serial = smote_oversample(train, 5, 123, {}, Execution::Serial);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(serial[i].vector == out[i].vector);
}

TEST_CASE("SMOTE edge cases") {
  Rng rng(3);
  SUBCASE("a singleton class is duplicated with a warning") {
    auto train = random_class(rng, C::Normal, 4, 6);
    train.push_back({"s", SparseVector::from_unsorted({{1, 1.0}}), C::Severe, false});
    std::vector<std::string> warnings;
    const auto out =
        smote_oversample(train, 5, 1, [&](std::string_view w) { warnings.emplace_back(w); });
    CHECK(class_counts(out)[C::Severe] == 4);
    CHECK(warnings.size() == 1);
    for (std::size_t i = train.size(); i < out.size(); ++i) CHECK(out[i].vector == train.back().vector);
  }
  SUBCASE("k above the class size falls back to every other member") {
    auto train = random_class(rng, C::Normal, 12, 6);
    const auto small = random_class(rng, C::Mild, 3, 6);
    train.insert(train.end(), small.begin(), small.end());
    const auto out = smote_oversample(train, 10, 1);
    CHECK(class_counts(out)[C::Mild] == 12);
    for (const auto& p : out) {
      if (p.synthetic) CHECK(on_some_segment(p, train));
    }
  }
  SUBCASE("invalid input") {
    const auto train = random_class(rng, C::Normal, 3, 6);
    CHECK_THROWS_AS(smote_oversample(train, 0, 1), Error);
    CHECK_THROWS_AS(smote_oversample({}, 3, 1), Error);
    // Already balanced: nothing synthetic.
    CHECK(smote_oversample(train, 3, 1).size() == 3);
  }
}

TEST_CASE("property: SMOTE output is balanced and convex for random inputs") {
  Rng rng(30);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<LabeledVector> train;
    for (C c : kAllCoarse) {
      const auto part = random_class(rng, c, 2 + rng.below(12), 10);
      train.insert(train.end(), part.begin(), part.end());
    }
    const auto out = smote_oversample(train, 1 + rng.below(6), rng.below(1u << 30));
    std::size_t max_count = 0;
    for (const auto& [c, n] : class_counts(train)) max_count = std::max(max_count, n);
    for (const auto& [c, n] : class_counts(out)) CHECK(n == max_count);
    for (const auto& p : out) {
      if (p.synthetic) CHECK(on_some_segment(p, train));
    }
  }
}

TEST_CASE("dataset export") {
  testing::TempDir dir;
  std::map<std::string, CleanDocument> docs;
  std::map<std::string, C> labels;
  const auto pop = population({{C::Normal, 8}, {C::Severe, 4}});
  for (const auto& x : pop) {
    docs[x.doc_id] = {x.doc_id, "en", "text of " + x.doc_id, 3};
    labels[x.doc_id] = x.label;
  }
  const auto s = shuffle_split(pop, {{{C::Normal, {0, 2}}, {C::Severe, {0, 1}}}, 3}, "en");
  export_dataset(s, docs, labels, dir / "ds", 5);
  CHECK(read_dataset_file(dir / "ds" / "train.jsonl").size() == 9);
  CHECK(read_dataset_file(dir / "ds" / "validation.jsonl").empty());
  CHECK(std::filesystem::exists(dir / "ds" / "validation.jsonl"));
  const auto test = read_dataset_file(dir / "ds" / "test.jsonl");
  REQUIRE(test.size() == 3);
  CHECK(test[0].doc == docs[test[0].doc.id]);
  CHECK(test[0].label == labels[test[0].doc.id]);
  CHECK(std::filesystem::exists(dir / "ds" / "manifest.json"));

  docs.erase(s.test[0].doc_id);
  try {
    export_dataset(s, docs, labels, dir / "ds2");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(s.test[0].doc_id) != std::string::npos);
  }
  CHECK_FALSE(std::filesystem::exists(dir / "ds2" / "train.jsonl"));
}

TEST_CASE("labelled vectors round-trip exactly") {
  testing::TempDir dir;
  Rng rng(6);
  auto v = random_class(rng, C::Moderate, 20, 50);
  v.push_back({"", testing::random_sparse(rng, 50, 5), C::Mild, true});
  write_vectors(dir / "v.jsonl", v);
  const auto back = read_vectors(dir / "v.jsonl");
  REQUIRE(back.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(back[i].vector == v[i].vector);
    CHECK(back[i].label == v[i].label);
    CHECK(back[i].synthetic == v[i].synthetic);
    CHECK(back[i].doc_id == v[i].doc_id);
  }
}
