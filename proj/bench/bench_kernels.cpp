// Serial reference vs OpenMP timings for the parallel kernels and trainers.
// Each row also checks that both paths produced identical output.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "depsev/dataset.hpp"
#include "depsev/kernels.hpp"
#include "depsev/models.hpp"
#include "depsev/rng.hpp"

using namespace depsev;

namespace {

std::vector<CleanDocument> synthetic_docs(std::size_t n, std::size_t vocab, Rng& rng) {
  std::vector<CleanDocument> docs;
  docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    const std::size_t len = 20 + rng.below(80);
    for (std::size_t w = 0; w < len; ++w) {
      // Squared draw skews toward low ids, roughly Zipf-like.
      const double u = rng.unit();
      text += "w" + std::to_string(static_cast<std::size_t>(u * u * static_cast<double>(vocab)));
      text += ' ';
    }
    docs.push_back({"d" + std::to_string(i), "en", text, len});
  }
  return docs;
}

// Best wall time over `reps` runs, in milliseconds.
double best_ms(int reps, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

template <typename T>
void row(const char* name, int reps, const std::function<T(Execution)>& run) {
  T serial{}, parallel{};
  const double s = best_ms(reps, [&] { serial = run(Execution::Serial); });
  const double p = best_ms(reps, [&] { parallel = run(Execution::Parallel); });
  std::printf("%-22s %10.2f %10.2f %8.2fx  %s\n", name, s, p, s / p,
              serial == parallel ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depsev kernel benchmark"};
  std::size_t n_docs = 2000, vocab = 5000, knn_points = 1500;
  int reps = 3;
  std::uint64_t seed = 1;
  app.add_option("--docs", n_docs, "Synthetic documents");
  app.add_option("--vocab", vocab, "Vocabulary size");
  app.add_option("--knn-points", knn_points, "Points for the kNN kernel");
  app.add_option("--reps", reps, "Repetitions (best time is reported)");
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  Rng rng(seed);
  const auto docs = synthetic_docs(n_docs, vocab, rng);
  const auto tfidf = TfidfModel::fit(docs);
  const auto vectors = kernels::transform_batch(tfidf, docs);

  std::vector<LexiconEntry> entries;
  for (int item = 1; item <= 21; ++item) {
    for (int k = 0; k < 8; ++k) {
      entries.push_back({item, "w" + std::to_string((item * 37 + k * 11) % vocab), k % 4});
    }
  }
  const BdiLexicon lexicon("en", entries);

  std::vector<CoarseLabel> labels(vectors.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = kAllCoarse[rng.below(4)];
  const std::size_t train_n = std::min<std::size_t>(vectors.size(), 800);
  const TrainingData data{std::span(vectors).first(train_n), std::span(labels).first(train_n),
                          tfidf.vocabulary_size()};

  std::vector<LabeledVector> imbalanced;
  for (std::size_t i = 0; i < std::min<std::size_t>(vectors.size(), 1200); ++i) {
    imbalanced.push_back({docs[i].id, vectors[i], i % 6 == 0 ? CoarseLabel::Severe : CoarseLabel::Normal,
                          false});
  }

  std::printf("threads=%d docs=%zu vocab=%zu (terms seen %zu)\n", max_threads(), docs.size(),
              vocab, tfidf.vocabulary_size());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  row<std::vector<SparseVector>>("transform_batch", reps, [&](Execution e) {
    return kernels::transform_batch(tfidf, docs, e);
  });
  row<std::vector<int>>("score_batch", reps, [&](Execution e) {
    std::vector<int> totals;
    for (const auto& s : kernels::score_batch(lexicon, docs, e)) totals.push_back(s.total);
    return totals;
  });
  const std::span<const SparseVector> knn_set(vectors.data(), std::min(knn_points, vectors.size()));
  row<std::vector<std::vector<std::size_t>>>("knn_within k=5", reps, [&](Execution e) {
    return kernels::knn_within(knn_set, 5, e);
  });
  row<std::vector<SparseVector>>("smote_oversample", reps, [&](Execution e) {
    std::vector<SparseVector> out;
    for (auto& v : smote_oversample(imbalanced, 5, seed, {}, e)) out.push_back(std::move(v.vector));
    return out;
  });
  auto predictions = [&](ModelKind kind, std::map<std::string, double> hp) {
    return [&, kind, hp](Execution e) {
      const auto m = train_model(data, ModelSpec(kind, hp, seed), e);
      return m.predict_batch(vectors, Execution::Serial);
    };
  };
  row<std::vector<CoarseLabel>>("train random_forest", reps,
                                predictions(ModelKind::RandomForest, {{"n_trees", 64}}));
  row<std::vector<CoarseLabel>>("train linear_svm", reps,
                                predictions(ModelKind::LinearSvm, {{"epochs", 10}}));
  row<std::vector<CoarseLabel>>("train gradient_boost", reps,
                                predictions(ModelKind::GradientBoosting, {{"stages", 20}}));
  return 0;
}
