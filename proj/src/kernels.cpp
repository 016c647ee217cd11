#include "depsev/kernels.hpp"

#include <algorithm>
#include <utility>

namespace depsev {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace kernels {

namespace {

using Candidate = std::pair<double, std::size_t>;

std::vector<std::size_t> knn_row_reference(std::span<const SparseVector> points,
                                           std::size_t row, std::size_t k) {
  std::vector<Candidate> all;
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (j != row) all.emplace_back(distance(points[row], points[j]), j);
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Candidate& a, const Candidate& b) { return a.first < b.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

std::vector<std::size_t> knn_row_fast(std::span<const SparseVector> points,
                                      std::size_t row, std::size_t k) {
  std::vector<Candidate> all;
  all.reserve(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (j != row) all.emplace_back(distance(points[row], points[j]), j);
  }
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take),
                    all.end());
  std::vector<std::size_t> out(take);
  for (std::size_t i = 0; i < take; ++i) out[i] = all[i].second;
  return out;
}

}  // namespace

std::vector<std::vector<std::size_t>> knn_within(
    std::span<const SparseVector> points, std::size_t k, Execution exec) {
  std::vector<std::vector<std::size_t>> out(points.size());
  if (exec == Execution::Serial) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      out[i] = knn_row_reference(points, i, k);
    }
    return out;
  }
  for_each_index(points.size(), exec,
                 [&](std::size_t i) { out[i] = knn_row_fast(points, i, k); });
  return out;
}

std::vector<SparseVector> transform_batch(const TfidfModel& model,
                                          std::span<const CleanDocument> docs,
                                          Execution exec) {
  std::vector<SparseVector> out(docs.size());
  for_each_index(docs.size(), exec,
                 [&](std::size_t i) { out[i] = model.transform(docs[i]); });
  return out;
}

std::vector<BdiScore> score_batch(const BdiLexicon& lexicon,
                                  std::span<const CleanDocument> docs,
                                  Execution exec) {
  std::vector<BdiScore> out(docs.size());
  for_each_index(docs.size(), exec,
                 [&](std::size_t i) { out[i] = lexicon.score(docs[i]); });
  return out;
}

}  // namespace kernels
}  // namespace depsev
