#pragma once

#include <span>
#include <vector>

#include "depsev/bdi_lexicon.hpp"
#include "depsev/features.hpp"
#include "depsev/parallel.hpp"

namespace depsev::kernels {

/// For each point, the indices of its k nearest other points by Euclidean
/// distance, nearest first; equal distances order by index.
std::vector<std::vector<std::size_t>> knn_within(
    std::span<const SparseVector> points, std::size_t k,
    Execution exec = Execution::Parallel);

std::vector<SparseVector> transform_batch(const TfidfModel& model,
                                          std::span<const CleanDocument> docs,
                                          Execution exec = Execution::Parallel);

std::vector<BdiScore> score_batch(const BdiLexicon& lexicon,
                                  std::span<const CleanDocument> docs,
                                  Execution exec = Execution::Parallel);

}  // namespace depsev::kernels
