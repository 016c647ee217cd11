#pragma once

#include <span>
#include <vector>

#include "depsev/models.hpp"

namespace depsev::detail {

struct PreparedData {
  std::vector<CoarseLabel> classes;
  std::vector<int> y;  // index into classes
};

/// Validates shapes and maps labels onto the sorted class list.
PreparedData prepare(const TrainingData& data);

/// Index of the maximum; ties resolve to the last (most severe) entry.
std::size_t argmax_last(std::span<const double> v);
/// Index of the maximum; ties resolve to the first entry.
std::size_t argmax_first(std::span<const double> v);

}  // namespace depsev::detail
