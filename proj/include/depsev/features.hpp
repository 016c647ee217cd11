#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "depsev/corpus.hpp"

namespace depsev {

// Sorted (index, weight) pairs with no stored zeros.
class SparseVector {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  SparseVector() = default;
  /// Sorts, merges duplicate indices by summing, and drops zeros.
  static SparseVector from_unsorted(std::vector<Entry> entries);
  /// Takes entries already strictly increasing and zero-free; throws otherwise.
  static SparseVector from_sorted(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Weight at `index` (0 when absent); binary search.
  double at(std::uint32_t index) const;
  double norm() const;
  double dot(std::span<const double> dense) const;
  SparseVector scaled(double factor) const;

  bool operator==(const SparseVector&) const = default;

 private:
  std::vector<Entry> entries_;
};

/// Euclidean distance over the union of indices.
double distance(const SparseVector& a, const SparseVector& b);

/// a + u * (b - a), dropping components that cancel to zero.
SparseVector interpolate(const SparseVector& a, const SparseVector& b,
                         double u);

// Smoothed-idf TF-IDF: idf(t) = ln((1 + N) / (1 + df(t))) + 1, raw counts,
// L2-normalized rows.
class TfidfModel {
 public:
  TfidfModel() = default;

  static TfidfModel fit(std::span<const CleanDocument> docs);

  SparseVector transform(const CleanDocument& doc) const;
  SparseVector transform_text(std::string_view text) const;

  std::size_t vocabulary_size() const { return terms_.size(); }
  std::size_t document_count() const { return document_count_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  /// Column of `term`, or -1 when out of vocabulary.
  std::int64_t index_of(std::string_view term) const;
  double idf_of(std::string_view term) const;

  /// Text format: document_count on the first line, then one
  /// "term<TAB>index<TAB>idf" line per term.
  void save(const std::filesystem::path& path) const;
  static TfidfModel load(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, std::uint32_t> vocabulary_;
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::size_t document_count_ = 0;
};

}  // namespace depsev
