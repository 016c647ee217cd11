#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "depsev/features.hpp"
#include "depsev/rng.hpp"
#include "depsev/severity.hpp"

namespace testing {

// Removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("depsev-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path source_dir() { return DEPSEV_SOURCE_DIR; }

// Random sparse vector with up to `max_nnz` entries below `dim`, weights in (0, 1].
inline depsev::SparseVector random_sparse(depsev::Rng& rng, std::uint32_t dim,
                                          std::size_t max_nnz) {
  std::vector<depsev::SparseVector::Entry> e;
  const auto n = rng.below(max_nnz + 1);
  for (std::size_t i = 0; i < n; ++i) {
    e.push_back({static_cast<std::uint32_t>(rng.below(dim)), 1.0 - rng.unit()});
  }
  // from_unsorted sums duplicate indices.
  return depsev::SparseVector::from_unsorted(std::move(e));
}

inline std::string random_word(depsev::Rng& rng, std::size_t alphabet = 6) {
  std::string w;
  const auto len = 1 + rng.below(3);
  for (std::size_t i = 0; i < len; ++i) w += static_cast<char>('a' + rng.below(alphabet));
  return w;
}

inline depsev::SeverityLabel random_severity(depsev::Rng& rng) {
  return depsev::kAllSeverities[rng.below(depsev::kAllSeverities.size())];
}

}  // namespace testing
