#include "depsev/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "depsev/error.hpp"
#include "depsev/text.hpp"
#include "json.hpp"

namespace depsev {

SparseVector SparseVector::from_unsorted(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  SparseVector v;
  for (const auto& e : entries) {
    if (!v.entries_.empty() && v.entries_.back().first == e.first) {
      v.entries_.back().second += e.second;
    } else {
      v.entries_.push_back(e);
    }
  }
  std::erase_if(v.entries_, [](const Entry& e) { return e.second == 0.0; });
  return v;
}

SparseVector SparseVector::from_sorted(std::vector<Entry> entries) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].second == 0.0 || !std::isfinite(entries[i].second)) {
      throw Error(ErrorKind::Validation, "sparse vector: zero or non-finite weight");
    }
    if (i && entries[i - 1].first >= entries[i].first) {
      throw Error(ErrorKind::Validation,
                  "sparse vector: indices not strictly increasing");
    }
  }
  SparseVector v;
  v.entries_ = std::move(entries);
  return v;
}

double SparseVector::at(std::uint32_t index) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), index,
      [](const Entry& e, std::uint32_t i) { return e.first < i; });
  return (it != entries_.end() && it->first == index) ? it->second : 0.0;
}

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& [i, w] : entries_) s += w * w;
  return std::sqrt(s);
}

double SparseVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (const auto& [i, w] : entries_) {
    if (i < dense.size()) s += w * dense[i];
  }
  return s;
}

SparseVector SparseVector::scaled(double factor) const {
  if (factor == 0.0) return {};
  SparseVector v = *this;
  for (auto& e : v.entries_) e.second *= factor;
  return v;
}

double distance(const SparseVector& a, const SparseVector& b) {
  const auto& x = a.entries();
  const auto& y = b.entries();
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() || j < y.size()) {
    double d;
    if (j == y.size() || (i < x.size() && x[i].first < y[j].first)) {
      d = x[i++].second;
    } else if (i == x.size() || y[j].first < x[i].first) {
      d = y[j++].second;
    } else {
      d = x[i++].second - y[j++].second;
    }
    s += d * d;
  }
  return std::sqrt(s);
}

SparseVector interpolate(const SparseVector& a, const SparseVector& b,
                         double u) {
  const auto& x = a.entries();
  const auto& y = b.entries();
  std::vector<SparseVector::Entry> out;
  out.reserve(x.size() + y.size());
  std::size_t i = 0, j = 0;
  while (i < x.size() || j < y.size()) {
    std::uint32_t idx;
    double xa = 0.0, yb = 0.0;
    if (j == y.size() || (i < x.size() && x[i].first < y[j].first)) {
      idx = x[i].first;
      xa = x[i++].second;
    } else if (i == x.size() || y[j].first < x[i].first) {
      idx = y[j].first;
      yb = y[j++].second;
    } else {
      idx = x[i].first;
      xa = x[i++].second;
      yb = y[j++].second;
    }
    const double w = xa + u * (yb - xa);
    if (w != 0.0) out.emplace_back(idx, w);
  }
  return SparseVector::from_sorted(std::move(out));
}

TfidfModel TfidfModel::fit(std::span<const CleanDocument> docs) {
  TfidfModel m;
  bool any = false;
  std::vector<std::size_t> df;
  std::vector<std::size_t> last_doc;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (auto tok : text::split_whitespace(docs[d].text)) {
      any = true;
      auto [it, inserted] = m.vocabulary_.try_emplace(
          std::string(tok), static_cast<std::uint32_t>(m.terms_.size()));
      if (inserted) {
        m.terms_.emplace_back(tok);
        df.push_back(0);
        last_doc.push_back(static_cast<std::size_t>(-1));
      }
      const auto col = it->second;
      if (last_doc[col] != d) {
        last_doc[col] = d;
        ++df[col];
      }
    }
  }
  if (!any) {
    throw Error(ErrorKind::Validation,
                "cannot fit TF-IDF: corpus has no non-empty document");
  }
  m.document_count_ = docs.size();
  const double n = static_cast<double>(docs.size());
  m.idf_.resize(df.size());
  for (std::size_t t = 0; t < df.size(); ++t) {
    m.idf_[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  }
  return m;
}

SparseVector TfidfModel::transform(const CleanDocument& doc) const {
  return transform_text(doc.text);
}

SparseVector TfidfModel::transform_text(std::string_view content) const {
  std::vector<SparseVector::Entry> raw;
  for (auto tok : text::split_whitespace(content)) {
    auto it = vocabulary_.find(std::string(tok));
    if (it != vocabulary_.end()) raw.emplace_back(it->second, 1.0);
  }
  SparseVector counts = SparseVector::from_unsorted(std::move(raw));
  std::vector<SparseVector::Entry> weighted;
  weighted.reserve(counts.nnz());
  double sq = 0.0;
  for (const auto& [i, c] : counts.entries()) {
    const double w = c * idf_[i];
    weighted.emplace_back(i, w);
    sq += w * w;
  }
  if (weighted.empty()) return {};
  const double norm = std::sqrt(sq);
  for (auto& e : weighted) e.second /= norm;
  return SparseVector::from_sorted(std::move(weighted));
}

std::int64_t TfidfModel::index_of(std::string_view term) const {
  auto it = vocabulary_.find(std::string(term));
  return it == vocabulary_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

double TfidfModel::idf_of(std::string_view term) const {
  const auto i = index_of(term);
  if (i < 0) {
    throw Error(ErrorKind::NotFound,
                "term '" + std::string(term) + "' not in vocabulary");
  }
  return idf_[static_cast<std::size_t>(i)];
}

void TfidfModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << document_count_ << '\n';
  char buf[64];
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.17g", idf_[t]);
    out << terms_[t] << '\t' << t << '\t' << buf << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

TfidfModel TfidfModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  TfidfModel m;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::Corrupt, "empty TF-IDF model file");
  }
  try {
    m.document_count_ = std::stoull(line);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Corrupt, "bad document count in TF-IDF model");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw Error(ErrorKind::Corrupt,
                  "TF-IDF model line " + std::to_string(line_no) + " malformed");
    }
    std::size_t index = 0;
    double idf = 0.0;
    try {
      index = std::stoull(line.substr(t1 + 1, t2 - t1 - 1));
      idf = std::stod(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Corrupt,
                  "TF-IDF model line " + std::to_string(line_no) + " malformed");
    }
    if (index != m.terms_.size()) {
      throw Error(ErrorKind::Corrupt, "TF-IDF model indices have gaps");
    }
    m.terms_.push_back(line.substr(0, t1));
    m.vocabulary_.emplace(m.terms_.back(), static_cast<std::uint32_t>(index));
    m.idf_.push_back(idf);
  }
  return m;
}

}  // namespace depsev
