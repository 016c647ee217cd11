#include "depsev/annotation_store.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "depsev/error.hpp"
#include "json.hpp"

namespace depsev {

using nlohmann::json;

namespace {

std::uint32_t checksum(const std::string& s) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()),
            static_cast<uInt>(s.size())));
}

std::string crc_hex(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

void write_all(int fd, const std::string& data, const std::filesystem::path& p) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::Io, "write to " + p.string() + " failed: " +
                                     std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

void sync_dir(const std::filesystem::path& dir) {
  const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

}  // namespace

AnnotationStore::AnnotationStore(std::filesystem::path dir,
                                 std::unordered_set<std::string> known_docs)
    : AnnotationStore(std::move(dir), std::move(known_docs), Options{}) {}

AnnotationStore::AnnotationStore(std::filesystem::path dir,
                                 std::unordered_set<std::string> known_docs,
                                 Options options)
    : dir_(std::move(dir)),
      log_path_(dir_ / "annotations.log"),
      snapshot_path_(dir_ / "annotations.snapshot"),
      known_(std::move(known_docs)),
      options_(options) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw Error(ErrorKind::Io, "cannot create store directory " + dir_.string());
  }
  load();
  fd_ = ::open(log_path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorKind::Io, "cannot open " + log_path_.string() + ": " +
                                   std::strerror(errno));
  }
  sync_dir(dir_);
}

AnnotationStore::~AnnotationStore() {
  if (fd_ >= 0) ::close(fd_);
}

void AnnotationStore::load() {
  std::uint64_t start = 0;
  {
    std::ifstream snap(snapshot_path_, std::ios::binary);
    if (snap) {
      std::stringstream ss;
      ss << snap.rdbuf();
      auto j = json::parse(ss.str(), nullptr, false);
      std::error_code ec;
      const auto size = std::filesystem::file_size(log_path_, ec);
      // A snapshot that does not fit the log is ignored; the log is the
      // source of truth.
      if (!j.is_discarded() && j.value("version", 0) == 1 && !ec &&
          j.value("log_offset", std::uint64_t{0}) <= size) {
        try {
          for (const auto& r : j.at("records")) {
            apply_line(r.get<std::string>(), 0);
          }
          start = j.at("log_offset").get<std::uint64_t>();
        } catch (const std::exception&) {
          records_.clear();
          history_.clear();
          fused_.clear();
          next_seq_ = 1;
        }
      }
    }
  }

  std::ifstream in(log_path_, std::ios::binary);
  if (!in) {
    log_bytes_ = 0;
    return;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  std::uint64_t off = start;
  while (off < data.size()) {
    const auto nl = data.find('\n', off);
    if (nl == std::string::npos) {
      // Torn append: the writer crashed before fsync, so it was never
      // acknowledged. Drop it.
      if (::truncate(log_path_.c_str(), static_cast<off_t>(off)) != 0) {
        throw Error(ErrorKind::Io, "cannot truncate torn log tail");
      }
      break;
    }
    const std::string line = data.substr(off, nl - off);
    if (line.size() < 10 || line[8] != ' ') {
      throw Error(ErrorKind::Corrupt,
                  "annotation log corrupt at byte offset " + std::to_string(off));
    }
    const std::string payload = line.substr(9);
    if (crc_hex(checksum(payload)) != line.substr(0, 8)) {
      throw Error(ErrorKind::Corrupt, "annotation log checksum mismatch at byte offset " +
                                          std::to_string(off));
    }
    apply_line(payload, off);
    off = nl + 1;
  }
  log_bytes_ = std::min<std::uint64_t>(off, data.size());
}

void AnnotationStore::apply_line(const std::string& payload, std::uint64_t offset) {
  auto j = json::parse(payload, nullptr, false);
  try {
    if (j.is_discarded()) throw std::runtime_error("not JSON");
    const auto seq = j.at("seq").get<std::uint64_t>();
    const auto type = j.at("type").get<std::string>();
    const auto doc = j.at("doc_id").get<std::string>();
    if (type == "annotation") {
      StoredAnnotation s;
      s.sequence = seq;
      s.annotation.doc_id = doc;
      s.annotation.annotator_id = j.at("annotator_id").get<std::string>();
      s.annotation.label = severity_from_string(j.at("label").get<std::string>());
      s.annotation.submitted_at = j.at("submitted_at").get<std::int64_t>();
      s.blind_mode = j.value("blind_mode", true);
      history_[doc].push_back(std::move(s));
      fused_.erase(doc);
    } else if (type == "fused") {
      FusionRecord f;
      f.doc_id = doc;
      f.sequence = seq;
      f.label = severity_from_string(j.at("label").get<std::string>());
      const auto a = j.at("agreement").get<std::string>();
      f.agreement = a == "unanimous"  ? Agreement::Unanimous
                    : a == "majority" ? Agreement::Majority
                                      : Agreement::ExpertFallback;
      fused_[doc] = f;
    } else {
      throw std::runtime_error("unknown record type");
    }
    next_seq_ = std::max(next_seq_, seq + 1);
    records_.push_back(payload);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Corrupt, "annotation log record at byte offset " +
                                        std::to_string(offset) + " invalid: " +
                                        e.what());
  }
}

void AnnotationStore::append_locked(const std::string& payload) {
  const std::string line = crc_hex(checksum(payload)) + " " + payload + "\n";
  write_all(fd_, line, log_path_);
  if (::fdatasync(fd_) != 0) {
    throw Error(ErrorKind::Io, "fsync of " + log_path_.string() + " failed");
  }
  log_bytes_ += line.size();
  apply_line(payload, log_bytes_ - line.size());
  if (options_.snapshot_every > 0 &&
      ++appends_since_snapshot_ >= options_.snapshot_every) {
    snapshot_locked();
  }
}

AnnotationAck AnnotationStore::record(const ExpertAnnotation& a, bool blind_mode) {
  std::unique_lock lock(mu_);
  if (!known_.contains(a.doc_id)) {
    throw Error(ErrorKind::NotFound, "unknown document '" + a.doc_id + "'");
  }
  if (a.annotator_id.empty()) {
    throw Error(ErrorKind::Validation, "annotator_id must not be empty");
  }
  AnnotationAck ack;
  if (auto it = history_.find(a.doc_id); it != history_.end()) {
    for (const auto& s : it->second) {
      if (s.annotation == a) {
        ack.sequence = s.sequence;
        ack.duplicate = true;
        ack.superseded = it->second.size() > 1;
        return ack;
      }
    }
    ack.superseded = !it->second.empty();
  }
  ack.sequence = next_seq_;
  json j = {{"seq", ack.sequence},
            {"type", "annotation"},
            {"doc_id", a.doc_id},
            {"annotator_id", a.annotator_id},
            {"label", to_string(a.label)},
            {"submitted_at", a.submitted_at},
            {"blind_mode", blind_mode}};
  append_locked(j.dump());
  return ack;
}

void AnnotationStore::record_fusion(const std::string& doc_id, SeverityLabel label,
                                    Agreement agreement) {
  std::unique_lock lock(mu_);
  if (!known_.contains(doc_id)) {
    throw Error(ErrorKind::NotFound, "unknown document '" + doc_id + "'");
  }
  json j = {{"seq", next_seq_},
            {"type", "fused"},
            {"doc_id", doc_id},
            {"label", to_string(label)},
            {"agreement", to_string(agreement)}};
  append_locked(j.dump());
}

bool AnnotationStore::knows(const std::string& doc_id) const {
  return known_.contains(doc_id);
}

std::optional<ExpertAnnotation> AnnotationStore::effective(
    const std::string& doc_id) const {
  std::shared_lock lock(mu_);
  auto it = history_.find(doc_id);
  if (it == history_.end() || it->second.empty()) return std::nullopt;
  return it->second.back().annotation;
}

std::vector<StoredAnnotation> AnnotationStore::history(
    const std::string& doc_id) const {
  std::shared_lock lock(mu_);
  auto it = history_.find(doc_id);
  return it == history_.end() ? std::vector<StoredAnnotation>{} : it->second;
}

std::vector<ExpertAnnotation> AnnotationStore::effective_all() const {
  std::shared_lock lock(mu_);
  std::vector<ExpertAnnotation> out;
  for (const auto& [doc, h] : history_) {
    if (!h.empty()) out.push_back(h.back().annotation);
  }
  return out;
}

std::optional<FusionRecord> AnnotationStore::fusion(const std::string& doc_id) const {
  std::shared_lock lock(mu_);
  auto it = fused_.find(doc_id);
  if (it == fused_.end()) return std::nullopt;
  return it->second;
}

std::size_t AnnotationStore::labeled_count() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [doc, h] : history_) n += known_.contains(doc) && !h.empty();
  return n;
}

std::size_t AnnotationStore::fused_count() const {
  std::shared_lock lock(mu_);
  return fused_.size();
}

std::uint64_t AnnotationStore::log_bytes() const {
  std::shared_lock lock(mu_);
  return log_bytes_;
}

void AnnotationStore::snapshot() {
  std::unique_lock lock(mu_);
  snapshot_locked();
}

void AnnotationStore::snapshot_locked() {
  json j = {{"version", 1}, {"log_offset", log_bytes_}, {"records", records_}};
  const auto tmp = snapshot_path_.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorKind::Io, "cannot write snapshot " + tmp);
  try {
    write_all(fd, j.dump(), tmp);
    ::fsync(fd);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  std::filesystem::rename(tmp, snapshot_path_);
  sync_dir(dir_);
  appends_since_snapshot_ = 0;
}

AnnotationAck record_expert_label(const ExpertAnnotation& annotation,
                                  AnnotationStore& store) {
  return store.record(annotation);
}

}  // namespace depsev
