#include "raftlab/results_log.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "raftlab/error.hpp"

namespace raftlab {

namespace {

struct ScanResult {
  std::vector<RunRecord> records;
  std::uint64_t complete_bytes = 0;  // offset just past the last LF
  bool torn_tail = false;
};

ScanResult scan(std::string_view bytes, std::uint64_t base_offset, const std::string& where) {
  ScanResult out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < bytes.size()) {
    const auto eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) {
      out.torn_tail = true;
      break;
    }
    ++line_no;
    const std::string_view line = bytes.substr(pos, eol - pos);
    if (!line.empty()) {
      try {
        out.records.push_back(deserialize_record(line));
      } catch (const Error& e) {
        throw ParseError(where + ": corrupt record at byte offset " +
                         std::to_string(base_offset + pos) + ": " + e.what());
      }
    }
    pos = eol + 1;
    out.complete_bytes = pos;
  }
  return out;
}

std::string read_from(int fd, std::uint64_t offset, const std::string& where) {
  std::string data;
  char buf[1 << 16];
  for (;;) {
    const ssize_t n = ::pread(fd, buf, sizeof buf, static_cast<off_t>(offset + data.size()));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(where + ": read failed: " + std::strerror(errno));
    }
    if (n == 0) break;
    data.append(buf, static_cast<std::size_t>(n));
  }
  return data;
}

void write_all(int fd, std::string_view data, std::uint64_t offset, const std::string& where) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::pwrite(fd, data.data() + done, data.size() - done,
                               static_cast<off_t>(offset + done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(where + ": write failed: " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

class LockedFile {
 public:
  LockedFile(const std::filesystem::path& path, bool create) : where_(path.string()) {
    fd_ = ::open(path.c_str(), create ? (O_RDWR | O_CREAT | O_CLOEXEC) : (O_RDONLY | O_CLOEXEC),
                 0644);
    if (fd_ < 0) throw IoError(where_ + ": cannot open: " + std::strerror(errno));
    while (::flock(fd_, create ? LOCK_EX : LOCK_SH) != 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd_);
      throw IoError(where_ + ": cannot lock: " + std::strerror(err));
    }
  }
  ~LockedFile() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  LockedFile(const LockedFile&) = delete;
  LockedFile& operator=(const LockedFile&) = delete;

  int fd() const noexcept { return fd_; }

 private:
  std::string where_;
  int fd_ = -1;
};

ResultsLog::Key key_of(const RunRecord& r) { return {r.project_name, r.config_id, r.run_index}; }

std::string describe(const ResultsLog::Key& k) {
  return "(" + std::get<0>(k) + ", " + std::get<1>(k) + ", " + std::to_string(std::get<2>(k)) +
         ")";
}

}  // namespace

ResultsLog::ResultsLog(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) refresh();
}

void ResultsLog::refresh() {
  index_.clear();
  indexed_bytes_ = 0;
  if (!std::filesystem::exists(path_)) return;
  LockedFile file(path_, false);
  const std::string data = read_from(file.fd(), 0, path_.string());
  auto result = scan(data, 0, path_.string());
  if (result.torn_tail) warn(path_.string() + ": ignoring torn trailing line");
  for (const auto& r : result.records) index_.insert(key_of(r));
  indexed_bytes_ = result.complete_bytes;
}

void ResultsLog::append(const RunRecord& record) { append_many(std::span(&record, 1)); }

void ResultsLog::append_many(std::span<const RunRecord> records) {
  if (records.empty()) return;
  std::string payload;
  std::set<Key> batch;
  for (const auto& r : records) {
    validate_record(r);
    if (!batch.insert(key_of(r)).second)
      throw DuplicateRecordError("batch repeats " + describe(key_of(r)));
    payload += serialize_record(r);
    payload += '\n';
  }

  LockedFile file(path_, true);
  // Fold in whatever other writers appended since we last looked.
  const std::string fresh = read_from(file.fd(), indexed_bytes_, path_.string());
  auto result = scan(fresh, indexed_bytes_, path_.string());
  for (const auto& r : result.records) index_.insert(key_of(r));
  indexed_bytes_ += result.complete_bytes;
  if (result.torn_tail) {
    warn(path_.string() + ": truncating torn trailing line before append");
    if (::ftruncate(file.fd(), static_cast<off_t>(indexed_bytes_)) != 0)
      throw IoError(path_.string() + ": cannot truncate torn line: " + std::strerror(errno));
  }

  for (const auto& k : batch)
    if (index_.count(k)) throw DuplicateRecordError("results log already holds " + describe(k));

  write_all(file.fd(), payload, indexed_bytes_, path_.string());
  if (::fsync(file.fd()) != 0)
    throw IoError(path_.string() + ": fsync failed: " + std::strerror(errno));
  indexed_bytes_ += payload.size();
  index_.merge(batch);
}

bool ResultsLog::contains(std::string_view project, std::string_view config_id,
                          std::int64_t run_index) const {
  return index_.count(Key{std::string(project), std::string(config_id), run_index}) != 0;
}

std::vector<RunRecord> ResultsLog::load_all() const { return read_results_log(path_); }

std::vector<RunRecord> ResultsLog::load_all(std::string_view project) const {
  auto all = read_results_log(path_);
  std::erase_if(all, [&](const RunRecord& r) { return r.project_name != project; });
  return all;
}

std::vector<RunRecord> read_results_log(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("results log '" + path.string() + "' not found");
  LockedFile file(path, false);
  const std::string data = read_from(file.fd(), 0, path.string());
  auto result = scan(data, 0, path.string());
  if (result.torn_tail) warn(path.string() + ": ignoring torn trailing line");
  return std::move(result.records);
}

}  // namespace raftlab
