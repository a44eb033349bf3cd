#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "raftlab/records.hpp"

namespace raftlab {

/// Append-only, line-delimited log of RunRecords (one JSON object per LF
/// terminated line; see docs/results-log.md).
///
/// Appends take an exclusive advisory lock (flock) on the file, fold in any
/// lines other writers added since the last refresh, reject duplicate
/// (project, config_id, run_index) keys and fsync before returning. A torn
/// final line (no terminating LF) is ignored on load and truncated by the
/// next append.
class ResultsLog {
 public:
  using Key = std::tuple<std::string, std::string, std::int64_t>;

  explicit ResultsLog(std::filesystem::path path);

  const std::filesystem::path& path() const noexcept { return path_; }

  void append(const RunRecord& record);
  /// All-or-nothing: a duplicate anywhere in the batch rejects the batch.
  void append_many(std::span<const RunRecord> records);

  bool contains(std::string_view project, std::string_view config_id,
                std::int64_t run_index) const;
  std::size_t size() const noexcept { return index_.size(); }

  /// Re-reads the file and rebuilds the index.
  void refresh();

  std::vector<RunRecord> load_all() const;
  std::vector<RunRecord> load_all(std::string_view project) const;

 private:
  std::filesystem::path path_;
  std::set<Key> index_;
  std::uint64_t indexed_bytes_ = 0;
};

/// Reads every complete record of a log file in append order.
std::vector<RunRecord> read_results_log(const std::filesystem::path& path);

}  // namespace raftlab
