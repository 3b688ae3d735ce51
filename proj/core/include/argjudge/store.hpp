#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace argjudge {

struct StageSummary {
  std::size_t records = 0;
  bool complete = false;
};

struct Manifest {
  std::string run_id;
  std::map<std::string, StageSummary> stages;
};

/// Append-only JSON-lines persistence for one run: <root>/<run_id>/<stage>.jsonl,
/// manifest.json and config.json. Every record must carry a string "id" that is
/// unique within its stage. One writer per stage; readers may run concurrently.
class RunStore {
 public:
  RunStore(const std::filesystem::path& root, const std::string& run_id);

  const std::string& run_id() const { return run_id_; }
  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path stage_path(const std::string& stage) const;

  /// Appends one record and returns its byte offset in the stage file. Throws
  /// StoreError on a missing or duplicate id.
  std::uint64_t append_record(const std::string& stage, const nlohmann::json& record);

  /// Records of a stage in append order; empty if the stage was never written. A
  /// damaged final line (interrupted write) is dropped from the file with a warning;
  /// damage anywhere else raises StoreError.
  std::vector<nlohmann::json> load_stage(const std::string& stage);
  /// The stored lines, exactly as written.
  std::vector<std::string> load_stage_lines(const std::string& stage);

  bool has_stage(const std::string& stage) const;
  /// Removes a stage's records and completion mark.
  void reset_stage(const std::string& stage);
  void mark_complete(const std::string& stage);

  /// Record counts from the stage files plus completion marks.
  Manifest manifest();

  void write_config_snapshot(const nlohmann::json& config);
  std::optional<nlohmann::json> config_snapshot() const;

 private:
  std::vector<std::string> recover(const std::string& stage);
  void write_manifest(const Manifest& m);
  Manifest read_manifest() const;

  std::string run_id_;
  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, std::set<std::string>> ids_;
};

}  // namespace argjudge
