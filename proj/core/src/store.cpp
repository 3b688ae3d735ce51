#include "argjudge/store.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "argjudge/common.hpp"

namespace argjudge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool valid_name(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return s.find_first_of("/\\") == std::string::npos;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& p, const std::string& content) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, p);
}

}  // namespace

RunStore::RunStore(const fs::path& root, const std::string& run_id) : run_id_(run_id), dir_(root / run_id) {
  if (!valid_name(run_id)) throw StoreError("invalid run id '" + run_id + "'");
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw StoreError(fmt::format("cannot create run directory {}: {}", dir_.string(), ec.message()));
}

fs::path RunStore::stage_path(const std::string& stage) const {
  if (!valid_name(stage)) throw StoreError("invalid stage name '" + stage + "'");
  return dir_ / (stage + ".jsonl");
}

std::vector<std::string> RunStore::recover(const std::string& stage) {
  const fs::path path = stage_path(stage);
  if (!fs::exists(path)) return {};
  const std::string content = read_all(path);

  std::vector<std::string> lines;
  std::size_t pos = 0;
  std::size_t good_end = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string line = content.substr(pos, (terminated ? nl : content.size()) - pos);
    const std::size_t next = terminated ? nl + 1 : content.size();
    const bool last = next >= content.size();
    auto parsed = json::parse(line, nullptr, false);
    const bool ok = terminated && !parsed.is_discarded() && parsed.is_object();
    if (!ok) {
      if (!last) throw StoreError(fmt::format("{}: corrupt record at byte {}", path.string(), pos));
      spdlog::warn("{}: dropping damaged final record ({} bytes)", path.string(), content.size() - pos);
      fs::resize_file(path, good_end);
      break;
    }
    lines.push_back(line);
    good_end = next;
    pos = next;
  }
  return lines;
}

std::uint64_t RunStore::append_record(const std::string& stage, const json& record) {
  if (!record.is_object() || !record.contains("id") || !record["id"].is_string())
    throw StoreError("stage " + stage + ": record needs a string \"id\"");
  const std::string id = record["id"].get<std::string>();

  std::lock_guard lock(mu_);
  auto it = ids_.find(stage);
  if (it == ids_.end()) {
    std::set<std::string> known;
    for (const auto& line : recover(stage)) known.insert(json::parse(line).value("id", ""));
    it = ids_.emplace(stage, std::move(known)).first;
  }
  if (it->second.count(id)) throw StoreError(fmt::format("stage {}: duplicate record id {}", stage, id));

  const fs::path path = stage_path(stage);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw StoreError("cannot open " + path.string());
  out.seekp(0, std::ios::end);
  const auto offset = static_cast<std::uint64_t>(out.tellp());
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw StoreError("write failed on " + path.string());
  it->second.insert(id);
  return offset;
}

std::vector<std::string> RunStore::load_stage_lines(const std::string& stage) {
  std::lock_guard lock(mu_);
  return recover(stage);
}

std::vector<json> RunStore::load_stage(const std::string& stage) {
  std::vector<json> out;
  for (const auto& line : load_stage_lines(stage)) out.push_back(json::parse(line));
  return out;
}

bool RunStore::has_stage(const std::string& stage) const { return fs::exists(stage_path(stage)); }

void RunStore::reset_stage(const std::string& stage) {
  std::lock_guard lock(mu_);
  fs::remove(stage_path(stage));
  ids_.erase(stage);
  Manifest m = read_manifest();
  m.stages.erase(stage);
  write_manifest(m);
}

void RunStore::mark_complete(const std::string& stage) {
  std::lock_guard lock(mu_);
  Manifest m = read_manifest();
  m.stages[stage].complete = true;
  m.stages[stage].records = recover(stage).size();
  write_manifest(m);
}

Manifest RunStore::manifest() {
  std::lock_guard lock(mu_);
  Manifest m = read_manifest();
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() != ".jsonl") continue;
    m.stages[entry.path().stem().string()];
  }
  for (auto& [stage, summary] : m.stages) summary.records = recover(stage).size();
  return m;
}

Manifest RunStore::read_manifest() const {
  Manifest m;
  m.run_id = run_id_;
  const fs::path path = dir_ / "manifest.json";
  if (!fs::exists(path)) return m;
  auto j = json::parse(read_all(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    spdlog::warn("{} is unreadable; rebuilding from stage files", path.string());
    return m;
  }
  if (j.contains("stages") && j["stages"].is_object())
    for (auto it = j["stages"].begin(); it != j["stages"].end(); ++it)
      m.stages[it.key()] = StageSummary{it.value().value("records", std::size_t{0}), it.value().value("complete", false)};
  return m;
}

void RunStore::write_manifest(const Manifest& m) {
  json stages = json::object();
  for (const auto& [stage, s] : m.stages) stages[stage] = {{"records", s.records}, {"complete", s.complete}};
  json j{{"run_id", run_id_}, {"updated", utc_timestamp()}, {"stages", std::move(stages)}};
  write_atomic(dir_ / "manifest.json", j.dump(2) + "\n");
}

void RunStore::write_config_snapshot(const json& config) {
  std::lock_guard lock(mu_);
  write_atomic(dir_ / "config.json", config.dump(2) + "\n");
}

std::optional<json> RunStore::config_snapshot() const {
  const fs::path path = dir_ / "config.json";
  if (!fs::exists(path)) return std::nullopt;
  auto j = json::parse(read_all(path), nullptr, false);
  if (j.is_discarded()) throw StoreError(path.string() + " is not valid JSON");
  return j;
}

}  // namespace argjudge
