#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <argjudge/annotation.hpp>
#include <argjudge/apr_report.hpp>
#include <argjudge/model_gateway.hpp>
#include <argjudge/prompt_kit.hpp>
#include <argjudge/ranking_run.hpp>
#include <argjudge/store.hpp>
#include <argjudge/tournament.hpp>

#include "config.hpp"

namespace argjudge::pipeline {

/// A stage this command needs has not been completed.
class DependencyError : public Error {
 public:
  DependencyError(const std::string& stage, const std::string& command);
  const std::string& command() const noexcept { return command_; }

 private:
  std::string command_;
};

namespace stage {
inline constexpr const char* pairs = "pairs";
inline constexpr const char* arguments = "arguments";
inline constexpr const char* pointwise_pairs = "pointwise_pairs";
inline constexpr const char* decisions = "decisions";
inline constexpr const char* filtered = "filtered";
inline constexpr const char* rationales = "rationales";
inline constexpr const char* outcomes = "outcomes";
inline constexpr const char* scoreboards = "scoreboards";
inline constexpr const char* reports = "reports";
inline constexpr const char* human_outcomes = "human_outcomes";
inline constexpr const char* human_scoreboards = "human_scoreboards";
inline constexpr const char* prompted = "prompted_decisions";
inline constexpr const char* refined = "refined_rationales";
inline constexpr const char* extended_outcomes = "extended_outcomes";
inline constexpr const char* extended_scoreboards = "extended_scoreboards";
inline constexpr const char* annotation_votes = "annotation_votes";
}  // namespace stage

enum class AnalysisKind { forest, shapley, kmeans, anova, pearson, alpha, tau };

std::optional<AnalysisKind> analysis_kind_from_string(std::string_view text);
std::string_view to_string(AnalysisKind k);

struct AnalyzeOptions {
  std::vector<AnalysisKind> what;
  /// Feature table to use instead of the run's scoreboards.
  std::optional<std::filesystem::path> features;
  /// Vote file (JSON-lines or a GET /export document) for agreement.
  std::optional<std::filesystem::path> votes;
};

struct ServeOptions {
  std::set<TaskKind> kinds{TaskKind::persuasion_pair};
  std::optional<int> port;
  /// Written on shutdown: one export document per task kind.
  std::optional<std::filesystem::path> export_dir;
};

/// One configured run: store, gateway and templates, plus one method per CLI stage.
/// Stages print a short summary to `out` and skip work already recorded unless
/// `force` is set.
class Pipeline {
 public:
  explicit Pipeline(Config config);
  ~Pipeline();

  const Config& config() const { return config_; }
  RunStore& store() { return *store_; }
  Gateway& gateway() { return *gateway_; }
  const PromptKit& kit() const { return *kit_; }

  void ingest(std::ostream& out, bool force = false);
  void pair(std::ostream& out, bool force = false);
  void generate(std::ostream& out, bool force = false);
  void filter(std::ostream& out, bool force = false);
  void label(std::ostream& out, bool force = false);
  void judge(std::ostream& out, bool force = false);
  /// Human outcomes from a persuasion export (GET /export?kind=persuasion_pair).
  void judge_human(std::ostream& out, const std::filesystem::path& export_file);
  void apr(std::ostream& out, std::optional<std::vector<double>> buckets = std::nullopt);
  void analyze(std::ostream& out, const AnalyzeOptions& options);
  void improve_prompted(std::ostream& out, bool force = false);
  void improve_refine(std::ostream& out, bool force = false);
  void improve_tournament(std::ostream& out, bool force = false);
  void report(std::ostream& out);

  /// Board with the run's tasks and any votes recorded by earlier sessions.
  std::unique_ptr<AnnotationBoard> build_board(const std::set<TaskKind>& kinds);
  /// Blocks until `stop_requested` returns true.
  void serve(std::ostream& out, const ServeOptions& options, const std::function<bool()>& stop_requested);

  // Stage readers.
  std::vector<ArgumentPair> all_pairs();
  std::vector<ArgumentPair> filtered_pairs();
  std::vector<ModelDecision> decisions(const char* stage_name = stage::decisions);
  std::vector<Rationale> rationales(const char* stage_name = stage::rationales);
  std::vector<ComparisonOutcome> outcomes(const char* stage_name = stage::outcomes);
  std::vector<Scoreboard> scoreboards(const char* stage_name = stage::scoreboards);
  std::vector<std::string> participants() const;
  /// Dataset name of every pair read so far.
  const std::map<std::string, std::string>& dataset_of() const { return dataset_of_; }

 private:
  void require(const char* stage_name, const char* command);
  bool up_to_date(std::ostream& out, const char* stage_name, bool force);
  std::vector<ArgumentPair> read_pairs(const char* stage_name);
  void refresh_gold(std::span<const ArgumentPair> pairs);
  void append_pair(const char* stage_name, const ArgumentPair& p, const std::string& dataset);
  std::map<std::string, APRReport> reports_by_dataset(std::span<const Scoreboard> boards,
                                                      std::span<const std::string> excluded,
                                                      std::span<const ArgumentPair> pairs,
                                                      std::span<const Rationale> rationales,
                                                      std::span<const double> edges);

  Config config_;
  std::unique_ptr<RunStore> store_;
  std::unique_ptr<Gateway> gateway_;
  std::unique_ptr<PromptKit> kit_;
  std::map<std::string, std::string> dataset_of_;
};

/// Parses "0,0.25,0.5,1.0".
std::vector<double> parse_bucket_edges(std::string_view text);

}  // namespace argjudge::pipeline
