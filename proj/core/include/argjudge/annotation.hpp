#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "argjudge/corpus.hpp"
#include "argjudge/rationale_quality.hpp"
#include "argjudge/tournament.hpp"

namespace argjudge {

enum class TaskKind { basic_form, content, persuasion_pair, gold_check };

std::string_view to_string(TaskKind k);
std::optional<TaskKind> task_kind_from_string(std::string_view text);

/// Why the board refused a request.
enum class Rejection { unknown_rater, bad_token, unknown_task, closed, duplicate, empty_explanation, bad_answer };

std::string_view to_string(Rejection r);

class AnnotationError : public Error {
 public:
  AnnotationError(Rejection reason, const std::string& what) : Error(what), reason_(reason) {}
  Rejection reason() const noexcept { return reason_; }

 private:
  Rejection reason_;
};

struct AnnotationTask {
  std::string task_id;
  TaskKind kind = TaskKind::basic_form;
  /// What the rater sees. Persuasion payloads hold rationale_1/rationale_2 in
  /// display order and never the underlying rationale ids.
  nlohmann::json payload;
  int required_raters = 3;

  // Service-side bookkeeping, never sent to raters.
  std::string item_id;
  std::optional<Comparison> comparison;
  /// True when rationale_b is displayed first.
  bool swapped = false;
  std::optional<nlohmann::json> gold_answer;
};

/// Vote as submitted, in display terms.
struct RecordedVote {
  std::string task_id;
  std::string rater_id;
  nlohmann::json answer;
  std::string explanation;
  std::string guideline_version;
  std::string submitted_at;
};

struct BoardOptions {
  int required_raters = 3;
  std::chrono::seconds lease{600};
  std::uint64_t display_seed = 0;
  std::string guideline_version = "v1";
  /// Gold-check qualification: raters who answered at least `gold_min` checks with
  /// accuracy below `gold_threshold` are flagged.
  std::size_t gold_min = 10;
  double gold_threshold = 0.8;
  bool exclude_flagged = true;
};

struct PersuasionVoteSet {
  std::string task_id;
  Comparison comparison;
  std::vector<PersuasionVote> votes;
};

struct RaterProgress {
  std::size_t votes = 0;
  std::size_t gold_answered = 0;
  std::size_t gold_correct = 0;
  bool flagged = false;
};

struct BoardProgress {
  std::size_t tasks = 0;
  std::size_t closed = 0;
  std::size_t votes = 0;
  std::map<TaskKind, std::pair<std::size_t, std::size_t>> by_kind;  // (closed, total)
  std::map<std::string, RaterProgress> raters;
};

/// Thread-safe task queue for human raters. Answers per kind:
///   basic_form / gold_check: {"valid": "yes"|"no", "reason": "invalid"|"repetitive"}
///                            (reason required with "no")
///   content:                 {"contrast": "yes"|"no", "novelty": "yes"|"no"}
///   persuasion_pair:         {"choice": "1"|"2"|"equal"} plus a non-empty explanation
class AnnotationBoard {
 public:
  explicit AnnotationBoard(BoardOptions options = {});

  void register_rater(const std::string& rater_id, const std::string& token);
  /// Throws AnnotationError(unknown_rater / bad_token).
  void authenticate(const std::string& rater_id, const std::string& token) const;

  std::string add_basic_form_task(const Rationale& r, const ArgumentPair& pair);
  std::string add_content_task(const Rationale& r, const ArgumentPair& pair);
  std::string add_persuasion_task(const Comparison& c, const ArgumentPair& pair, const Rationale& a,
                                  const Rationale& b);
  /// A basic-form question with a known answer, shown to every rater once before
  /// regular work.
  std::string add_gold_check(const Rationale& r, const ArgumentPair& pair, bool valid,
                             std::optional<std::string> reason = std::nullopt);

  /// The rater's leased task if still open, else the next open task they have not
  /// answered and that has a free slot. nullopt when nothing is left.
  std::optional<AnnotationTask> next_task(const std::string& rater_id);

  /// Records a vote. Returns true when the vote closed the task. Throws
  /// AnnotationError for unknown tasks, closed tasks, repeat votes, malformed
  /// answers and blank persuasion explanations.
  bool submit_vote(const std::string& rater_id, const std::string& task_id, const nlohmann::json& answer,
                   const std::string& explanation);

  /// Closed basic-form tasks as validity/repetition vote sets, or closed content
  /// tasks as contrast/novelty vote sets.
  std::vector<VoteSet> export_binary(TaskKind kind) const;
  /// Closed persuasion tasks with answers relative to rationale_a.
  std::vector<PersuasionVoteSet> export_persuasion() const;
  /// JSON export used by GET /export.
  nlohmann::json export_json(TaskKind kind) const;

  BoardProgress progress() const;
  std::optional<AnnotationTask> task(const std::string& task_id) const;
  std::size_t size() const;

  /// Called for every accepted vote, under the board lock.
  void on_vote(std::function<void(const RecordedVote&)> callback);

 private:
  struct Entry {
    AnnotationTask task;
    std::vector<RecordedVote> votes;
    std::map<std::string, std::chrono::steady_clock::time_point> leases;
  };

  std::string add(AnnotationTask task);
  bool closed(const Entry& e) const;
  bool rater_flagged(const std::string& rater_id) const;
  RaterProgress rater_progress(const std::string& rater_id) const;
  std::vector<const RecordedVote*> counted_votes(const Entry& e) const;

  BoardOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> tokens_;
  std::vector<std::string> order_;
  std::vector<std::string> gold_ids_;
  std::map<std::string, Entry> tasks_;
  std::function<void(const RecordedVote&)> on_vote_;
};

/// Canonical answer about rationale_a given a display-slot choice.
PersuasionAnswer canonical_answer(const std::string& choice, bool swapped);

/// HTTP front end for an AnnotationBoard (see docs/annotation_api.md).
class AnnotationServer {
 public:
  /// `admin_token` guards GET /export; empty disables the check.
  AnnotationServer(AnnotationBoard& board, std::string admin_token = {});
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds to host:port (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace argjudge
