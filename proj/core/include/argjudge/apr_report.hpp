#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "argjudge/corpus.hpp"
#include "argjudge/rationale_quality.hpp"
#include "argjudge/tournament.hpp"

namespace argjudge {

struct AprStat {
  double mean = 0.0;
  /// Population standard deviation.
  double sd = 0.0;
  std::size_t n = 0;
};

struct AprColumn {
  std::string label;
  std::size_t n_pairs = 0;
  std::map<std::string, AprStat> by_participant;
};

struct APRReport {
  std::vector<std::string> participants;
  /// "all" first, then one column per quality bucket when requested.
  std::vector<AprColumn> columns;
  /// Participant -> provenance, for distinguishing improvement variants.
  std::map<std::string, Provenance> provenance;
  std::vector<std::string> excluded_pairs;
};

/// Mean rank and population SD per participant. Throws ReportError if the
/// scoreboards are empty or their participant sets differ.
AprColumn apr(std::span<const Scoreboard> boards, const std::string& label = "all");

/// Builds the overall column plus one column per quality-delta bucket. Pairs
/// without a quality delta only count toward "all".
APRReport build_apr_report(const ScoredTournament& scored, std::span<const ArgumentPair> pairs,
                           std::span<const double> bucket_edges = {});

/// "7.00 (1.09)"; "-" for a column with no pairs.
std::string format_apr(const AprStat& stat);

/// Delimited table: participant, provenance, then one "APR (sd)" cell per column.
std::string render_apr_table(const APRReport& report, char delimiter = ',');
std::string render_apr_json(const APRReport& report);

}  // namespace argjudge
