#include "argjudge/apr_report.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "csv.hpp"

namespace argjudge {

AprColumn apr(std::span<const Scoreboard> boards, const std::string& label) {
  if (boards.empty()) throw ReportError("APR needs at least one scoreboard");
  AprColumn col;
  col.label = label;
  col.n_pairs = boards.size();
  const auto& ref = boards.front().participants;
  std::vector<std::string> sorted_ref(ref.begin(), ref.end());
  std::sort(sorted_ref.begin(), sorted_ref.end());
  for (const auto& b : boards) {
    std::vector<std::string> p(b.participants.begin(), b.participants.end());
    std::sort(p.begin(), p.end());
    if (p != sorted_ref) throw ReportError("scoreboard " + b.pair_id + " has a different participant set");
  }
  for (const auto& id : ref) {
    double sum = 0.0;
    for (const auto& b : boards) sum += b.ranks.at(id);
    const double n = static_cast<double>(boards.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& b : boards) ss += (b.ranks.at(id) - mean) * (b.ranks.at(id) - mean);
    col.by_participant[id] = AprStat{mean, std::sqrt(ss / n), boards.size()};
  }
  return col;
}

APRReport build_apr_report(const ScoredTournament& scored, std::span<const ArgumentPair> pairs,
                           std::span<const double> bucket_edges) {
  if (scored.scoreboards.empty()) throw ReportError("no fully resolved argument pair to report on");
  APRReport report;
  report.participants = scored.scoreboards.front().participants;
  report.excluded_pairs = scored.excluded_pairs;
  report.columns.push_back(apr(scored.scoreboards, "all"));

  if (bucket_edges.size() >= 2) {
    std::map<std::string, const ArgumentPair*> by_id;
    for (const auto& p : pairs) by_id[p.id] = &p;
    const auto labels = bucket_labels(bucket_edges);
    std::vector<std::vector<Scoreboard>> grouped(labels.size());
    for (const auto& b : scored.scoreboards) {
      auto it = by_id.find(b.pair_id);
      if (it == by_id.end() || !it->second->quality_delta) continue;
      if (auto idx = bucket_index(*it->second->quality_delta, bucket_edges)) grouped[*idx].push_back(b);
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (grouped[i].empty()) {
        AprColumn empty;
        empty.label = labels[i];
        for (const auto& id : report.participants) empty.by_participant[id] = AprStat{};
        report.columns.push_back(std::move(empty));
      } else {
        report.columns.push_back(apr(grouped[i], labels[i]));
      }
    }
  }
  return report;
}

std::string format_apr(const AprStat& stat) {
  if (stat.n == 0) return "-";
  return fmt::format("{:.2f} ({:.2f})", stat.mean, stat.sd);
}

namespace {

std::string provenance_of(const APRReport& report, const std::string& id) {
  auto it = report.provenance.find(id);
  return std::string(to_string(it == report.provenance.end() ? Provenance::base : it->second));
}

}  // namespace

std::string render_apr_table(const APRReport& report, char delimiter) {
  std::string out;
  std::vector<std::string> header{"participant", "provenance"};
  for (const auto& c : report.columns) header.push_back(fmt::format("{} (n={})", c.label, c.n_pairs));
  out += detail::write_delimited_row(header, delimiter);
  for (const auto& id : report.participants) {
    std::vector<std::string> row{id, provenance_of(report, id)};
    for (const auto& c : report.columns) row.push_back(format_apr(c.by_participant.at(id)));
    out += detail::write_delimited_row(row, delimiter);
  }
  return out;
}

std::string render_apr_json(const APRReport& report) {
  nlohmann::json j;
  j["participants"] = report.participants;
  j["excluded_pairs"] = report.excluded_pairs;
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : report.columns) {
    nlohmann::json col{{"label", c.label}, {"n_pairs", c.n_pairs}};
    nlohmann::json rows = nlohmann::json::object();
    for (const auto& id : report.participants) {
      const auto& s = c.by_participant.at(id);
      rows[id] = s.n == 0 ? nlohmann::json{{"n", 0}}
                          : nlohmann::json{{"apr", s.mean}, {"sd", s.sd}, {"n", s.n}, {"display", format_apr(s)}};
    }
    col["by_participant"] = std::move(rows);
    cols.push_back(std::move(col));
  }
  j["columns"] = std::move(cols);
  nlohmann::json prov = nlohmann::json::object();
  for (const auto& id : report.participants) prov[id] = provenance_of(report, id);
  j["provenance"] = std::move(prov);
  return j.dump(2);
}

}  // namespace argjudge
