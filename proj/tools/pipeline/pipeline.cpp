#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <argjudge/analysis.hpp>
#include <argjudge/improve.hpp>
#include <argjudge/serialization.hpp>

namespace argjudge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

DependencyError::DependencyError(const std::string& stage, const std::string& command)
    : Error(fmt::format("stage '{}' is not complete; run `argjudge {}` first", stage, command)), command_(command) {}

std::optional<AnalysisKind> analysis_kind_from_string(std::string_view text) {
  if (text == "forest") return AnalysisKind::forest;
  if (text == "shapley") return AnalysisKind::shapley;
  if (text == "kmeans") return AnalysisKind::kmeans;
  if (text == "anova") return AnalysisKind::anova;
  if (text == "pearson") return AnalysisKind::pearson;
  if (text == "alpha") return AnalysisKind::alpha;
  if (text == "tau") return AnalysisKind::tau;
  return std::nullopt;
}

std::string_view to_string(AnalysisKind k) {
  switch (k) {
    case AnalysisKind::forest: return "forest";
    case AnalysisKind::shapley: return "shapley";
    case AnalysisKind::kmeans: return "kmeans";
    case AnalysisKind::anova: return "anova";
    case AnalysisKind::pearson: return "pearson";
    case AnalysisKind::alpha: return "alpha";
    case AnalysisKind::tau: return "tau";
  }
  return "?";
}

std::vector<double> parse_bucket_edges(std::string_view text) {
  std::vector<double> edges;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      edges.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad bucket edge '" + item + "'");
    }
  }
  if (edges.size() < 2) throw ConfigError("buckets need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i - 1] < edges[i])) throw ConfigError("bucket edges must be strictly increasing");
  return edges;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw StoreError("cannot write " + path.string());
  f << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

template <class T>
std::vector<T> seeded_subset(std::vector<T> items, std::size_t n, std::uint64_t seed) {
  if (n >= items.size()) return items;
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  portable_shuffle(idx, rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(std::move(items[i]));
  return out;
}

std::string pct(double x) { return fmt::format("{:.1f}%", 100.0 * x); }

std::string stat_line(const std::string& name, const std::optional<StatResult>& r) {
  if (!r) return fmt::format("  {}: not computable (degenerate groups)\n", name);
  return fmt::format("  {}: F({:g}, {:g}) = {:.4f}, p = {:.4g}\n", name, r->df1, r->df2, r->statistic, r->p_value);
}

json stat_json(const std::optional<StatResult>& r) {
  if (!r) return nullptr;
  return {{"statistic", r->statistic}, {"p_value", r->p_value}, {"df1", r->df1}, {"df2", r->df2}};
}

json profile_json(const ClusterProfile& p) {
  return {{"n", p.n}, {"contrast_rate", p.contrast_rate}, {"novelty_rate", p.novelty_rate}, {"mean_length", p.mean_length}};
}

/// Text table: participant column then one column per report column.
std::string apr_text(const APRReport& report) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"participant"};
  for (const auto& c : report.columns) header.push_back(fmt::format("{} (n={})", c.label, c.n_pairs));
  rows.push_back(header);
  for (const auto& p : report.participants) {
    std::vector<std::string> row{p};
    auto prov = report.provenance.find(p);
    if (prov != report.provenance.end() && prov->second != Provenance::base)
      row[0] += fmt::format(" [{}]", to_string(prov->second));
    for (const auto& c : report.columns) {
      auto it = c.by_participant.find(p);
      row.push_back(it == c.by_participant.end() ? "-" : format_apr(it->second));
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += i == 0 ? fmt::format("{:<{}}", r[i], width[i]) : fmt::format("  {:>{}}", r[i], width[i]);
    }
    out += '\n';
  }
  return out;
}

/// JSON-lines or a GET /export document, as a vector of vote objects.
std::vector<json> read_vote_items(const fs::path& path) {
  const std::string text = read_file(path);
  auto whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded() && whole.is_object() && whole.contains("items")) {
    return whole["items"].get<std::vector<json>>();
  }
  std::vector<json> out;
  std::stringstream ss(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(ss, line)) {
    ++n;
    if (trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw RecordError(n, "vote line is not a JSON object");
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

Pipeline::Pipeline(Config config) : config_(std::move(config)) {
  store_ = std::make_unique<RunStore>(config_.runs_dir, config_.run_id);
  GatewayOptions go;
  go.cache_dir = config_.cache_dir ? std::optional<std::string>(config_.cache_dir->string()) : std::nullopt;
  go.retry = config_.retry;
  gateway_ = std::make_unique<Gateway>(go);
  kit_ = std::make_unique<PromptKit>(config_.template_dir ? PromptKit::load(config_.template_dir->string())
                                                          : PromptKit::load_default());
}

Pipeline::~Pipeline() = default;

void Pipeline::require(const char* stage_name, const char* command) {
  auto m = store_->manifest();
  auto it = m.stages.find(stage_name);
  if (it == m.stages.end() || !it->second.complete) throw DependencyError(stage_name, command);
}

bool Pipeline::up_to_date(std::ostream& out, const char* stage_name, bool force) {
  if (force) {
    store_->reset_stage(stage_name);
    return false;
  }
  auto m = store_->manifest();
  auto it = m.stages.find(stage_name);
  if (it != m.stages.end() && it->second.complete) {
    out << fmt::format("{}: up to date ({} records)\n", stage_name, it->second.records);
    return true;
  }
  return false;
}

void Pipeline::append_pair(const char* stage_name, const ArgumentPair& p, const std::string& dataset) {
  json j = to_json(p);
  j["dataset"] = dataset;
  store_->append_record(stage_name, j);
  dataset_of_[p.id] = dataset;
}

std::vector<ArgumentPair> Pipeline::read_pairs(const char* stage_name) {
  std::vector<ArgumentPair> out;
  for (const auto& j : store_->load_stage(stage_name)) {
    out.push_back(pair_from_json(j));
    dataset_of_[out.back().id] = j.value("dataset", "");
  }
  return out;
}

void Pipeline::refresh_gold(std::span<const ArgumentPair> pairs) {
  auto book = std::make_shared<GoldBook>();
  for (const auto& p : pairs)
    if (p.gold_winner) book->add(p.topic, p.arg1.text, p.arg2.text, *p.gold_winner);
  gateway_->set_gold_book(std::move(book));
}

std::vector<std::string> Pipeline::participants() const {
  std::vector<std::string> out;
  for (const auto& m : config_.models) out.push_back(m.model_id);
  return out;
}

std::vector<ArgumentPair> Pipeline::all_pairs() {
  require(stage::pairs, "ingest");
  auto pairs = read_pairs(stage::pairs);
  if (config_.has_pointwise()) {
    require(stage::pointwise_pairs, "pair");
    auto more = read_pairs(stage::pointwise_pairs);
    pairs.insert(pairs.end(), more.begin(), more.end());
  }
  refresh_gold(pairs);
  return pairs;
}

std::vector<ArgumentPair> Pipeline::filtered_pairs() {
  require(stage::filtered, "filter");
  auto pairs = read_pairs(stage::filtered);
  refresh_gold(pairs);
  return pairs;
}

std::vector<ModelDecision> Pipeline::decisions(const char* stage_name) {
  std::vector<ModelDecision> out;
  for (const auto& j : store_->load_stage(stage_name)) out.push_back(decision_from_json(j));
  return out;
}

std::vector<Rationale> Pipeline::rationales(const char* stage_name) {
  std::vector<Rationale> out;
  for (const auto& j : store_->load_stage(stage_name)) out.push_back(rationale_from_json(j));
  return out;
}

std::vector<ComparisonOutcome> Pipeline::outcomes(const char* stage_name) {
  std::vector<ComparisonOutcome> out;
  for (const auto& j : store_->load_stage(stage_name)) out.push_back(outcome_from_json(j));
  return out;
}

std::vector<Scoreboard> Pipeline::scoreboards(const char* stage_name) {
  std::vector<Scoreboard> out;
  for (const auto& j : store_->load_stage(stage_name)) out.push_back(scoreboard_from_json(j));
  return out;
}

// ---------------------------------------------------------------------------

void Pipeline::ingest(std::ostream& out, bool force) {
  auto m = store_->manifest();
  if (!force && m.stages[stage::pairs].complete && m.stages[stage::arguments].complete) {
    out << fmt::format("ingest: up to date ({} pairs, {} arguments)\n", m.stages[stage::pairs].records,
                       m.stages[stage::arguments].records);
    return;
  }
  store_->reset_stage(stage::pairs);
  store_->reset_stage(stage::arguments);
  store_->write_config_snapshot(config_.raw);

  for (std::size_t d = 0; d < config_.datasets.size(); ++d) {
    const auto& ds = config_.datasets[d];
    if (ds.kind == DatasetKind::pairwise) {
      auto load = load_pairwise_dataset(ds.path.string(), ds.format);
      for (const auto& r : load.rejected) spdlog::warn("{}: row {} rejected: {}", ds.name, r.row, r.reason);
      auto pairs = load.pairs;
      if (ds.sample) pairs = seeded_subset(std::move(pairs), *ds.sample, mix_seed(config_.seeds.sample, d));
      for (auto& p : pairs) {
        p.id = ds.name + ":" + p.id;
        p.arg1.id = ds.name + ":" + p.arg1.id;
        p.arg2.id = ds.name + ":" + p.arg2.id;
        append_pair(stage::pairs, p, ds.name);
      }
      out << fmt::format("ingest: {} pairs from {} ({} rows rejected)\n", pairs.size(), ds.name, load.rejected.size());
    } else {
      auto args = load_pointwise_dataset(ds.path.string(), ds.format);
      for (auto& a : args) {
        a.id = ds.name + ":" + a.id;
        json j = to_json(a);
        j["dataset"] = ds.name;
        store_->append_record(stage::arguments, j);
      }
      out << fmt::format("ingest: {} arguments from {}\n", args.size(), ds.name);
    }
  }
  store_->mark_complete(stage::pairs);
  store_->mark_complete(stage::arguments);
}

void Pipeline::pair(std::ostream& out, bool force) {
  require(stage::arguments, "ingest");
  if (up_to_date(out, stage::pointwise_pairs, force)) return;
  store_->reset_stage(stage::pointwise_pairs);

  std::map<std::string, std::vector<Argument>> by_dataset;
  for (const auto& j : store_->load_stage(stage::arguments))
    by_dataset[j.value("dataset", "")].push_back(argument_from_json(j));

  for (std::size_t d = 0; d < config_.datasets.size(); ++d) {
    const auto& ds = config_.datasets[d];
    if (ds.kind != DatasetKind::pointwise) continue;
    const auto& args = by_dataset[ds.name];
    auto pairs = build_pairs_from_pointwise(args, config_.pairing);
    const std::size_t built = pairs.size();
    if (ds.sample) pairs = seeded_subset(std::move(pairs), *ds.sample, mix_seed(config_.seeds.sample, d));
    for (auto& p : pairs) {
      p.id = ds.name + ":" + p.id;
      append_pair(stage::pointwise_pairs, p, ds.name);
    }
    out << fmt::format("pair: {} pairs from {} arguments in {} (kept {})\n", built, args.size(), ds.name, pairs.size());
  }
  store_->mark_complete(stage::pointwise_pairs);
}

void Pipeline::generate(std::ostream& out, bool force) {
  const auto pairs = all_pairs();
  if (up_to_date(out, stage::decisions, force)) return;

  RunOptions options;
  options.workers = config_.workers;
  options.completed = decisions();
  const std::size_t resumed = options.completed.size();
  options.on_cell = [this](const ModelDecision& d) { store_->append_record(stage::decisions, to_json(d)); };
  const auto matrix = run_matrix(*gateway_, *kit_, config_.models, pairs, std::move(options));
  store_->mark_complete(stage::decisions);

  std::size_t failures = 0;
  for (const auto& c : matrix.cells) failures += c.parsed() ? 0 : 1;
  out << fmt::format("generate: {} models x {} pairs = {} decisions ({} resumed, {} parse failures)\n",
                     matrix.models.size(), pairs.size(), matrix.cells.size(), resumed, failures);
}

namespace {

DecisionMatrix matrix_from(std::span<const ModelDecision> cells, std::vector<std::string> models,
                           std::vector<ArgumentPair> pairs) {
  DecisionMatrix m;
  m.models = std::move(models);
  m.pairs = std::move(pairs);
  std::map<std::pair<std::string, std::string>, const ModelDecision*> index;
  for (const auto& c : cells) index[{c.model_id, c.pair_id}] = &c;
  std::vector<std::string> missing;
  for (const auto& model : m.models) {
    for (const auto& p : m.pairs) {
      auto it = index.find({model, p.id});
      if (it == index.end()) {
        missing.push_back(rationale_id(p.id, model));
        m.cells.emplace_back();
      } else {
        m.cells.push_back(*it->second);
      }
    }
  }
  if (!missing.empty()) throw CoverageError("decision matrix is incomplete", std::move(missing));
  return m;
}

}  // namespace

void Pipeline::filter(std::ostream& out, bool force) {
  require(stage::decisions, "generate");
  if (up_to_date(out, stage::filtered, force)) return;
  store_->reset_stage(stage::filtered);

  const auto pairs = all_pairs();
  const auto matrix = matrix_from(decisions(), participants(), pairs);
  const auto kept = filter_unanimous(matrix, gold_map(pairs));
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& p : pairs) ++counts[dataset_of_.at(p.id)].second;
  for (const auto& p : kept) {
    append_pair(stage::filtered, p, dataset_of_.at(p.id));
    ++counts[dataset_of_.at(p.id)].first;
  }
  store_->mark_complete(stage::filtered);
  for (const auto& [ds, c] : counts)
    out << fmt::format("filter: {} of {} pairs in {} have unanimous correct decisions\n", c.first, c.second, ds);
}

void Pipeline::label(std::ostream& out, bool force) {
  const auto pairs = filtered_pairs();
  if (up_to_date(out, stage::rationales, force)) return;
  store_->reset_stage(stage::rationales);

  std::map<std::string, ArgumentPair> by_id;
  for (const auto& p : pairs) by_id.emplace(p.id, p);
  std::vector<Rationale> base;
  for (const auto& d : decisions())
    if (by_id.count(d.pair_id)) base.push_back(d.rationale);

  VoteBook book;
  const bool have_votes = config_.votes.has_value();
  if (have_votes) {
    std::string jsonl;
    for (const auto& v : read_vote_items(*config_.votes)) jsonl += v.dump() + "\n";
    const auto n = book.import_jsonl(jsonl);
    out << fmt::format("label: {} human votes from {}\n", n, config_.votes->string());
  }
  ContentLabeler llm;
  if (config_.labeling.content_source == ContentSource::llm_judge)
    llm = llm_content_labeler(*gateway_, *kit_, config_.judge);

  const auto labeled = apply_labels(base, by_id, config_.labeling, have_votes ? &book : nullptr, llm);
  std::size_t admitted = 0, contrast = 0, novelty = 0;
  for (const auto& r : labeled) {
    store_->append_record(stage::rationales, to_json(r));
    if (!r.admitted()) continue;
    ++admitted;
    if (r.content && r.content->contrast) ++contrast;
    if (r.content && r.content->novelty) ++novelty;
  }
  store_->mark_complete(stage::rationales);
  const double denom = admitted ? static_cast<double>(admitted) : 1.0;
  out << fmt::format("label: {} rationales, {} pass basic form; contrast {}, novelty {}\n", labeled.size(), admitted,
                     pct(static_cast<double>(contrast) / denom), pct(static_cast<double>(novelty) / denom));
}

void Pipeline::judge(std::ostream& out, bool force) {
  require(stage::rationales, "label");
  if (!force) {
    auto m = store_->manifest();
    if (m.stages[stage::outcomes].complete && m.stages[stage::scoreboards].complete) {
      out << fmt::format("judge: up to date ({} outcomes, {} scoreboards)\n", m.stages[stage::outcomes].records,
                         m.stages[stage::scoreboards].records);
      return;
    }
  } else {
    store_->reset_stage(stage::outcomes);
  }
  const auto pairs = filtered_pairs();
  const auto parts = participants();
  const auto rats = rationales();

  TournamentOptions options;
  options.workers = config_.workers;
  for (auto& o : outcomes())
    if (o.resolved) options.completed.push_back(std::move(o));
  const std::size_t resumed = options.completed.size();
  options.on_outcome = [this](const ComparisonOutcome& o) {
    if (o.resolved) store_->append_record(stage::outcomes, to_json(o));
  };
  const auto outs = run_tournament(*gateway_, *kit_, config_.judge, pairs, parts, rats, std::move(options));

  std::size_t judged = 0, by_rule = 0, unresolved = 0, ties = 0;
  for (const auto& o : outs) {
    if (!o.resolved) {
      ++unresolved;
      continue;
    }
    (o.source == OutcomeSource::default_rule ? by_rule : judged) += 1;
    if (o.outcome == Outcome::tie) ++ties;
  }
  if (unresolved == 0) store_->mark_complete(stage::outcomes);

  const auto scored = score_tournament(outs, parts);
  store_->reset_stage(stage::scoreboards);
  for (const auto& b : scored.scoreboards) store_->append_record(stage::scoreboards, to_json(b));
  store_->mark_complete(stage::scoreboards);

  out << fmt::format("judge: {} comparisons ({} judged, {} by the basic-form rule, {} ties, {} resumed)\n", outs.size(),
                     judged, by_rule, ties, resumed);
  if (unresolved) {
    out << fmt::format("judge: {} comparisons unresolved; {} pairs left out of APR (rerun to retry)\n", unresolved,
                       scored.excluded_pairs.size());
  }
}

void Pipeline::judge_human(std::ostream& out, const fs::path& export_file) {
  require(stage::rationales, "label");
  const auto pairs = filtered_pairs();
  const auto parts = participants();
  auto doc = json::parse(read_file(export_file), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || doc.value("kind", "") != "persuasion_pair")
    throw InputError(export_file.string() + " is not a persuasion_pair export");

  store_->reset_stage(stage::human_outcomes);
  store_->reset_stage(stage::human_scoreboards);
  std::map<std::string, std::vector<ComparisonOutcome>> by_pair;
  std::size_t unresolved = 0;
  for (const auto& item : doc.at("items")) {
    Comparison c{item.at("pair_id").get<std::string>(), item.at("participant_a").get<std::string>(),
                 item.at("participant_b").get<std::string>(), item.at("rationale_a").get<std::string>(),
                 item.at("rationale_b").get<std::string>()};
    std::vector<PersuasionVote> votes;
    for (const auto& v : item.at("votes")) {
      auto answer = persuasion_answer_from_string(v.at("answer").get<std::string>());
      if (!answer) throw InputError("bad persuasion answer in " + c.id());
      votes.push_back({v.at("rater_id").get<std::string>(), *answer, v.value("explanation", "")});
    }
    auto o = human_outcome_from_votes(c, votes);
    if (!o.resolved) ++unresolved;
    store_->append_record(stage::human_outcomes, to_json(o));
    by_pair[c.pair_id].push_back(std::move(o));
  }
  store_->mark_complete(stage::human_outcomes);

  const std::size_t needed = parts.size() * (parts.size() - 1) / 2;
  std::size_t scored = 0;
  for (const auto& p : pairs) {
    auto it = by_pair.find(p.id);
    if (it == by_pair.end() || it->second.size() != needed) continue;
    try {
      store_->append_record(stage::human_scoreboards, to_json(score_round_robin(it->second, parts)));
      ++scored;
    } catch (const CoverageError& e) {
      spdlog::warn("human votes for {}: {}", p.id, e.what());
    }
  }
  store_->mark_complete(stage::human_scoreboards);
  out << fmt::format("judge: {} human comparisons ({} unresolved); {} pairs fully covered and scored\n",
                     doc.at("items").size(), unresolved, scored);
}

std::map<std::string, APRReport> Pipeline::reports_by_dataset(std::span<const Scoreboard> boards,
                                                              std::span<const std::string> excluded,
                                                              std::span<const ArgumentPair> pairs,
                                                              std::span<const Rationale> rats,
                                                              std::span<const double> edges) {
  std::map<std::string, Provenance> provenance;
  for (const auto& r : rats) provenance.emplace(r.model_id, r.provenance);
  std::map<std::string, std::pair<ScoredTournament, std::vector<ArgumentPair>>> groups;
  for (const auto& p : pairs) groups[dataset_of_.at(p.id)].second.push_back(p);
  for (const auto& b : boards) groups[dataset_of_.at(b.pair_id)].first.scoreboards.push_back(b);
  for (const auto& e : excluded) groups[dataset_of_.at(e)].first.excluded_pairs.push_back(e);

  std::map<std::string, APRReport> out;
  for (auto& [ds, g] : groups) {
    if (g.first.scoreboards.empty()) continue;
    auto report = build_apr_report(g.first, g.second, edges);
    for (const auto& p : report.participants)
      if (auto it = provenance.find(p); it != provenance.end()) report.provenance[p] = it->second;
    out.emplace(ds, std::move(report));
  }
  return out;
}

void Pipeline::apr(std::ostream& out, std::optional<std::vector<double>> buckets) {
  require(stage::scoreboards, "judge");
  const std::vector<double> edges = buckets ? *buckets : config_.buckets;
  const auto pairs = filtered_pairs();
  const auto boards = scoreboards();
  const auto rats = rationales();
  std::set<std::string> scored_ids;
  for (const auto& b : boards) scored_ids.insert(b.pair_id);
  std::vector<std::string> excluded;
  for (const auto& p : pairs)
    if (!scored_ids.count(p.id)) excluded.push_back(p.id);

  store_->reset_stage(stage::reports);
  auto emit = [&](const std::string& prefix, const std::map<std::string, APRReport>& reports) {
    for (const auto& [ds, report] : reports) {
      const std::string name = prefix + ds;
      store_->append_record(stage::reports, json{{"id", name}, {"report", json::parse(render_apr_json(report))}});
      write_file(store_->dir() / ("apr_" + name + ".csv"), render_apr_table(report, ','));
      write_file(store_->dir() / ("apr_" + name + ".json"), render_apr_json(report));
      out << fmt::format("APR (sd), {}{}\n", prefix.empty() ? "" : "human evaluation, ", ds) << apr_text(report);
      if (!report.excluded_pairs.empty())
        out << fmt::format("  {} pairs left out (unresolved comparisons)\n", report.excluded_pairs.size());
      out << '\n';
    }
  };
  emit("", reports_by_dataset(boards, excluded, pairs, rats, edges));

  auto m = store_->manifest();
  if (m.stages[stage::human_scoreboards].complete) {
    const auto human = scoreboards(stage::human_scoreboards);
    if (!human.empty()) emit("human-", reports_by_dataset(human, {}, pairs, rats, edges));
  }
  store_->mark_complete(stage::reports);
}

// ---------------------------------------------------------------------------

void Pipeline::analyze(std::ostream& out, const AnalyzeOptions& options) {
  auto rows_for = [&](TargetKind target) {
    if (options.features) return load_feature_table(options.features->string());
    require(stage::scoreboards, "judge");
    (void)filtered_pairs();
    return build_feature_rows(scoreboards(), rationales(), target);
  };
  auto save = [&](AnalysisKind k, const json& j) {
    write_file(store_->dir() / fmt::format("analysis_{}.json", to_string(k)), j.dump(2));
  };

  for (AnalysisKind what : options.what) {
    switch (what) {
      case AnalysisKind::forest: {
        const auto rows = rows_for(config_.target);
        const auto forest = fit_forest(rows, config_.forest);
        double sse = 0.0, sst = 0.0, mean = 0.0;
        for (const auto& r : rows) mean += r.target;
        mean /= static_cast<double>(rows.size());
        for (const auto& r : rows) {
          const double e = forest.predict(r.x()) - r.target;
          sse += e * e;
          sst += (r.target - mean) * (r.target - mean);
        }
        const double r2 = sst > 0 ? 1.0 - sse / sst : 1.0;
        out << fmt::format("forest: {} trees, max_depth {}, min_leaf {}, max_features {}, bootstrap {}, seed {}\n",
                           config_.forest.n_trees, config_.forest.max_depth, config_.forest.min_leaf,
                           config_.forest.max_features, config_.forest.bootstrap, config_.forest.seed);
        out << fmt::format("forest: {} rows, in-sample R^2 = {:.4f}\n", rows.size(), r2);
        save(what, {{"rows", rows.size()}, {"r2", r2}, {"mse", sse / static_cast<double>(rows.size())}});
        break;
      }
      case AnalysisKind::shapley: {
        const auto rows = rows_for(config_.target);
        const auto forest = fit_forest(rows, config_.forest);
        const auto report = explain([&](const FeatureVector& x) { return forest.predict(x); }, rows, rows);
        const auto order = global_importance(report);
        std::string chain, detail;
        for (const auto& [f, v] : order) {
          chain += (chain.empty() ? "" : " > ") + std::string(to_string(f));
          detail += fmt::format("  {:<9} mean |phi| = {:.4f}\n", to_string(f), v);
        }
        out << "shapley: importance " << chain << '\n' << detail;
        write_file(store_->dir() / "analysis_shapley.json", render_attribution_json(report, &config_.forest));
        break;
      }
      case AnalysisKind::kmeans: {
        const auto rows = rows_for(config_.cluster_on);
        const auto a = hp_lp_analysis(rows);
        out << fmt::format("kmeans: HP n={} centroid {:.3f}; LP n={} centroid {:.3f}\n", a.hp.n, a.clusters.hp_centroid,
                           a.lp.n, a.clusters.lp_centroid);
        out << fmt::format("  contrast  HP {}  LP {}\n", pct(a.hp.contrast_rate), pct(a.lp.contrast_rate));
        out << fmt::format("  novelty   HP {}  LP {}\n", pct(a.hp.novelty_rate), pct(a.lp.novelty_rate));
        out << fmt::format("  length    HP {:.1f}  LP {:.1f}\n", a.hp.mean_length, a.lp.mean_length);
        out << stat_line("contrast ANOVA", a.contrast_anova) << stat_line("novelty ANOVA", a.novelty_anova)
            << stat_line("length ANOVA", a.length_anova);
        save(what, {{"hp", profile_json(a.hp)},
                    {"lp", profile_json(a.lp)},
                    {"hp_centroid", a.clusters.hp_centroid},
                    {"lp_centroid", a.clusters.lp_centroid},
                    {"contrast_anova", stat_json(a.contrast_anova)},
                    {"novelty_anova", stat_json(a.novelty_anova)},
                    {"length_anova", stat_json(a.length_anova)}});
        break;
      }
      case AnalysisKind::anova: {
        auto rows = rows_for(config_.cluster_on);
        std::size_t kept_comparisons = 0;
        if (!options.features) {
          std::map<std::string, Rationale> by_id;
          for (auto& r : rationales()) by_id.emplace(r.id, r);
          std::vector<Comparison> judged;
          for (const auto& o : outcomes())
            if (o.source == OutcomeSource::judge) judged.push_back(o.comparison);
          const auto subset = length_controlled_subset(judged, by_id, config_.length_tolerance);
          kept_comparisons = subset.size();
          std::set<std::string> ids;
          for (const auto& c : subset) {
            ids.insert(c.rationale_a);
            ids.insert(c.rationale_b);
          }
          std::erase_if(rows, [&](const FeatureRow& r) { return !ids.count(r.rationale_id); });
          out << fmt::format("anova: {} of {} judged comparisons within {:.0f}% length; {} rationales\n",
                             kept_comparisons, judged.size(), 100.0 * config_.length_tolerance, rows.size());
        }
        const auto a = hp_lp_analysis(rows);
        out << fmt::format("anova: HP n={} LP n={}\n", a.hp.n, a.lp.n) << stat_line("contrast", a.contrast_anova)
            << stat_line("novelty", a.novelty_anova);
        save(what, {{"comparisons", kept_comparisons},
                    {"rows", rows.size()},
                    {"contrast", stat_json(a.contrast_anova)},
                    {"novelty", stat_json(a.novelty_anova)}});
        break;
      }
      case AnalysisKind::pearson: {
        require(stage::scoreboards, "judge");
        const auto all = all_pairs();
        const auto pairs = filtered_pairs();
        const auto reports = reports_by_dataset(scoreboards(), {}, pairs, rationales(), {});
        json result = json::object();
        for (const auto& [ds, report] : reports) {
          std::vector<ArgumentPair> ds_pairs;
          for (const auto& p : all)
            if (dataset_of_.at(p.id) == ds) ds_pairs.push_back(p);
          const auto sub = matrix_from(decisions(), participants(), ds_pairs);
          const auto f1 = ranking_f1(sub, gold_map(ds_pairs));
          std::vector<double> xs, ys;
          for (const auto& p : report.participants) {
            xs.push_back(f1.at(p));
            ys.push_back(report.columns.front().by_participant.at(p).mean);
          }
          try {
            const auto r = pearson(xs, ys);
            out << fmt::format("pearson ({}): F1 vs APR r = {:.4f}, p = {:.4g} (n = {})\n", ds, r.statistic, r.p_value,
                               xs.size());
            result[ds] = {{"r", r.statistic}, {"p_value", r.p_value}, {"n", xs.size()}};
          } catch (const Error& e) {
            out << fmt::format("pearson ({}): not computable: {}\n", ds, e.what());
            result[ds] = nullptr;
          }
        }
        save(what, result);
        break;
      }
      case AnalysisKind::alpha: {
        const auto path = options.votes ? options.votes : config_.votes;
        if (!path) throw ConfigError("alpha needs --votes or labeling.votes");
        std::map<std::string, std::vector<Rating>> by_dimension;
        for (const auto& v : read_vote_items(*path)) {
          if (v.contains("votes")) {
            for (const auto& pv : v.at("votes"))
              by_dimension["persuasion"].push_back(
                  {v.at("comparison_id").get<std::string>(), pv.at("rater_id").get<std::string>(),
                   pv.at("answer").get<std::string>()});
          } else {
            const auto& ans = v.at("answer");
            by_dimension[v.at("dimension").get<std::string>()].push_back(
                {v.at("item_id").get<std::string>(), v.at("rater_id").get<std::string>(),
                 ans.is_string() ? ans.get<std::string>() : ans.dump()});
          }
        }
        json result = json::object();
        for (const auto& [dim, ratings] : by_dimension) {
          const auto rep = krippendorff_alpha_nominal(ratings);
          out << fmt::format("alpha ({}): {:.2f} over {} items, {} raters\n", dim, rep.alpha, rep.n_items, rep.n_raters);
          result[dim] = {{"alpha", rep.alpha}, {"n_items", rep.n_items}, {"n_raters", rep.n_raters}};
        }
        save(what, result);
        break;
      }
      case AnalysisKind::tau: {
        require(stage::scoreboards, "judge");
        auto m = store_->manifest();
        if (!m.stages[stage::human_scoreboards].complete)
          throw DependencyError(stage::human_scoreboards, "judge --human <export.json>");
        const auto pairs = filtered_pairs();
        const auto rats = rationales();
        const auto judge_reports = reports_by_dataset(scoreboards(), {}, pairs, rats, {});
        const auto human_reports = reports_by_dataset(scoreboards(stage::human_scoreboards), {}, pairs, rats, {});
        json result = json::object();
        for (const auto& [ds, hr] : human_reports) {
          auto jr = judge_reports.find(ds);
          if (jr == judge_reports.end()) continue;
          std::map<std::string, double> a, b;
          for (const auto& [p, s] : jr->second.columns.front().by_participant) a[p] = s.mean;
          for (const auto& [p, s] : hr.columns.front().by_participant) b[p] = s.mean;
          const auto r = kendall_tau_b(a, b);
          out << fmt::format("tau ({}): judge vs human APR order tau-b = {:.4f}, p = {:.4g}\n", ds, r.statistic,
                             r.p_value);
          result[ds] = {{"tau_b", r.statistic}, {"p_value", r.p_value}};
        }
        save(what, result);
        break;
      }
    }
  }
}

// ---------------------------------------------------------------------------

void Pipeline::improve_prompted(std::ostream& out, bool force) {
  if (config_.improve_models.empty()) throw ConfigError("improve.models is empty");
  const auto pairs = filtered_pairs();
  if (up_to_date(out, stage::prompted, force)) return;

  std::vector<ModelSpec> specs;
  for (const auto& id : config_.improve_models) specs.push_back(config_.model(id));
  RunOptions options;
  options.prompt = PromptKind::persuasion;
  options.participant_suffix = "+prompted";
  options.workers = config_.workers;
  options.completed = decisions(stage::prompted);
  options.on_cell = [this](const ModelDecision& d) { store_->append_record(stage::prompted, to_json(d)); };
  const auto matrix = run_matrix(*gateway_, *kit_, specs, pairs, std::move(options));
  store_->mark_complete(stage::prompted);
  std::size_t non_compliant = 0;
  for (const auto& c : matrix.cells) non_compliant += c.parsed() ? 0 : 1;
  out << fmt::format("improve prompted: {} rationales, {} non-compliant\n", matrix.cells.size(), non_compliant);
}

void Pipeline::improve_refine(std::ostream& out, bool force) {
  if (config_.improve_models.empty()) throw ConfigError("improve.models is empty");
  require(stage::rationales, "label");
  const auto pairs = filtered_pairs();
  if (up_to_date(out, stage::refined, force)) return;
  store_->reset_stage(stage::refined);

  const auto base = rationales();
  std::size_t changed = 0, kept = 0, failed = 0;
  for (const auto& id : config_.improve_models) {
    for (const auto& r : refine_all(*gateway_, *kit_, config_.model(id), pairs, base, config_.workers)) {
      store_->append_record(stage::refined, to_json(r));
      if (r.changed) ++changed;
      if (r.has_flag("kept_as_is")) ++kept;
      for (const auto& f : r.flags) failed += f.rfind("refine_failed:", 0) == 0 ? 1 : 0;
    }
  }
  store_->mark_complete(stage::refined);
  out << fmt::format("improve refine: {} rewritten, {} kept as is, {} failed\n", changed, kept, failed);
}

void Pipeline::improve_tournament(std::ostream& out, bool force) {
  if (config_.improve_models.empty()) throw ConfigError("improve.models is empty");
  require(stage::rationales, "label");
  require(stage::prompted, "improve prompted");
  require(stage::refined, "improve refine");
  const auto pairs = filtered_pairs();
  if (!force) {
    auto m = store_->manifest();
    if (m.stages[stage::extended_scoreboards].complete) {
      out << fmt::format("improve tournament: up to date ({} scoreboards)\n", m.stages[stage::extended_scoreboards].records);
      return;
    }
  } else {
    store_->reset_stage(stage::extended_outcomes);
  }

  std::map<std::string, ArgumentPair> by_id;
  for (const auto& p : pairs) by_id.emplace(p.id, p);
  std::vector<Rationale> variants;
  for (const auto& d : decisions(stage::prompted)) variants.push_back(d.rationale);
  for (auto& r : rationales(stage::refined)) variants.push_back(std::move(r));
  const auto labeled = apply_labels(variants, by_id, config_.labeling);

  auto all = rationales();
  all.insert(all.end(), labeled.begin(), labeled.end());
  auto parts = participants();
  for (const auto& id : config_.improve_models) parts.push_back(prompted_id(id));
  for (const auto& id : config_.improve_models) parts.push_back(refined_id(id));

  TournamentOptions options;
  options.workers = config_.workers;
  for (auto& o : outcomes(stage::outcomes))
    if (o.resolved) options.completed.push_back(std::move(o));
  for (auto& o : outcomes(stage::extended_outcomes))
    if (o.resolved) options.completed.push_back(std::move(o));
  options.on_outcome = [this](const ComparisonOutcome& o) {
    if (o.resolved) store_->append_record(stage::extended_outcomes, to_json(o));
  };
  const auto ext = extended_tournament(*gateway_, *kit_, config_.judge, pairs, parts, all, std::move(options));
  if (ext.scored.excluded_pairs.empty()) store_->mark_complete(stage::extended_outcomes);

  store_->reset_stage(stage::extended_scoreboards);
  for (const auto& b : ext.scored.scoreboards) store_->append_record(stage::extended_scoreboards, to_json(b));
  store_->mark_complete(stage::extended_scoreboards);

  for (const auto& [ds, report] :
       reports_by_dataset(ext.scored.scoreboards, ext.scored.excluded_pairs, pairs, all, config_.buckets)) {
    write_file(store_->dir() / ("extended_apr_" + ds + ".csv"), render_apr_table(report, ','));
    write_file(store_->dir() / ("extended_apr_" + ds + ".json"), render_apr_json(report));
    out << fmt::format("APR (sd) with improvement variants, {} (M = {})\n", ds, parts.size()) << apr_text(report)
        << '\n';
  }
}

// ---------------------------------------------------------------------------

void Pipeline::report(std::ostream& out) {
  require(stage::reports, "apr");
  const auto all = all_pairs();
  const auto pairs = filtered_pairs();
  const auto rats = rationales();
  std::string text = fmt::format("# Run {}\n\n", config_.run_id);

  text += "## Average persuasiveness rank, APR (sd)\n\n";
  for (const auto& [ds, report] : reports_by_dataset(scoreboards(), {}, pairs, rats, config_.buckets))
    text += fmt::format("### {}\n\n```\n{}```\n\n", ds, apr_text(report));

  auto m = store_->manifest();
  if (m.stages[stage::extended_scoreboards].complete) {
    std::vector<Rationale> with_variants = rats;
    for (const auto& d : decisions(stage::prompted)) with_variants.push_back(d.rationale);
    for (auto& r : rationales(stage::refined)) with_variants.push_back(std::move(r));
    text += "## With improvement variants\n\n";
    for (const auto& [ds, report] :
         reports_by_dataset(scoreboards(stage::extended_scoreboards), {}, pairs, with_variants, config_.buckets))
      text += fmt::format("### {}\n\n```\n{}```\n\n", ds, apr_text(report));
  }
  if (m.stages[stage::human_scoreboards].complete) {
    const auto human = scoreboards(stage::human_scoreboards);
    if (!human.empty()) {
      text += "## Human evaluation\n\n";
      for (const auto& [ds, report] : reports_by_dataset(human, {}, pairs, rats, {}))
        text += fmt::format("### {}\n\n```\n{}```\n\n", ds, apr_text(report));
    }
  }

  text += "## Pairwise ranking F1 (before filtering)\n\n```\n";
  std::map<std::string, std::vector<ArgumentPair>> by_ds;
  for (const auto& p : all) by_ds[dataset_of_.at(p.id)].push_back(p);
  const auto cells = decisions();
  text += fmt::format("{:<24}", "model");
  for (const auto& [ds, _] : by_ds) text += fmt::format("  {:>12}", ds);
  text += '\n';
  std::map<std::string, std::map<std::string, double>> f1;
  for (const auto& [ds, ps] : by_ds) f1[ds] = ranking_f1(matrix_from(cells, participants(), ps), gold_map(ps));
  for (const auto& model : participants()) {
    text += fmt::format("{:<24}", model);
    for (const auto& [ds, _] : by_ds) text += fmt::format("  {:>12.3f}", f1[ds].at(model));
    text += '\n';
  }
  text += "```\n\n";

  const auto shap = store_->dir() / "analysis_shapley.json";
  if (fs::exists(shap)) {
    const auto j = json::parse(read_file(shap));
    std::string chain;
    for (const auto& f : j.at("importance"))
      chain += (chain.empty() ? "" : " > ") + fmt::format("{} ({:.3f})", f.at("feature").get<std::string>(),
                                                           f.at("mean_abs_phi").get<double>());
    text += "## Feature importance (mean |SHAP|)\n\n" + chain + "\n\n";
  }
  const auto km = store_->dir() / "analysis_kmeans.json";
  if (fs::exists(km)) {
    const auto j = json::parse(read_file(km));
    text += "## HP / LP clusters\n\n```\n";
    text += fmt::format("{:<10}{:>8}{:>12}{:>12}{:>12}\n", "cluster", "n", "contrast", "novelty", "length");
    for (const char* c : {"hp", "lp"}) {
      const auto& p = j.at(c);
      text += fmt::format("{:<10}{:>8}{:>12}{:>12}{:>12.1f}\n", c, p.at("n").get<std::size_t>(),
                          pct(p.at("contrast_rate").get<double>()), pct(p.at("novelty_rate").get<double>()),
                          p.at("mean_length").get<double>());
    }
    text += "```\n\n";
  }
  write_file(store_->dir() / "report.md", text);
  out << text;
}

// ---------------------------------------------------------------------------

std::unique_ptr<AnnotationBoard> Pipeline::build_board(const std::set<TaskKind>& kinds) {
  require(stage::rationales, "label");
  if (config_.annotation.raters.empty()) throw ConfigError("annotation.raters is empty");
  auto board = std::make_unique<AnnotationBoard>(config_.annotation.board);
  for (const auto& [rater, token] : config_.annotation.raters) board->register_rater(rater, token);

  const auto pairs = filtered_pairs();
  std::map<std::string, ArgumentPair> pair_by_id;
  for (const auto& p : pairs) pair_by_id.emplace(p.id, p);
  std::map<std::string, Rationale> by_id;
  for (auto& r : rationales()) by_id.emplace(r.id, std::move(r));

  if (kinds.count(TaskKind::basic_form)) {
    for (const auto& [id, r] : by_id)
      if (!trim(r.text).empty() && r.supports) board->add_basic_form_task(r, pair_by_id.at(r.pair_id));
  }
  if (kinds.count(TaskKind::content)) {
    for (const auto& [id, r] : by_id)
      if (r.admitted()) board->add_content_task(r, pair_by_id.at(r.pair_id));
  }
  if (kinds.count(TaskKind::persuasion_pair)) {
    const auto parts = participants();
    const auto plan = plan_comparisons(pairs, parts);
    const auto sample = sample_for_human(plan, by_id, config_.annotation.human_fraction, config_.seeds.sample);
    for (const auto& c : sample.eligible) {
      const auto& a = by_id.at(c.rationale_a);
      const auto& b = by_id.at(c.rationale_b);
      if (a.supports != b.supports) continue;
      board->add_persuasion_task(c, pair_by_id.at(c.pair_id), a, b);
    }
  }

  std::size_t replayed = 0;
  for (const auto& v : store_->load_stage(stage::annotation_votes)) {
    try {
      board->submit_vote(v.at("rater_id").get<std::string>(), v.at("task_id").get<std::string>(), v.at("answer"),
                         v.value("explanation", ""));
      ++replayed;
    } catch (const AnnotationError& e) {
      spdlog::warn("stored vote {} not replayed: {}", v.value("id", "?"), e.what());
    }
  }
  if (replayed) spdlog::info("replayed {} stored votes", replayed);
  board->on_vote([this](const RecordedVote& v) {
    store_->append_record(stage::annotation_votes, json{{"id", v.task_id + "#" + v.rater_id},
                                                        {"task_id", v.task_id},
                                                        {"rater_id", v.rater_id},
                                                        {"answer", v.answer},
                                                        {"explanation", v.explanation},
                                                        {"guideline_version", v.guideline_version},
                                                        {"submitted_at", v.submitted_at}});
  });
  return board;
}

void Pipeline::serve(std::ostream& out, const ServeOptions& options, const std::function<bool()>& stop_requested) {
  auto board = build_board(options.kinds);
  AnnotationServer server(*board, config_.annotation.admin_token);
  const int port = server.bind(config_.annotation.host, options.port.value_or(config_.annotation.port));
  out << fmt::format("serve: {} tasks on http://{}:{}\n", board->size(), config_.annotation.host, port) << std::flush;
  std::thread worker([&] { server.serve(); });
  while (!stop_requested()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  worker.join();

  if (options.export_dir) {
    fs::create_directories(*options.export_dir);
    for (TaskKind k : {TaskKind::basic_form, TaskKind::content, TaskKind::persuasion_pair, TaskKind::gold_check})
      write_file(*options.export_dir / fmt::format("{}.json", to_string(k)), board->export_json(k).dump(2));
  }
  const auto p = board->progress();
  out << fmt::format("serve: stopped; {} of {} tasks closed, {} votes\n", p.closed, p.tasks, p.votes);
}

}  // namespace argjudge::pipeline
