#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "pipeline/pipeline.hpp"

namespace {

namespace ap = argjudge::pipeline;

enum Exit { ok = 0, config_error = 2, dependency_error = 3, runtime_error = 4 };

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

std::set<argjudge::TaskKind> parse_kinds(const std::vector<std::string>& names) {
  std::set<argjudge::TaskKind> out;
  for (const auto& n : names) {
    auto k = argjudge::task_kind_from_string(n == "persuasion" ? "persuasion_pair" : n);
    if (!k) throw argjudge::ConfigError("unknown task kind " + n);
    out.insert(*k);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate, filter and tournament-rank model rationales for pairwise argument ranking."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "argjudge 0.3.0");

  std::string config_path = "argjudge.json";
  bool verbose = false;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "Run config (JSON)");
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  bool force = false;
  auto add_force = [&](CLI::App* sub) { sub->add_flag("--force", force, "Redo the stage even if it is complete"); };

  auto* ingest = app.add_subcommand("ingest", "Load the configured datasets");
  add_force(ingest);
  auto* pair = app.add_subcommand("pair", "Build pairs from pointwise datasets");
  add_force(pair);
  auto* generate = app.add_subcommand("generate", "Ask every model to rank every pair");
  add_force(generate);
  auto* filter = app.add_subcommand("filter", "Keep pairs every model ranked correctly");
  add_force(filter);
  auto* label = app.add_subcommand("label", "Basic-form and content labels for rationales");
  add_force(label);

  auto* judge = app.add_subcommand("judge", "Round-robin persuasiveness tournament");
  add_force(judge);
  std::string human_export;
  judge->add_option("--human", human_export, "Score human votes from a persuasion export instead")
      ->check(CLI::ExistingFile);

  auto* apr = app.add_subcommand("apr", "APR reports per dataset and quality bucket");
  std::string buckets;
  apr->add_option("--buckets", buckets, "Quality-delta bucket edges, e.g. 0,0.25,0.5,1.0");

  auto* analyze = app.add_subcommand("analyze", "Forest, SHAP, clustering and statistics");
  std::vector<std::string> what{"shapley"};
  std::string features, votes;
  analyze->add_option("--what", what, "forest|shapley|kmeans|anova|pearson|alpha|tau|all")->delimiter(',');
  analyze->add_option("--features", features, "Feature table instead of the run's scoreboards")
      ->check(CLI::ExistingFile);
  analyze->add_option("--votes", votes, "Vote file for alpha")->check(CLI::ExistingFile);

  auto* improve = app.add_subcommand("improve", "Persuasion-control variants");
  improve->require_subcommand(1);
  auto* prompted = improve->add_subcommand("prompted", "Rationales under the persuasion prompt");
  add_force(prompted);
  auto* refine = improve->add_subcommand("refine", "One evaluate-and-refine pass over base rationales");
  add_force(refine);
  auto* tournament = improve->add_subcommand("tournament", "Tournament including the variants");
  add_force(tournament);

  auto* serve = app.add_subcommand("serve", "Annotation service for human raters");
  std::vector<std::string> kinds{"persuasion"};
  int port = -1;
  std::string export_dir;
  serve->add_option("--tasks", kinds, "basic_form,content,persuasion")->delimiter(',');
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--export-dir", export_dir, "Write exports here on shutdown");

  auto* report = app.add_subcommand("report", "Consolidated tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : config_error;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);
  spdlog::set_pattern("%^%l%$: %v");

  try {
    ap::Pipeline pipeline(ap::load_config(config_path));
    auto& out = std::cout;

    if (*ingest) pipeline.ingest(out, force);
    if (*pair) pipeline.pair(out, force);
    if (*generate) pipeline.generate(out, force);
    if (*filter) pipeline.filter(out, force);
    if (*label) pipeline.label(out, force);
    if (*judge) {
      if (human_export.empty()) {
        pipeline.judge(out, force);
      } else {
        pipeline.judge_human(out, human_export);
      }
    }
    if (*apr) {
      std::optional<std::vector<double>> edges;
      if (!buckets.empty()) edges = ap::parse_bucket_edges(buckets);
      pipeline.apr(out, edges);
    }
    if (*analyze) {
      ap::AnalyzeOptions options;
      for (const auto& w : what) {
        if (w == "all") {
          for (auto k : {ap::AnalysisKind::forest, ap::AnalysisKind::shapley, ap::AnalysisKind::kmeans,
                         ap::AnalysisKind::anova})
            options.what.push_back(k);
          continue;
        }
        auto k = ap::analysis_kind_from_string(w);
        if (!k) throw argjudge::ConfigError("unknown analysis '" + w + "'");
        options.what.push_back(*k);
      }
      if (!features.empty()) options.features = features;
      if (!votes.empty()) options.votes = votes;
      pipeline.analyze(out, options);
    }
    if (*prompted) pipeline.improve_prompted(out, force);
    if (*refine) pipeline.improve_refine(out, force);
    if (*tournament) pipeline.improve_tournament(out, force);
    if (*serve) {
      ap::ServeOptions options;
      options.kinds = parse_kinds(kinds);
      if (port >= 0) options.port = port;
      if (!export_dir.empty()) options.export_dir = export_dir;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      pipeline.serve(out, options, [] { return g_stop.load(); });
    }
    if (*report) pipeline.report(out);
  } catch (const argjudge::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return config_error;
  } catch (const ap::DependencyError& e) {
    spdlog::error("{}", e.what());
    return dependency_error;
  } catch (const argjudge::CoverageError& e) {
    spdlog::error("{}", e.what());
    for (std::size_t i = 0; i < e.gaps().size() && i < 20; ++i) spdlog::error("  missing: {}", e.gaps()[i]);
    return runtime_error;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return runtime_error;
  }
  return ok;
}
