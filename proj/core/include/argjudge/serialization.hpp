#pragma once

#include <nlohmann/json.hpp>

#include "argjudge/analysis.hpp"
#include "argjudge/corpus.hpp"
#include "argjudge/ranking_run.hpp"
#include "argjudge/rationale_quality.hpp"
#include "argjudge/tournament.hpp"

namespace argjudge {

// JSON forms of pipeline records, as stored in run stage files. Every record has
// an "id" field. Readers throw StoreError on missing or ill-typed fields.

nlohmann::json to_json(const Argument& a);
Argument argument_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ArgumentPair& p);
ArgumentPair pair_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Rationale& r);
Rationale rationale_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelDecision& d);
ModelDecision decision_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ComparisonOutcome& o);
ComparisonOutcome outcome_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Scoreboard& b);
Scoreboard scoreboard_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FeatureRow& r);

}  // namespace argjudge
