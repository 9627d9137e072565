#pragma once

// Evaluation report: everything the eval verb computes from transcripts,
// annotation records and model predictions, with JSONL and table renderers.

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avalon/annotation.hpp"
#include "avalon/backend.hpp"
#include "avalon/metrics.hpp"
#include "json.hpp"

namespace avalon {

// Transcripts tagged with the model or backend that played them.
struct GameSource {
  std::string label;
  std::vector<Transcript> games;
};

// One model answer to a summarization or guessing question.
struct ModelPrediction {
  std::string model;
  std::string source;
  TaskKind kind = TaskKind::SummarizationChoice;
  TaskSubject subject;
  std::vector<std::string> predicted;
  std::vector<std::string> gold;
  bool parsed = true;
};

struct PredictionOptions {
  std::string model = "gpt-3.5-turbo-1106";
  double temperature = 0.0;
  int max_retries = 2;
  bool summarization = true;
  bool guessing = true;
};

// Asks `backend` every summarization and guessing question of the games
// (observer = next seat, as for annotation tasks). Unparseable answers are
// kept with an empty prediction and parsed = false.
std::vector<ModelPrediction> run_predictions(const GameSource& source, ChatBackend& backend,
                                             const IntentionCatalog& catalog,
                                             const PredictionOptions& options = {});

struct Counts {
  int games = 0;
  int turns = 0;
  int selection_records = 0;
  int evaluated_pairs = 0;
  int following_records = 0;
  int summarization_questions = 0;
  int guessing_questions = 0;

  bool operator==(const Counts&) const = default;
};

struct MeanSd {
  double mean = 0.0;
  std::optional<double> sd;
  int n = 0;
};

struct F1Row {
  std::string who;     // model name, or "Human"
  std::string source;  // game source label
  TaskKind kind = TaskKind::SummarizationChoice;
  MeanSd f1;           // model rows: n = questions, no sd
  std::map<int, double> by_round;
  int unparsed = 0;
};

struct KappaRow {
  TaskKind kind = TaskKind::SelectionBinary;
  std::string grouping;
  KappaSummary summary;
};

struct CorrelationRow {
  std::string score;  // "selection", "following>=3", "following=3"
  CorrelationCell cell;
};

struct EvalReport {
  std::map<std::string, Counts> counts;  // by source
  std::optional<double> selection_accuracy;
  // Share of ratings 1..5; empty when there are no records.
  std::optional<std::array<double, 5>> following_thinking;
  std::optional<std::array<double, 5>> following_speaking;
  std::vector<F1Row> f1;
  std::vector<KappaRow> kappa;
  ImpactResult impactful;
  std::map<std::string, GamePerformance> performance;  // by source
  std::vector<CorrelationRow> correlation;

  // One JSON object per line, each tagged with "section".
  std::string to_jsonl() const;
  std::string to_table() const;
};

struct EvalOptions {
  // Ids used to build selection and following tasks.
  std::set<std::string> impactful;
  F1Average average = F1Average::Macro;
  ImpactRule rule;
  int kappa_min_shared = 1;
};

EvalReport evaluate(const std::vector<GameSource>& sources,
                    const std::vector<AnnotationRecord>& records,
                    const std::vector<ModelPrediction>& predictions,
                    const IntentionCatalog& catalog, const EvalOptions& options);

// IntentRevised ids of a discussion turn; empty if the turn is missing.
std::vector<std::string> revised_ids(const Transcript& t, Seat seat, int round, int attempt);

nlohmann::json to_json(const ModelPrediction& p);
ModelPrediction prediction_from_json(const nlohmann::json& j);

}  // namespace avalon
