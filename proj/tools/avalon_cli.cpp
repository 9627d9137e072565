// avalon: play games, build annotation bundles, serve the annotation API,
// evaluate and report.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "avalon/annotation.hpp"
#include "avalon/batch.hpp"
#include "avalon/context.hpp"
#include "avalon/report.hpp"
#include "avalon/server.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace avalon;

namespace {

// Effective settings: defaults, then the config file, then the
// environment, then flags.
struct Settings {
  int games = 1;
  std::uint64_t seed = 0;
  std::string backend = "scripted";
  std::string out = "games";
  int threads = 0;
  std::string model = "gpt-3.5-turbo-1106";
  double temperature = 0.8;
  double malformed_rate = 0.1;
  std::string api_base;
  std::string api_key;
  double requests_per_second = 0.0;
  std::optional<std::array<int, kRounds>> team_sizes;
};

void apply_file(Settings& s, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  json j = json::parse(in);
  s.games = j.value("games", s.games);
  s.seed = j.value("seed", s.seed);
  s.backend = j.value("backend", s.backend);
  s.out = j.value("out", s.out);
  s.threads = j.value("threads", s.threads);
  s.model = j.value("model", s.model);
  s.temperature = j.value("temperature", s.temperature);
  s.malformed_rate = j.value("malformed_rate", s.malformed_rate);
  s.api_base = j.value("api_base", s.api_base);
  s.requests_per_second = j.value("requests_per_second", s.requests_per_second);
  if (j.contains("quest_team_sizes")) s.team_sizes = j.at("quest_team_sizes").get<std::array<int, kRounds>>();
}

void apply_env(Settings& s) {
  if (const char* v = std::getenv("AVALON_API_BASE")) s.api_base = v;
  if (const char* v = std::getenv("AVALON_API_KEY")) s.api_key = v;
  if (const char* v = std::getenv("AVALON_MODEL")) s.model = v;
}

std::vector<Transcript> load_games(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::string> warnings;
  auto games = TranscriptStore(dir).load_all(&warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return games;
}

// "label=dir" or "dir" (label = directory name).
GameSource load_source(const std::string& spec) {
  GameSource src;
  fs::path dir;
  if (auto eq = spec.find('='); eq != std::string::npos) {
    src.label = spec.substr(0, eq);
    dir = spec.substr(eq + 1);
  } else {
    dir = spec;
    src.label = fs::path(spec).lexically_normal().filename().string();
    if (src.label.empty()) src.label = fs::path(spec).parent_path().filename().string();
  }
  src.games = load_games(dir);
  return src;
}

std::shared_ptr<ChatBackend> make_remote(const Settings& s) {
  HttpBackendConfig c;
  c.base_url = s.api_base;
  c.api_key = s.api_key;
  c.requests_per_second = s.requests_per_second;
  std::shared_ptr<RateLimiter> limiter;
  if (c.requests_per_second > 0) limiter = std::make_shared<RateLimiter>(c.requests_per_second);
  return std::make_shared<HttpChatBackend>(c, limiter);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// --- verbs -------------------------------------------------------------------

int run_play(const Settings& s, bool as_json, bool force) {
  if (s.games < 1) throw std::runtime_error("--games must be at least 1");
  const fs::path out(s.out);
  if (fs::exists(out) && !fs::is_empty(out) && !force) {
    throw std::runtime_error("output directory " + out.string() + " is not empty (use --force)");
  }
  if (force && fs::exists(out)) {
    for (const auto& e : fs::directory_iterator(out)) {
      if (e.path().extension() == ".jsonl") fs::remove(e.path());
    }
  }
  fs::create_directories(out);

  BatchSpec spec;
  spec.n_games = s.games;
  spec.seed = s.seed;
  if (s.team_sizes) spec.config.quest_team_sizes = *s.team_sizes;
  spec.config.validate();
  LlmAgent::Options llm;
  llm.model = s.model;
  llm.temperature = s.temperature;
  if (s.backend == "scripted") {
    spec.make_agents = [](int, std::uint64_t seed) { return scripted_agents(ScriptPolicy{}, seed); };
  } else if (s.backend == "mock") {
    SyntheticBackend::Options syn;
    syn.malformed_rate = s.malformed_rate;
    spec.make_agents = [syn, llm](int, std::uint64_t seed) { return mock_agents(seed, syn, llm); };
  } else if (s.backend == "remote") {
    auto backend = make_remote(s);
    spec.make_agents = [backend, llm](int, std::uint64_t) { return remote_agents(backend, llm); };
  } else {
    throw std::runtime_error("unknown backend '" + s.backend + "' (scripted, mock, remote)");
  }

  const auto records = play_batch_parallel(spec, s.threads);
  TranscriptStore store(out);
  int loyal = 0, evil = 0, aborted = 0, fallbacks = 0;
  json games = json::array();
  for (const auto& r : records) {
    for (const auto& e : r.events) store.append(r.game_id, e);
    fallbacks += r.fallbacks;
    if (!r.error.empty()) ++aborted;
    else if (r.winner == Alignment::Loyal) ++loyal;
    else ++evil;
    json g = {{"game_id", r.game_id},
              {"winner", r.winner ? json(to_string(*r.winner)) : json(nullptr)},
              {"reason", to_string(r.reason)},
              {"fallbacks", r.fallbacks}};
    if (!r.error.empty()) g["error"] = r.error;
    games.push_back(g);
  }
  store.flush();

  if (as_json) {
    std::cout << json{{"games", games},
                      {"loyal_wins", loyal},
                      {"evil_wins", evil},
                      {"aborted", aborted},
                      {"fallbacks", fallbacks},
                      {"out", out.string()}}
                     .dump(2)
              << "\n";
  } else {
    for (const auto& g : games) {
      std::cout << g["game_id"].get<std::string>() << "  "
                << (g["winner"].is_null() ? "aborted" : g["winner"].get<std::string>()) << "  "
                << g["reason"].get<std::string>() << "\n";
    }
    std::cout << "loyal " << loyal << ", evil " << evil << ", aborted " << aborted
              << ", fallbacks " << fallbacks << " -> " << out.string() << "\n";
  }
  return aborted ? 1 : 0;
}

struct BundleArgs {
  std::string games;
  std::vector<std::string> annotators;
  std::uint64_t seed = 0;
  int shared = 2;
  int max_summarization = -1;
  int max_guessing = -1;
  std::string out = "bundles.json";
};

int run_bundle(const BundleArgs& a, bool as_json) {
  const auto& catalog = IntentionCatalog::builtin();
  BundleOptions o;
  o.annotators = a.annotators;
  o.seed = a.seed;
  o.shared_bundles = a.shared;
  auto ids = catalog.impactful_ids();
  o.tasks.impactful = {ids.begin(), ids.end()};
  o.tasks.max_summarization = a.max_summarization;
  o.tasks.max_guessing = a.max_guessing;
  const auto bundles = build_bundles(load_games(a.games), catalog, o);
  json j = json::array();
  for (const auto& b : bundles) j.push_back(b.to_json(true));
  write_file(a.out, j.dump() + "\n");
  json summary = json::array();
  for (const auto& b : bundles) summary.push_back(b.to_json(false));
  if (as_json) {
    std::cout << summary.dump(2) << "\n";
  } else {
    for (const auto& b : bundles) {
      std::cout << b.bundle_id << (b.shared ? " (shared)" : "") << ": " << b.game_ids.size()
                << " games, " << b.tasks.size() << " tasks\n";
    }
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

std::vector<TaskBundle> read_bundles(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<TaskBundle> out;
  for (const auto& b : json::parse(in)) out.push_back(TaskBundle::from_json(b));
  return out;
}

struct ServeArgs {
  std::string bundles = "bundles.json";
  std::string store = "records.jsonl";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  int lease_minutes = 15;
};

int run_serve(const ServeArgs& a) {
  ServiceOptions o;
  o.lease = std::chrono::minutes(a.lease_minutes);
  AnnotationService service(read_bundles(a.bundles), a.store, o);
  std::optional<fs::path> dir;
  if (!a.static_dir.empty()) dir = a.static_dir;
  AnnotationServer server(service, dir);
  std::cerr << "serving on http://" << a.host << ":" << a.port << "\n";
  server.listen(a.host, a.port);
  return 0;
}

struct EvalArgs {
  std::vector<std::string> games;
  std::string records;
  std::string predictions;
  std::string predict = "none";
  std::string out;
  std::string format = "table";
  bool micro = false;
  int kappa_min_shared = 1;
};

std::vector<ModelPrediction> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<ModelPrediction> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(prediction_from_json(json::parse(line)));
  }
  return out;
}

int run_eval(const EvalArgs& a, const Settings& s, bool as_json, bool write_outputs) {
  const auto& catalog = IntentionCatalog::builtin();
  std::vector<GameSource> sources;
  for (const auto& g : a.games) sources.push_back(load_source(g));

  std::vector<AnnotationRecord> records;
  if (!a.records.empty()) records = load_records(a.records);

  std::vector<ModelPrediction> predictions;
  if (!a.predictions.empty()) predictions = read_predictions(a.predictions);
  if (a.predict != "none") {
    PredictionOptions po;
    po.model = a.predict == "mock" ? "mock" : s.model;
    for (const auto& src : sources) {
      std::shared_ptr<ChatBackend> backend;
      if (a.predict == "mock") {
        SyntheticBackend::Options syn;
        syn.seed = derive_seed(s.seed, 0xE7A1);
        syn.malformed_rate = s.malformed_rate;
        backend = std::make_shared<SyntheticBackend>(syn);
      } else if (a.predict == "remote") {
        backend = make_remote(s);
      } else {
        throw std::runtime_error("unknown --predict '" + a.predict + "' (none, mock, remote)");
      }
      auto p = run_predictions(src, *backend, catalog, po);
      predictions.insert(predictions.end(), p.begin(), p.end());
    }
  }

  EvalOptions eo;
  auto ids = catalog.impactful_ids();
  eo.impactful = {ids.begin(), ids.end()};
  eo.average = a.micro ? F1Average::Micro : F1Average::Macro;
  eo.kappa_min_shared = a.kappa_min_shared;
  const EvalReport report = evaluate(sources, records, predictions, catalog, eo);

  if (write_outputs && !a.out.empty()) {
    write_file(fs::path(a.out) / "report.jsonl", report.to_jsonl());
    write_file(fs::path(a.out) / "report.txt", report.to_table());
    std::string lines;
    for (const auto& p : predictions) lines += to_json(p).dump() + "\n";
    write_file(fs::path(a.out) / "predictions.jsonl", lines);
  }
  if (as_json || a.format == "json") {
    std::cout << report.to_jsonl();
  } else if (a.format == "table") {
    std::cout << report.to_table();
  } else {
    throw std::runtime_error("unknown --format '" + a.format + "' (table, json)");
  }
  return 0;
}

struct DumpArgs {
  std::string games;
  std::string game;
  std::string kind = "summarization";
  std::string player = "Player1";
  std::string observer;
  int round = 1;
  int attempt = 0;
};

int run_dump(const DumpArgs& a, bool as_json) {
  const auto& catalog = IntentionCatalog::builtin();
  auto result = TranscriptStore(a.games).load(a.game);
  const Transcript& t = result.transcript;
  auto seat = [](const std::string& name) {
    auto s = parse_player_name(name);
    if (!s) throw std::runtime_error("bad player name '" + name + "'");
    return *s;
  };
  std::optional<int> attempt;
  if (a.attempt > 0) attempt = a.attempt;
  ExportedContext ex;
  if (a.kind == "summarization") {
    ex = export_summarization_context(t, seat(a.player), a.round, catalog, attempt);
  } else if (a.kind == "guessing") {
    const Seat speaker = seat(a.player);
    const Seat observer = a.observer.empty() ? (speaker + 1) % kPlayers : seat(a.observer);
    ex = export_guessing_context(t, observer, speaker, a.round, catalog, attempt);
  } else {
    throw std::runtime_error("unknown --kind '" + a.kind + "' (summarization, guessing)");
  }
  if (as_json) {
    std::cout << json{{"text", ex.text}, {"options", ex.options.ids}, {"gold", ex.gold},
                      {"round", ex.round}, {"attempt", ex.attempt}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << ex.text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intention-guided Avalon agents: play, annotate, evaluate"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable output");

  // play
  Settings settings;
  std::string config_path;
  bool force = false;
  auto* play = app.add_subcommand("play", "Run a batch of games");
  play->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* o_games = play->add_option("--games", settings.games, "Number of games");
  auto* o_backend = play->add_option("--backend", settings.backend, "scripted | mock | remote");
  auto* o_seed = play->add_option("--seed", settings.seed, "Batch seed");
  auto* o_out = play->add_option("--out", settings.out, "Transcript directory");
  auto* o_threads = play->add_option("--threads", settings.threads, "Worker threads (0 = all)");
  auto* o_model = play->add_option("--model", settings.model, "Model name for LLM agents");
  auto* o_malformed =
      play->add_option("--malformed-rate", settings.malformed_rate, "Mock: share of bad replies");
  play->add_flag("--force", force, "Overwrite transcripts in --out");

  // bundle
  BundleArgs bundle_args;
  auto* bundle = app.add_subcommand("bundle", "Build annotation bundles");
  bundle->add_option("--games", bundle_args.games, "Transcript directory")->required();
  bundle->add_option("--annotators", bundle_args.annotators, "Annotator ids")
      ->required()
      ->delimiter(',');
  bundle->add_option("--seed", bundle_args.seed, "Assignment seed");
  bundle->add_option("--shared", bundle_args.shared, "Shared bundles");
  bundle->add_option("--max-summarization", bundle_args.max_summarization,
                     "Summarization questions per game (-1 = all)");
  bundle->add_option("--max-guessing", bundle_args.max_guessing,
                     "Guessing questions per game (-1 = all)");
  bundle->add_option("--out", bundle_args.out, "Bundle file");

  // serve
  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Serve the annotation API");
  serve->add_option("--bundles", serve_args.bundles, "Bundle file")->check(CLI::ExistingFile);
  serve->add_option("--store", serve_args.store, "Record store (JSONL)");
  serve->add_option("--host", serve_args.host, "Listen address");
  serve->add_option("--port", serve_args.port, "Listen port");
  serve->add_option("--static", serve_args.static_dir, "Console assets to serve at /");
  serve->add_option("--lease-minutes", serve_args.lease_minutes, "Task lease duration");

  // eval / report share inputs
  EvalArgs eval_args;
  auto add_eval_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--games", eval_args.games, "Transcript directory, optionally label=dir")
        ->required();
    cmd->add_option("--records", eval_args.records, "Annotation records (JSONL)");
    cmd->add_option("--predictions", eval_args.predictions, "Saved model predictions (JSONL)");
    cmd->add_flag("--micro", eval_args.micro, "Micro-averaged F1");
    cmd->add_option("--kappa-min-shared", eval_args.kappa_min_shared,
                    "Shared items a pair needs for kappa");
  };
  auto* eval = app.add_subcommand("eval", "Evaluate games, annotations and model predictions");
  add_eval_inputs(eval);
  eval->add_option("--predict", eval_args.predict, "none | mock | remote");
  eval->add_option("--out", eval_args.out, "Directory for report.jsonl, report.txt, predictions");
  eval->add_option("--seed", settings.seed, "Seed for the mock predictor");
  eval->add_option("--model", settings.model, "Model name for remote predictions");
  eval->add_option("--format", eval_args.format, "table | json");
  auto* report = app.add_subcommand("report", "Render the evaluation tables");
  add_eval_inputs(report);
  report->add_option("--format", eval_args.format, "table | json");

  // dump
  DumpArgs dump_args;
  auto* dump = app.add_subcommand("dump", "Print a structured context");
  dump->add_option("--games", dump_args.games, "Transcript directory")->required();
  dump->add_option("--game", dump_args.game, "Game id, e.g. game-0001")->required();
  dump->add_option("--kind", dump_args.kind, "summarization | guessing");
  dump->add_option("--player", dump_args.player, "Speaker (summarization: the summarizer)");
  dump->add_option("--observer", dump_args.observer, "Guessing observer (default: next seat)");
  dump->add_option("--round", dump_args.round, "Round");
  dump->add_option("--attempt", dump_args.attempt, "Proposal attempt (0 = last spoken)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*play) {
      // Flags win over env, env over the file.
      Settings flags = settings;
      Settings s;
      if (!config_path.empty()) apply_file(s, config_path);
      apply_env(s);
      if (o_games->count()) s.games = flags.games;
      if (o_backend->count()) s.backend = flags.backend;
      if (o_seed->count()) s.seed = flags.seed;
      if (o_out->count()) s.out = flags.out;
      if (o_threads->count()) s.threads = flags.threads;
      if (o_model->count()) s.model = flags.model;
      if (o_malformed->count()) s.malformed_rate = flags.malformed_rate;
      return run_play(s, as_json, force);
    }
    if (*bundle) return run_bundle(bundle_args, as_json);
    if (*serve) return run_serve(serve_args);
    if (*eval || *report) {
      Settings s = settings;
      apply_env(s);
      if (eval->get_option("--model")->count()) s.model = settings.model;
      return run_eval(eval_args, s, as_json, static_cast<bool>(*eval));
    }
    if (*dump) return run_dump(dump_args, as_json);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
