#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "matrag/agents.hpp"
#include "matrag/error.hpp"
#include "matrag/evalharness.hpp"
#include "matrag/index.hpp"
#include "matrag/kg.hpp"
#include "matrag/orchestrator.hpp"
#include "matrag/text.hpp"
#include "matrag/transparency.hpp"

#ifndef MATRAG_VERSION
#define MATRAG_VERSION "0.0.0"
#endif

namespace matrag::cli {
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << data;
  if (!out) throw IoError("write failed: " + path);
}

// Options shared by every data-touching subcommand.
struct Common {
  std::string config;
  std::map<std::string, std::string> fields;
  bool verbose = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_flag("-v,--verbose", c.verbose, "log progress to stderr");
  for (const auto& f : config_fields()) {
    const std::string flag = "--" + f.name;
    auto* opt = sub->add_option_function<std::string>(
        flag, [&c, name = f.name](const std::string& v) { c.fields[name] = v; }, f.help);
    if (f.kind == FieldKind::boolean) opt->expected(0, 1)->default_str("");
    if (f.name == "backend") opt->type_name("mock|http");
  }
}

struct Loaded {
  InteractionStore store;
  SplitAssignment split;
  InteractionStore train;
  std::optional<KnowledgeGraph> kg;
  std::optional<AliasTable> aliases;
  std::optional<AttributeTable> attributes;
  std::optional<VectorIndex> vectors;
};

InteractionStore load_store(const PipelineConfig& cfg) {
  if (cfg.paths.interactions.empty()) throw ConfigError("interactions", "path is required");
  return ingest_interactions(cfg.paths.interactions, {cfg.implicit_feedback});
}

std::optional<KnowledgeGraph> load_graph(const PipelineConfig& cfg,
                                         std::optional<AliasTable>& aliases) {
  if (!cfg.paths.aliases.empty()) aliases = load_aliases(cfg.paths.aliases);
  if (cfg.paths.triples.empty()) return std::nullopt;
  auto kg = load_triples(cfg.paths.triples);
  if (aliases) {
    const auto skipped = attach_aliases(kg, *aliases);
    if (skipped > 0) spdlog::warn("{} aliases name entities missing from the graph", skipped);
  }
  return kg;
}

Loaded load_all(const PipelineConfig& cfg) {
  Loaded d;
  d.store = load_store(cfg);
  if (!cfg.paths.split.empty()) {
    std::ifstream in(cfg.paths.split);
    if (!in) throw IoError("cannot open " + cfg.paths.split);
    d.split = read_split_manifest(in);
    const std::size_t covered = d.split.train.size() + d.split.valid.size() + d.split.test.size();
    if (covered != d.store.size()) {
      throw ConfigError("split", "manifest covers " + std::to_string(covered) +
                                     " interactions, the corpus has " +
                                     std::to_string(d.store.size()));
    }
  } else {
    d.split = temporal_split(d.store, cfg.split_ratios);
  }
  d.train = restrict_to(d.store, d.split, SplitPart::train);
  d.kg = load_graph(cfg, d.aliases);
  if (!cfg.paths.attributes.empty()) d.attributes = load_item_attributes(cfg.paths.attributes);
  if (!cfg.paths.vectors.empty()) {
    std::ifstream in(cfg.paths.vectors);
    if (!in) throw IoError("cannot open " + cfg.paths.vectors);
    d.vectors = VectorIndex::load(in, cfg.paths.vectors);
  }
  spdlog::info("loaded {} interactions ({} train), {} triples", d.store.size(), d.train.size(),
               d.kg ? d.kg->triple_count() : 0);
  return d;
}

template <class T>
const T* ptr(const std::optional<T>& o) {
  return o ? &*o : nullptr;
}

std::string ablation_label(const AblationFlags& a) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ",";
    out += name;
  };
  add(a.disable_user_agent, "disable_user_agent");
  add(a.disable_item_agent, "disable_item_agent");
  add(a.disable_reasoning_hybrid, "disable_reasoning_hybrid");
  add(a.disable_explanation, "disable_explanation");
  add(a.disable_kg, "disable_kg");
  add(a.disable_transparency, "disable_transparency");
  return out.empty() ? "full" : out;
}

// --- subcommands ------------------------------------------------------------

int cmd_ingest(PipelineConfig cfg, const std::string& out_path, std::ostream& out) {
  const std::string manifest = out_path.empty() ? cfg.paths.split : out_path;
  cfg.paths.split.clear();
  cfg.check_paths();
  const auto store = load_store(cfg);
  const auto split = temporal_split(store, cfg.split_ratios);
  std::ostringstream m;
  write_split_manifest(split, m);
  if (manifest.empty()) {
    out << m.str();
    return 0;
  }
  write_file(manifest, m.str());
  out << "interactions\t" << store.size() << "\n"
      << "users\t" << store.user_count() << "\n"
      << "items\t" << store.item_count() << "\n"
      << "train\t" << split.train.size() << "\n"
      << "valid\t" << split.valid.size() << "\n"
      << "test\t" << split.test.size() << "\n"
      << "manifest\t" << manifest << "\n";
  return 0;
}

int cmd_build_kg(const PipelineConfig& cfg, std::ostream& out) {
  cfg.check_paths();
  if (cfg.paths.triples.empty()) throw ConfigError("triples", "path is required");
  std::optional<AliasTable> aliases;
  const auto kg = load_graph(cfg, aliases);
  out << "entities\t" << kg->entity_count() << "\n"
      << "relations\t" << kg->relation_count() << "\n"
      << "triples\t" << kg->triple_count() << "\n"
      << "aliases\t" << (aliases ? aliases->size() : 0) << "\n";
  return 0;
}

int cmd_embed(PipelineConfig cfg, const std::string& out_path, std::ostream& out) {
  const std::string target = out_path.empty() ? cfg.paths.vectors : out_path;
  if (target.empty()) throw ConfigError("vectors", "an output path is required (--vectors or --out)");
  cfg.paths.vectors.clear();
  cfg.check_paths();
  if (cfg.paths.triples.empty()) throw ConfigError("triples", "path is required");
  std::optional<AliasTable> aliases;
  const auto kg = load_graph(cfg, aliases);
  const auto backend = make_backend(cfg.backend);
  VectorIndex index;
  for (std::uint32_t i = 0; i < kg->triple_count(); ++i) {
    const TripleId id{i};
    index.add(evidence_id(id), embed_text(*backend, verbalize_triple(*kg, id)));
  }
  std::ostringstream s;
  index.save(s);
  write_file(target, s.str());
  out << "vectors\t" << index.size() << "\n"
      << "dim\t" << index.dimension() << "\n"
      << "file\t" << target << "\n";
  return 0;
}

struct RecommendArgs {
  std::string user;
  std::optional<std::string> query;
  std::size_t k = 10;
  std::optional<std::string> mode;
  std::string constraints;
  std::vector<std::string> candidates;
};

int cmd_recommend(const PipelineConfig& cfg, const RecommendArgs& a, std::ostream& out) {
  cfg.check_paths();
  const auto d = load_all(cfg);
  const auto backend = make_backend(cfg.backend);
  Pipeline pipeline(*backend, cfg, d.train, ptr(d.kg), ptr(d.aliases), ptr(d.attributes),
                    ptr(d.vectors));
  RecommendationRequest req;
  req.user_id = a.user;
  req.query = a.query;
  req.k = a.k;
  req.mode = cfg.explanation_mode;
  req.candidate_pool_size = cfg.pool_size;
  if (!a.constraints.empty()) req.constraints = parse_constraints(a.constraints);
  if (!a.candidates.empty()) req.candidates = a.candidates;
  const auto resp = pipeline.handle(req);
  for (const auto& note : resp.degraded) spdlog::warn("degraded: {}", note);
  out << to_json(resp) << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string out;
  std::string rows;
  bool table = false;
  std::string part = "test";
};

int cmd_evaluate(const PipelineConfig& cfg, const EvaluateArgs& a, std::ostream& out) {
  cfg.check_paths();
  const auto d = load_all(cfg);
  const auto backend = make_backend(cfg.backend);
  Pipeline pipeline(*backend, cfg, d.train, ptr(d.kg), ptr(d.aliases), ptr(d.attributes),
                    ptr(d.vectors));
  EvalOptions opts;
  opts.negatives = cfg.negatives;
  opts.ks = cfg.eval_ks;
  opts.seed = cfg.seed;
  opts.parallelism = backend->parallelism_limit();
  opts.explain_fraction = cfg.explain_fraction;
  if (a.part == "test") opts.part = SplitPart::test;
  else if (a.part == "valid") opts.part = SplitPart::valid;
  else throw ConfigError("part", "expected test or valid, got '" + a.part + "'");

  ScoreFn scorer = [&](const std::string& user, std::span<const std::string> items) {
    return pipeline.score_items(user, items);
  };
  ExplainFn explainer = [&](const std::string& user, const std::string& item) {
    return pipeline.explain(user, item);
  };
  auto report = evaluate(scorer, d.store, d.split, opts, explainer);
  report.label = ablation_label(cfg.ablation);
  spdlog::info("evaluated {} cases, skipped {}", report.rows.size(), report.skipped);

  const auto json = report.to_json();
  if (!a.out.empty()) write_file(a.out, json + "\n");
  if (!a.rows.empty()) write_file(a.rows, report.rows_tsv());
  if (a.table) out << report.to_table();
  else if (a.out.empty()) out << json << "\n";
  return 0;
}

struct ScoreArgs {
  std::string explanation;
  std::string evidence;
  std::string profile;
  std::string item = "item";
  bool json = false;
};

// Evidence lines: "[E:<id>] statement" (several tags allowed). Blank lines and
// lines starting with '#' are skipped.
ReasoningChain read_evidence(const std::string& path, const std::string& item) {
  ReasoningChain chain{item, {}};
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto tags = text::extract_tags(t);
    if (tags.empty()) throw ParseError(path + ":" + std::to_string(n) + ": evidence line has no [E:id] tag", n);
    chain.steps.push_back({text::collapse_whitespace(text::strip_tags(t)), std::move(tags), false});
  }
  return chain;
}

int cmd_score(const PipelineConfig& cfg, const ScoreArgs& a, std::ostream& out,
              std::ostream& err) {
  const auto backend = make_backend(cfg.backend);
  Recommendation rec;
  rec.item_id = a.item;
  rec.chain = read_evidence(a.evidence, a.item);
  UserProfile profile;
  profile.user_id = "user";
  if (!a.profile.empty()) {
    for (auto& [k, v] : parse_profile_reply(read_file(a.profile))) {
      profile.facets.push_back({std::move(k), std::move(v), 1.0, FacetSource::explicit_pref});
    }
    canonicalize(profile.facets);
  }
  const auto expl = make_explanation(a.item, cfg.explanation_mode,
                                     std::string(text::trim(read_file(a.explanation))));
  const auto score = score_explanation(expl, rec, profile, nullptr, *backend,
                                       {cfg.transparency, cfg.backend_claims, cfg.seed});
  for (const auto& f : score.flags) err << "warning: " << f << "\n";
  if (a.json) {
    std::ostringstream s;
    s << "{\"item_id\": \"" << a.item << "\", \"faithfulness\": " << text::format_shortest(score.faithfulness)
      << ", \"coherence\": " << text::format_shortest(score.coherence)
      << ", \"personalization\": " << text::format_shortest(score.personalization)
      << ", \"composite\": " << text::format_shortest(score.composite) << "}\n";
    out << s.str();
  } else {
    out << format_score_line(a.item, score);
  }
  return 0;
}

}  // namespace

PipelineConfig resolve_config(const std::string& config_path,
                              const std::map<std::string, std::string>& overrides) {
  PipelineConfig cfg;
  if (!config_path.empty()) {
    cfg = load_config(config_path);
    const auto base = fs::path(config_path).parent_path();
    for (auto* p : {&cfg.paths.interactions, &cfg.paths.triples, &cfg.paths.attributes,
                    &cfg.paths.aliases, &cfg.paths.vectors, &cfg.paths.split}) {
      if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
    }
  }
  cfg.backend.seed = cfg.seed;
  cfg.backend = descriptor_from_env(cfg.backend);
  cfg.seed = cfg.backend.seed;
  for (const auto& [name, value] : overrides) set_config_field(cfg, name, value);
  cfg.backend.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-graph grounded recommendation with explanations", "matrag"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Common common;
  std::string out_path;
  RecommendArgs rec;
  EvaluateArgs eval;
  ScoreArgs score;

  auto* ingest = app.add_subcommand("ingest", "validate interactions and write the split manifest");
  add_common(ingest, common);
  ingest->add_option("--out", out_path, "manifest path (defaults to the split path, else stdout)");

  auto* build_kg = app.add_subcommand("build-kg", "load the triple file and report counts");
  add_common(build_kg, common);

  auto* embed = app.add_subcommand("embed", "precompute triple vectors");
  add_common(embed, common);
  embed->add_option("--out", out_path, "vector file (defaults to the vectors path)");

  auto* recommend = app.add_subcommand("recommend", "recommend items for a user as JSON");
  add_common(recommend, common);
  recommend->add_option("--user", rec.user, "user id")->required();
  recommend->add_option_function<std::string>(
      "--query", [&](const std::string& q) { rec.query = q; }, "natural-language request");
  recommend->add_option("--k", rec.k, "number of recommendations")->check(CLI::PositiveNumber);
  recommend->add_option_function<std::string>(
      "--mode", [&](const std::string& m) { rec.mode = m; }, "concise|detailed|comparative");
  recommend->add_option("--constraints", rec.constraints, "e.g. \"genre=drama,price<=20\"");
  recommend->add_option("--candidates", rec.candidates, "explicit candidates to re-rank")
      ->delimiter(',');

  auto* evaluate_cmd = app.add_subcommand("evaluate", "leave-one-out ranking evaluation");
  add_common(evaluate_cmd, common);
  evaluate_cmd->add_option("--out", eval.out, "write the JSON report here");
  evaluate_cmd->add_option("--rows", eval.rows, "write per-case metrics (TSV) here");
  evaluate_cmd->add_flag("--table", eval.table, "print a text table instead of JSON");
  evaluate_cmd->add_option("--part", eval.part, "held-out part: test|valid");

  auto* score_cmd =
      app.add_subcommand("score-explanation", "score an explanation against evidence");
  add_common(score_cmd, common);
  score_cmd->add_option("--explanation", score.explanation, "explanation text file")
      ->required()
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--evidence", score.evidence, "evidence file, one \"[E:id] text\" per line")
      ->required()
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--profile", score.profile, "profile file of key=value lines")
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--item", score.item, "item id for the output line");
  score_cmd->add_flag("--json", score.json, "print JSON instead of a TSV line");
  score_cmd->add_option_function<std::string>(
      "--mode", [&](const std::string& m) { rec.mode = m; }, "concise|detailed|comparative");

  auto* version = app.add_subcommand("version", "print build information");

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    err << "matrag: unknown subcommand '" << argv[1] << "'\n" << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    // usage goes to stderr for every parse failure
    const int code = app.exit(e, err, err);
    return code == 0 ? 2 : code;
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("matrag", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(common.verbose ? spdlog::level::info : spdlog::level::warn);
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> p;
    ~Restore() { spdlog::set_default_logger(p); }
  } restore{previous};

  try {
    if (version->parsed()) {
      out << "matrag " << MATRAG_VERSION << "\n"
          << "compiler " << __VERSION__ << "\n"
          << "c++ " << __cplusplus << "\n"
          << "config fields " << config_fields().size() << "\n";
      return 0;
    }
    auto overrides = common.fields;
    if (rec.mode) overrides["explanation_mode"] = *rec.mode;
    const auto cfg = resolve_config(common.config, overrides);

    if (ingest->parsed()) return cmd_ingest(cfg, out_path, out);
    if (build_kg->parsed()) return cmd_build_kg(cfg, out);
    if (embed->parsed()) return cmd_embed(cfg, out_path, out);
    if (recommend->parsed()) return cmd_recommend(cfg, rec, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(cfg, eval, out);
    if (score_cmd->parsed()) return cmd_score(cfg, score, out, err);
  } catch (const ConfigError& e) {
    err << "matrag: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    err << "matrag: parse error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    err << "matrag: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "matrag: unexpected failure: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace matrag::cli
