#include "groupscope/cli.hpp"

#include <csignal>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "groupscope/api_service.hpp"
#include "groupscope/errors.hpp"
#include "groupscope/eval_harness.hpp"
#include "groupscope/payloads.hpp"
#include "groupscope/synthetic.hpp"
#include "groupscope/util.hpp"

namespace groupscope {

using nlohmann::json;

namespace {

struct Options {
  std::string dataset;
  std::string input;
  std::string schema;
  std::string out;
  std::string attribute;
  std::string model;
  std::string attrs;
  std::uint64_t seed = 7;

  // Embeddings
  std::string emb_a, emb_b;
  std::size_t emb_dim = 16;
  std::string oov = "hashed";
  std::uint64_t oov_seed = 13;

  // Training
  TrainingConfig train;

  // Split
  std::string fractions = "0.5,0.15,0.35";

  // Cues
  std::size_t top = 10;
  CriterionWeights weights;

  // Clustering
  std::size_t kmax = 10;

  // Trees and explanations
  std::size_t max_depth = TreeConfig{}.max_depth;
  std::size_t min_leaf = TreeConfig{}.min_leaf;
  std::string mode = "p";
  std::string fact, other;

  // Evaluation
  std::string source = "neural";
  bool histogram = false;
  bool baselines = false;
  std::string format = "json";

  // Serving
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;

  // Generators
  std::string kind = "planted";
  std::size_t n = 0;
};

std::vector<AttributeSchema> schema_of(const Options& o) {
  return o.schema.empty() ? default_schema() : load_schema(o.schema);
}

// A dataset argument is either a snapshot written by `ingest`/`split` or raw JSONL.
Dataset load_dataset(const Options& o) {
  if (o.dataset.empty()) throw ValidationError("--dataset is required");
  const std::string text = read_file(o.dataset);
  try {
    const auto j = json::parse(text);
    if (j.is_object() && j.contains("format")) return from_snapshot(j);
  } catch (const json::parse_error&) {
    // Multi-line JSONL.
  }
  return ingest_text(text, schema_of(o));
}

EmbeddingPair load_embeddings(const Options& o) {
  if (o.emb_a.empty() != o.emb_b.empty()) throw ValidationError("--emb-a and --emb-b must be given together");
  if (o.emb_a.empty()) return EmbeddingPair::synthetic(o.emb_dim, 101, 202);
  const OovPolicy policy = o.oov == "zero" ? OovPolicy::zero() : OovPolicy::hashed(o.oov_seed);
  return EmbeddingPair(load_table(o.emb_a, policy), load_table(o.emb_b, policy));
}

std::vector<std::string> attribute_list(const Options& o, const Dataset& d) {
  auto attrs = split_list(o.attrs);
  if (attrs.empty()) {
    for (const auto& s : d.schema()) attrs.push_back(s.name);
  }
  return attrs;
}

void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty()) {
    out << text;
  } else {
    write_file(o.out, text);
  }
}

SplitFractions parse_fractions(const std::string& text) {
  const auto parts = split_list(text);
  if (parts.size() != 3) throw ValidationError("--fractions needs three comma-separated values");
  SplitFractions f;
  try {
    f = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
  } catch (const std::exception&) {
    throw ValidationError("--fractions values must be numbers");
  }
  return f;
}

DecisionTree fit_default_tree(const Options& o, const Dataset& d) {
  return fit_tree(d, attribute_list(o, d), Group::red, TreeConfig{o.max_depth, o.min_leaf});
}

std::atomic<ApiService*> g_service{nullptr};

void stop_service(int) {
  if (auto* s = g_service.load()) s->stop();
}

int dispatch(const std::string& command, const Options& o, std::ostream& out, std::ostream& err) {
  if (command == "ingest") {
    if (o.input.empty()) throw ValidationError("--input is required");
    const Dataset d = ingest(std::filesystem::path(o.input), schema_of(o));
    emit(o, out, to_snapshot(d).dump() + "\n");
    err << dataset_summary(d).dump() << '\n';
  } else if (command == "split") {
    const Dataset d = assign_split(load_dataset(o), parse_fractions(o.fractions), o.seed);
    emit(o, out, to_snapshot(d).dump() + "\n");
    err << dataset_summary(d).dump() << '\n';
  } else if (command == "train") {
    const Dataset d = load_dataset(o);
    if (!d.has_split()) throw ValidationError("dataset has no split; run `split` first");
    TrainingConfig cfg = o.train;
    cfg.seed = o.seed;
    const auto model = train(d, o.attribute, load_embeddings(o), cfg,
                             [&](const EpochRecord& r) { err << to_json(r).dump() << '\n'; });
    emit(o, out, to_json(model).dump() + "\n");
  } else if (command == "eval") {
    const Dataset d = load_dataset(o);
    if (o.baselines) {
      TrainingConfig cfg = o.train;
      cfg.seed = o.seed;
      const auto table = compare_baselines(d, o.attribute, load_embeddings(o), cfg, {o.max_depth, o.min_leaf});
      emit(o, out, o.format == "text" ? render(table) : render_artifact(to_json(table)));
      return 0;
    }
    Evaluation e;
    if (o.source == "tree") {
      e = evaluate(fit_default_tree(o, d), d);
    } else if (o.source == "neural") {
      if (o.model.empty()) throw ValidationError("--model is required for neural evaluation");
      e = evaluate(load_model(o.model), d, load_embeddings(o));
    } else {
      throw ValidationError("--source must be neural or tree");
    }
    emit(o, out, render_artifact(o.histogram ? histogram_payload(e, d) : to_json(e)));
  } else if (command == "cues") {
    const Dataset d = load_dataset(o);
    if (o.model.empty()) throw ValidationError("--model is required");
    o.weights.validate();
    const auto model = load_model(o.model);
    auto cues = mine(model, d, load_embeddings(o));
    if (!(o.weights == CriterionWeights{})) cues = reweight(std::move(cues), o.weights);
    const auto top = o.top == 0 ? std::nullopt : std::optional<std::size_t>(o.top);
    emit(o, out, o.format == "json" ? render_artifact(cues_payload(d, model.attribute.name, cues, o.weights, top))
                                    : cues_jsonl(cues, top));
  } else if (command == "cluster") {
    const Dataset d = load_dataset(o);
    emit(o, out, render_artifact(subgroups_payload(cluster_subgroups(d, attribute_list(o, d), o.kmax), d)));
  } else if (command == "density") {
    const Dataset d = load_dataset(o);
    emit(o, out, render_artifact(density_payload(d, o.attribute)));
  } else if (command == "summarize") {
    const Dataset d = load_dataset(o);
    emit(o, out, render_artifact(summary_payload(d, split_list(o.attrs))));
  } else if (command == "explain") {
    const Dataset d = load_dataset(o);
    const auto mode = parse_mode(o.mode);
    if (o.fact.empty()) throw ValidationError("--fact is required");
    if (mode == ContrastMode::o && o.other.empty()) throw ValidationError("--other is required in o-mode");
    const auto tree = fit_default_tree(o, d);
    const auto other = o.other.empty() ? std::nullopt : std::optional<std::string>(o.other);
    emit(o, out, render_artifact(to_json(explain(tree, d, mode, o.fact, other), tree)));
  } else if (command == "serve") {
    ServiceConfig cfg;
    cfg.host = o.host;
    cfg.port = o.port;
    cfg.seed = o.seed;
    cfg.data_dir = o.data_dir;
    cfg.schema = schema_of(o);
    ApiService service(cfg, load_embeddings(o));
    if (!o.dataset.empty()) service.load_dataset(load_dataset(o));
    g_service = &service;
    std::signal(SIGINT, stop_service);
    std::signal(SIGTERM, stop_service);
    err << "listening on " << o.host << ":" << o.port << std::endl;
    service.serve(err);
    g_service = nullptr;
  } else if (command == "gen-corpus") {
    Dataset d;
    if (o.kind == "planted") {
      PlantedCorpusConfig cfg;
      cfg.seed = o.seed;
      if (o.n) cfg.instances = o.n;
      d = planted_corpus(cfg);
    } else if (o.kind == "blobs") {
      d = blob_corpus(o.n ? o.n : 600, o.seed).dataset;
    } else if (o.kind == "explain") {
      d = explanation_corpus(o.n ? o.n : 120, o.seed);
    } else {
      throw ValidationError("--kind must be planted, blobs or explain");
    }
    emit(o, out, to_jsonl(d));
  } else if (command == "gen-embeddings") {
    const Dataset d = load_dataset(o);
    std::vector<std::string> vocab;
    for (const auto& inst : d.instances()) vocab.insert(vocab.end(), inst.tokens.begin(), inst.tokens.end());
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    emit(o, out, generate_synthetic_table(vocab, o.emb_dim, o.seed).to_text());
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"groupscope: group profiling analytics", "groupscope"};
  app.require_subcommand(1);
  Options o;

  auto add_dataset = [&](CLI::App* s, bool required = true) {
    auto* opt = s->add_option("--dataset", o.dataset, "dataset snapshot or JSONL file")->check(CLI::ExistingFile);
    if (required) opt->required();
    s->add_option("--schema", o.schema, "attribute schema JSON (default: built-in seven attributes)")
        ->check(CLI::ExistingFile);
  };
  auto add_out = [&](CLI::App* s) { s->add_option("--out", o.out, "output path (default: stdout)"); };
  auto add_embeddings = [&](CLI::App* s) {
    s->add_option("--emb-a", o.emb_a, "first embedding table (text format)")->check(CLI::ExistingFile);
    s->add_option("--emb-b", o.emb_b, "second embedding table (text format)")->check(CLI::ExistingFile);
    s->add_option("--emb-dim", o.emb_dim, "per-table dimension of the built-in synthetic tables")
        ->capture_default_str();
    s->add_option("--oov", o.oov, "out-of-vocabulary policy")->check(CLI::IsMember({"zero", "hashed"}))
        ->capture_default_str();
    s->add_option("--oov-seed", o.oov_seed, "seed of hashed OOV vectors")->capture_default_str();
  };
  auto add_training = [&](CLI::App* s) {
    s->add_option("--lambda", o.train.lambda, "weight of the group loss")->capture_default_str();
    s->add_option("--lr", o.train.learning_rate, "Adam learning rate")->capture_default_str();
    s->add_option("--epochs", o.train.max_epochs, "maximum epochs")->capture_default_str();
    s->add_option("--batch", o.train.batch_size, "mini-batch size")->capture_default_str();
    s->add_option("--patience", o.train.early_stop_patience, "early stopping patience")->capture_default_str();
    s->add_option("--clip", o.train.gradient_clip_norm, "gradient norm clip")->capture_default_str();
    s->add_option("--hidden", o.train.hidden_size, "hidden units per direction")->capture_default_str();
  };
  auto add_tree = [&](CLI::App* s) {
    s->add_option("--attrs", o.attrs, "comma-separated attributes (default: all)");
    s->add_option("--max-depth", o.max_depth, "tree depth limit")->capture_default_str();
    s->add_option("--min-leaf", o.min_leaf, "minimum leaf size")->capture_default_str();
  };
  auto add_seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "random seed")->capture_default_str(); };

  auto* ingest_cmd = app.add_subcommand("ingest", "validate a JSONL corpus and write a dataset snapshot");
  ingest_cmd->add_option("--input", o.input, "JSONL corpus")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--schema", o.schema, "attribute schema JSON")->check(CLI::ExistingFile);
  add_out(ingest_cmd);

  auto* split_cmd = app.add_subcommand("split", "assign a stratified train/validate/test split");
  add_dataset(split_cmd);
  add_seed(split_cmd);
  split_cmd->add_option("--fractions", o.fractions, "train,validate,test fractions")->capture_default_str();
  add_out(split_cmd);

  auto* train_cmd = app.add_subcommand("train", "train a multi-task model for one attribute");
  add_dataset(train_cmd);
  train_cmd->add_option("--attribute", o.attribute, "attribute to model")->required();
  add_seed(train_cmd);
  add_training(train_cmd);
  add_embeddings(train_cmd);
  add_out(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model or the attribute tree on the test bucket");
  add_dataset(eval_cmd);
  eval_cmd->add_option("--source", o.source, "neural or tree")->check(CLI::IsMember({"neural", "tree"}))
      ->capture_default_str();
  eval_cmd->add_option("--model", o.model, "model snapshot (neural)")->check(CLI::ExistingFile);
  eval_cmd->add_flag("--histogram", o.histogram, "emit the dual-sided histogram payload");
  eval_cmd->add_flag("--baselines", o.baselines, "train and compare the baseline variants");
  eval_cmd->add_option("--attribute", o.attribute, "attribute for --baselines");
  eval_cmd->add_option("--format", o.format, "json or text (--baselines only)")
      ->check(CLI::IsMember({"json", "text"}));
  add_seed(eval_cmd);
  add_training(eval_cmd);
  add_tree(eval_cmd);
  add_embeddings(eval_cmd);
  add_out(eval_cmd);

  auto* cues_cmd = app.add_subcommand("cues", "mine and rank language cues");
  add_dataset(cues_cmd);
  cues_cmd->add_option("--model", o.model, "model snapshot")->required()->check(CLI::ExistingFile);
  cues_cmd->add_option("--top", o.top, "number of cues to write (0 = all)")->capture_default_str();
  cues_cmd->add_option("--u-p", o.weights.posterior, "posterior weight")->capture_default_str();
  cues_cmd->add_option("--u-l", o.weights.length, "length weight")->capture_default_str();
  cues_cmd->add_option("--u-r", o.weights.rank, "rank weight")->capture_default_str();
  cues_cmd->add_option("--u-f", o.weights.frequency, "frequency weight")->capture_default_str();
  cues_cmd->add_option("--format", o.format, "jsonl or json")->check(CLI::IsMember({"jsonl", "json"}));
  add_embeddings(cues_cmd);
  add_out(cues_cmd);

  auto* cluster_cmd = app.add_subcommand("cluster", "detect subgroups with Ward clustering");
  add_dataset(cluster_cmd);
  cluster_cmd->add_option("--attrs", o.attrs, "comma-separated attributes (default: all)");
  cluster_cmd->add_option("--kmax", o.kmax, "largest k on the elbow curve")->capture_default_str();
  add_out(cluster_cmd);

  auto* density_cmd = app.add_subcommand("density", "per-group density of one attribute");
  add_dataset(density_cmd);
  density_cmd->add_option("--attribute", o.attribute, "attribute")->required();
  add_out(density_cmd);

  auto* summarize_cmd = app.add_subcommand("summarize", "per-attribute group statistics and significance");
  add_dataset(summarize_cmd);
  summarize_cmd->add_option("--attrs", o.attrs, "comma-separated attributes (default: all)");
  add_out(summarize_cmd);

  auto* explain_cmd = app.add_subcommand("explain", "contrastive explanation of a classification");
  add_dataset(explain_cmd);
  explain_cmd->add_option("--mode", o.mode, "p or o")->check(CLI::IsMember({"p", "o"}))->capture_default_str();
  explain_cmd->add_option("--fact", o.fact, "instance to explain")->required();
  explain_cmd->add_option("--other", o.other, "contrasting instance (o-mode)");
  add_tree(explain_cmd);
  add_out(explain_cmd);

  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP/JSON service");
  add_dataset(serve_cmd, false);
  serve_cmd->add_option("--host", o.host, "bind address")->capture_default_str();
  serve_cmd->add_option("--port", o.port, "port")->capture_default_str();
  serve_cmd->add_option("--data-dir", o.data_dir, "directory for trained model snapshots");
  add_seed(serve_cmd);
  add_embeddings(serve_cmd);

  auto* gen_cmd = app.add_subcommand("gen-corpus", "write a synthetic JSONL corpus");
  gen_cmd->add_option("--kind", o.kind, "planted, blobs or explain")
      ->check(CLI::IsMember({"planted", "blobs", "explain"}))
      ->capture_default_str();
  gen_cmd->add_option("--n", o.n, "number of instances (default depends on kind)");
  add_seed(gen_cmd);
  add_out(gen_cmd);

  auto* emb_cmd = app.add_subcommand("gen-embeddings", "write a reproducible embedding table for a corpus vocabulary");
  add_dataset(emb_cmd);
  emb_cmd->add_option("--dim", o.emb_dim, "vector dimension")->capture_default_str();
  add_seed(emb_cmd);
  add_out(emb_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  if (o.format == "json" && cues_cmd->parsed() && cues_cmd->count("--format") == 0) o.format = "jsonl";
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, o, out, err);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const NotFoundError& e) {
    err << "not found: " << e.what() << '\n';
    return 1;
  } catch (const NoContrastError& e) {
    err << "no contrast: " << e.what() << '\n';
    return 1;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return 1;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace groupscope
