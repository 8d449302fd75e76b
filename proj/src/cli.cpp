#include "citegen/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "citegen/corpus.hpp"
#include "citegen/errors.hpp"
#include "citegen/fid_model.hpp"
#include "citegen/intent.hpp"
#include "citegen/io.hpp"
#include "citegen/metrics.hpp"
#include "citegen/retrieval.hpp"
#include "citegen/text.hpp"
#include "citegen/tokenizer.hpp"

namespace fs = std::filesystem;

namespace citegen {

namespace {

std::string to_text(const std::string& v) { return v; }
std::string to_text(bool v) { return v ? "true" : "false"; }
std::string to_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
template <typename T>
  requires std::is_integral_v<T>
std::string to_text(T v) {
  return std::to_string(v);
}

// Binds options to variables and remembers how to print their resolved
// values for the manifest.
class Recorder {
 public:
  explicit Recorder(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* option(const std::string& name, T& value, const std::string& help) {
    fields_.emplace_back(name, [&value] { return to_text(value); });
    return app_->add_option("--" + name, value, help)->capture_default_str();
  }

  CLI::Option* flag(const std::string& names, const std::string& name, bool& value, const std::string& help) {
    fields_.emplace_back(name, [&value] { return to_text(value); });
    return app_->add_flag(names, value, help);
  }

  std::map<std::string, std::string> resolved() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, get] : fields_) out[name] = get();
    return out;
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<std::string()>>> fields_;
};

// Bookkeeping shared by every command: resolved options, files read and
// files written, flushed to a manifest at the end.
class Run {
 public:
  Run(std::string command, const Recorder& recorder, std::uint64_t seed) {
    manifest_.command = std::move(command);
    manifest_.seed = seed;
    manifest_.config = recorder.resolved();
    std::string canonical;
    for (const auto& [k, v] : manifest_.config) canonical += k + "=" + v + "\n";
    manifest_.config_hash = hex64(fnv1a64(canonical));
  }

  const fs::path& input(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::kMissingFile, "no such file: " + path.string());
    manifest_.inputs[path.string()] = file_digest(path);
    return path;
  }

  void output(const fs::path& path) { outputs_.push_back(path); }

  void finish(const fs::path& manifest_path) {
    for (const auto& path : outputs_) manifest_.outputs[path.string()] = file_digest(path);
    write_manifest(manifest_path, manifest_);
  }

 private:
  Manifest manifest_;
  std::vector<fs::path> outputs_;
};

fs::path sidecar_manifest(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

DocumentIndex index_documents(const std::vector<Document>& documents) {
  DocumentIndex index;
  for (const auto& d : documents) index[d.id] = d;
  return index;
}

std::vector<CitationInstance> select_split(const std::vector<CitationInstance>& all, const std::string& name) {
  if (name == "all") return all;
  auto split = parse_split(name);
  if (!split) throw Error(ErrorCode::kConfigError, "unknown split " + name);
  std::vector<CitationInstance> out;
  for (const auto& c : all) {
    if (c.split == *split) out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out_dir;
  std::size_t n_single = 50;
  std::size_t n_multi = 10;
  std::size_t max_multi = 3;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a, const Recorder& rec) {
  Run run("synth", rec, a.seed);
  SyntheticSpec spec;
  spec.n_single = a.n_single;
  spec.n_multi = a.n_multi;
  spec.max_multi = a.max_multi;
  spec.seed = a.seed;
  if (spec.max_multi < 2 || spec.max_multi > kMaxCited) {
    throw Error(ErrorCode::kConfigError, "max-multi must lie in [2, 8]");
  }
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  const fs::path dir = a.out_dir;
  write_documents(dir / "documents.jsonl", corpus.documents);
  write_bodies(dir / "bodies.jsonl", corpus.bodies);
  write_key_table(dir / "keys.tsv", corpus.keys);
  write_dataset(dir / "gold.jsonl", corpus.gold);
  for (const char* name : {"documents.jsonl", "bodies.jsonl", "keys.tsv", "gold.jsonl"}) run.output(dir / name);
  run.finish(dir / "manifest.json");
  std::cerr << "synth: " << corpus.documents.size() << " documents, " << corpus.gold.size()
            << " gold instances\n";
  return exit_code::kOk;
}

// ---------------------------------------------------------- train-intent

struct TrainIntentArgs {
  std::string data;
  std::string out;
  std::size_t epochs = 20;
  double lr = 0.5;
  std::size_t batch_size = 16;
  std::size_t feature_dim = kDefaultFeatureDim;
  std::uint64_t seed = 0;
};

int cmd_train_intent(const TrainIntentArgs& a, const Recorder& rec) {
  Run run("train-intent", rec, a.seed);
  const auto instances = read_dataset(run.input(a.data));
  IntentTrainOptions options;
  options.epochs = a.epochs;
  options.lr = a.lr;
  options.batch_size = a.batch_size;
  options.feature_dim = a.feature_dim;
  options.seed = a.seed;
  if (options.feature_dim == 0) throw Error(ErrorCode::kConfigError, "feature-dim must be positive");
  const auto examples = labeled_windows(instances);
  const IntentModel model = train_intent(examples, options);
  std::size_t correct = 0;
  for (const auto& e : examples) correct += predict_intent(model, e.text).label == e.label;
  model.save(a.out);
  run.output(a.out);
  run.finish(sidecar_manifest(a.out));
  std::cerr << "train-intent: " << examples.size() << " windows, training accuracy "
            << static_cast<double>(correct) / static_cast<double>(examples.size()) << "\n";
  return exit_code::kOk;
}

// ---------------------------------------------------------- build-corpus

struct BuildCorpusArgs {
  std::string documents;
  std::string bodies;
  std::string keys;
  std::string intent_model;
  std::string out_dir;
  std::uint64_t seed = 1;
};

int cmd_build_corpus(const BuildCorpusArgs& a, const Recorder& rec) {
  Run run("build-corpus", rec, a.seed);
  const auto documents = read_documents(run.input(a.documents));
  const auto bodies = read_bodies(run.input(a.bodies));
  const auto keys = read_key_table(run.input(a.keys));
  const IntentModel model = IntentModel::load(run.input(a.intent_model));
  BuildResult built = build_dataset(documents, bodies, keys, [&](const std::string& target, std::size_t n) {
    return label_citations(model, target, n);
  });
  for (const auto& warning : built.stats.warnings) std::cerr << "warning: " << warning << "\n";
  split_dataset(built.instances, a.seed);

  const fs::path dir = a.out_dir;
  write_dataset(dir / "dataset.jsonl", built.instances);
  run.output(dir / "dataset.jsonl");
  for (Split split : {Split::kTrain, Split::kValid, Split::kTest}) {
    std::vector<TextRecord> refs;
    for (const auto& c : built.instances) {
      if (c.split == split) refs.push_back({c.id, c.target});
    }
    const fs::path path = dir / ("refs_" + std::string(to_string(split)) + ".jsonl");
    write_records(path, refs);
    run.output(path);
  }
  run.finish(dir / "manifest.json");
  std::cerr << "build-corpus: " << built.stats.groups << " groups, " << built.stats.accepted << " instances, "
            << built.stats.unresolved_skipped << " skipped unresolved, " << built.stats.max_refs_rejected
            << " rejected over eight references\n";
  return exit_code::kOk;
}

// ------------------------------------------------------------- train-fid

struct TrainFidArgs {
  std::string dataset;
  std::string documents;
  std::string out_dir;
  bool use_intent = true;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 2;
  std::size_t ffn_dim = 256;
  std::size_t block_len = 64;
  std::size_t target_len = 32;
  double dropout = 0.0;
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double grad_clip = 1.0;
  std::size_t min_freq = 1;
  std::size_t max_vocab = 20000;
  std::uint64_t seed = 1;
};

int cmd_train_fid(const TrainFidArgs& a, const Recorder& rec) {
  Run run("train-fid", rec, a.seed);
  const auto instances = read_dataset(run.input(a.dataset));
  const auto documents = index_documents(read_documents(run.input(a.documents)));
  const auto train_part = select_split(instances, "train");
  const auto valid_part = select_split(instances, "valid");
  if (train_part.empty()) throw Error(ErrorCode::kConfigError, "dataset has no train split");

  const Vocabulary vocab = training_vocabulary(train_part, documents, a.min_freq, a.max_vocab);

  ModelConfig config;
  config.vocab_size = vocab.size();
  config.d_model = a.d_model;
  config.n_heads = a.n_heads;
  config.n_enc_layers = a.enc_layers;
  config.n_dec_layers = a.dec_layers;
  config.ffn_dim = a.ffn_dim;
  config.block_len = a.block_len;
  config.target_len = a.target_len;
  config.dropout = a.dropout;
  config.validate();

  std::vector<TrainingExample> train_set, valid_set;
  for (const auto& c : train_part) train_set.push_back(make_example(vocab, c, documents, config, a.use_intent));
  for (const auto& c : valid_part) valid_set.push_back(make_example(vocab, c, documents, config, a.use_intent));

  TrainOptions options;
  options.lr = a.lr;
  options.beta1 = a.beta1;
  options.beta2 = a.beta2;
  options.epochs = a.epochs;
  options.batch_size = a.batch_size;
  options.grad_clip = a.grad_clip;
  options.seed = a.seed;
  options.on_epoch = [](std::size_t epoch, double train_loss, double valid_loss) {
    std::cerr << "epoch " << epoch << " train " << train_loss << " valid " << valid_loss << "\n";
  };
  Parameters params = init_parameters(config, a.seed);
  const TrainReport report = train(params, config, train_set, valid_set, options);

  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  vocab.save(dir / "vocab.tsv");
  save_checkpoint(dir / "model.ckpt",
                  {config, params, {{"vocab_path", "vocab.tsv"}, {"use_intent", a.use_intent ? "1" : "0"}}});
  std::ostringstream curve;
  curve << "epoch\ttrain_loss\tvalid_loss\n";
  for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
    curve << e + 1 << "\t" << to_text(report.train_loss[e]) << "\t"
          << (e < report.valid_loss.size() ? to_text(report.valid_loss[e]) : std::string("nan")) << "\n";
  }
  write_text(dir / "loss_curve.tsv", curve.str());
  for (const char* name : {"vocab.tsv", "model.ckpt", "loss_curve.tsv"}) run.output(dir / name);
  run.finish(dir / "manifest.json");
  std::cerr << "train-fid: " << params.parameter_count() << " parameters, best epoch " << report.best_epoch
            << "\n";
  return exit_code::kOk;
}

// ------------------------------------------------- generate and retrieve

struct LoadedModel {
  Checkpoint checkpoint;
  Vocabulary vocab;
  bool use_intent = true;
};

LoadedModel load_model(Run& run, const fs::path& path) {
  LoadedModel m;
  m.checkpoint = load_checkpoint(run.input(path));
  auto it = m.checkpoint.header.find("vocab_path");
  if (it == m.checkpoint.header.end()) throw Error(ErrorCode::kFormatError, "checkpoint names no vocabulary");
  m.vocab = Vocabulary::load(run.input(path.parent_path() / it->second));
  if (m.vocab.size() != m.checkpoint.config.vocab_size) {
    throw Error(ErrorCode::kFormatError, "vocabulary size does not match the checkpoint");
  }
  auto flag = m.checkpoint.header.find("use_intent");
  m.use_intent = flag == m.checkpoint.header.end() || flag->second != "0";
  return m;
}

struct GenerateArgs {
  std::string model;
  std::string dataset;
  std::string documents;
  std::string split = "test";
  std::size_t beam = 0;
  std::size_t max_len = 0;
  double length_penalty = 0.7;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, const Recorder& rec) {
  Run run("generate", rec, 0);
  const LoadedModel m = load_model(run, a.model);
  const auto instances = select_split(read_dataset(run.input(a.dataset)), a.split);
  const auto documents = index_documents(read_documents(run.input(a.documents)));
  const ModelConfig& config = m.checkpoint.config;
  GenerateOptions options;
  options.mode = a.beam > 0 ? GenerateOptions::Mode::kBeam : GenerateOptions::Mode::kGreedy;
  options.beam_size = a.beam;
  options.max_len = a.max_len > 0 ? a.max_len : config.target_len;
  options.length_penalty = a.length_penalty;
  std::vector<TextRecord> records;
  for (const auto& c : instances) {
    const FidInput input = build_fid_input(m.vocab, c, documents, config.block_len, m.use_intent);
    records.push_back({c.id, m.vocab.decode(generate(m.checkpoint.params, config, input, options))});
  }
  write_records(a.out, records);
  run.output(a.out);
  run.finish(sidecar_manifest(a.out));
  std::cerr << "generate: " << records.size() << " predictions\n";
  return exit_code::kOk;
}

struct RetrieveArgs {
  std::string model;
  std::string dataset;
  std::string documents;
  std::string split = "test";
  bool oracle = false;
  std::string out;
};

int cmd_retrieve(const RetrieveArgs& a, const Recorder& rec) {
  Run run("retrieve", rec, 0);
  const LoadedModel m = load_model(run, a.model);
  const auto instances = select_split(read_dataset(run.input(a.dataset)), a.split);
  const auto documents = index_documents(read_documents(run.input(a.documents)));
  const Matrix& embedding = m.checkpoint.params.token_embedding;
  std::vector<TextRecord> records;
  for (const auto& c : instances) {
    const RetrievalResult r = a.oracle ? retrieve_oracle(embedding, m.vocab, c, documents)
                                       : retrieve_baseline(embedding, m.vocab, c, documents);
    records.push_back({c.id, r.prediction});
  }
  write_records(a.out, records);
  run.output(a.out);
  run.finish(sidecar_manifest(a.out));
  std::cerr << "retrieve (" << (a.oracle ? "oracle" : "baseline") << "): " << records.size() << " predictions\n";
  return exit_code::kOk;
}

// -------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string predictions;
  std::string references;
  std::string dataset;
  std::string intent_model;
  std::string predictions_no_intent;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, const Recorder& rec) {
  Run run("evaluate", rec, 0);
  const auto predictions = read_records(run.input(a.predictions));
  const auto references = read_records(run.input(a.references));
  std::vector<CitationInstance> dataset;
  std::optional<IntentModel> model;
  std::vector<TextRecord> no_intent;
  RoundTripInputs round_trip;
  if (!a.dataset.empty() || !a.intent_model.empty()) {
    if (a.dataset.empty() || a.intent_model.empty()) {
      throw Error(ErrorCode::kConfigError, "round-trip accuracy needs both --dataset and --intent-model");
    }
    dataset = read_dataset(run.input(a.dataset));
    model = IntentModel::load(run.input(a.intent_model));
    round_trip.model = &*model;
    round_trip.dataset = &dataset;
    if (!a.predictions_no_intent.empty()) {
      no_intent = read_records(run.input(a.predictions_no_intent));
      round_trip.predictions_without_intent = &no_intent;
    }
  }
  const EvalReport report = evaluate(predictions, references, round_trip);
  if (report.skipped_empty_references) {
    std::cerr << "warning: skipped " << report.skipped_empty_references << " empty references\n";
  }
  std::cout << format_report_table(report);
  write_text(a.out, report_json(report));
  run.output(a.out);
  run.finish(sidecar_manifest(a.out));
  return exit_code::kOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile:
      return exit_code::kMissingFile;
    case ErrorCode::kConfigError:
    case ErrorCode::kVocabTooSmall:
      return exit_code::kConfig;
    case ErrorCode::kDivergence:
    case ErrorCode::kNumericalError:
      return exit_code::kNumerical;
    case ErrorCode::kMaxRefsExceeded:
    case ErrorCode::kSplitTooSmall:
    case ErrorCode::kClassMissing:
    case ErrorCode::kShapeError:
    case ErrorCode::kEmptyEvalSet:
    case ErrorCode::kAlignmentError:
    case ErrorCode::kFormatError:
      return exit_code::kData;
  }
  return exit_code::kOther;
}

// Reads "key = value" lines ('#' starts a comment) into "--key=value"
// arguments.
std::vector<std::string> config_arguments(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read config " + path.string());
  std::vector<std::string> args;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfigError, path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    args.push_back("--" + std::string(trim(line.substr(0, eq))) + "=" + std::string(trim(line.substr(eq + 1))));
  }
  return args;
}

// Splices config-file options in front of the command-line ones so that
// explicit flags win (options keep their last value).
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      from_file = config_arguments(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      from_file = config_arguments(args[i].substr(9));
    } else {
      out.push_back(args[i]);
    }
  }
  if (from_file.empty() || out.size() < 2) return out;
  std::vector<std::string> merged(out.begin(), out.begin() + 2);
  merged.insert(merged.end(), from_file.begin(), from_file.end());
  merged.insert(merged.end(), out.begin() + 2, out.end());
  return merged;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args) {
  CLI::App app{"citegen: citation text generation toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  app.add_option("--config", config_path, "File of key = value lines applied before command-line flags");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus with gold instances");
  Recorder synth_rec(synth_cmd);
  synth_rec.option("out-dir", synth.out_dir, "Output directory")->required();
  synth_rec.option("n-single", synth.n_single, "Single-citation groups");
  synth_rec.option("n-multi", synth.n_multi, "Multi-citation groups");
  synth_rec.option("max-multi", synth.max_multi, "Largest multi-citation group");
  synth_rec.option("seed", synth.seed, "Random seed")->required();

  TrainIntentArgs ti;
  auto* ti_cmd = app.add_subcommand("train-intent", "Train the intent classifier on a labeled dataset");
  Recorder ti_rec(ti_cmd);
  ti_rec.option("data", ti.data, "Dataset file with intent labels")->required();
  ti_rec.option("out", ti.out, "Model file to write")->required();
  ti_rec.option("epochs", ti.epochs, "Training epochs");
  ti_rec.option("lr", ti.lr, "Learning rate");
  ti_rec.option("batch-size", ti.batch_size, "Mini-batch size");
  ti_rec.option("feature-dim", ti.feature_dim, "Hashed feature dimension");
  ti_rec.option("seed", ti.seed, "Random seed")->required();

  BuildCorpusArgs bc;
  auto* bc_cmd = app.add_subcommand("build-corpus", "Extract, label and split citation instances");
  Recorder bc_rec(bc_cmd);
  bc_rec.option("documents", bc.documents, "Documents file")->required();
  bc_rec.option("bodies", bc.bodies, "Bodies file")->required();
  bc_rec.option("keys", bc.keys, "Key table")->required();
  bc_rec.option("intent-model", bc.intent_model, "Intent classifier used to label citations")->required();
  bc_rec.option("out-dir", bc.out_dir, "Output directory")->required();
  bc_rec.option("seed", bc.seed, "Split seed")->required();

  TrainFidArgs tf;
  auto* tf_cmd = app.add_subcommand("train-fid", "Train the fusion-in-decoder generator");
  Recorder tf_rec(tf_cmd);
  tf_rec.option("dataset", tf.dataset, "Dataset file")->required();
  tf_rec.option("documents", tf.documents, "Documents file")->required();
  tf_rec.option("out-dir", tf.out_dir, "Output directory")->required();
  tf_rec.flag("--with-intent,!--no-intent", "use-intent", tf.use_intent,
              "Prefix every block with its intent code (default) or omit it");
  tf_rec.option("d-model", tf.d_model, "Model width");
  tf_rec.option("heads", tf.n_heads, "Attention heads");
  tf_rec.option("enc-layers", tf.enc_layers, "Encoder layers");
  tf_rec.option("dec-layers", tf.dec_layers, "Decoder layers");
  tf_rec.option("ffn-dim", tf.ffn_dim, "Feed-forward width");
  tf_rec.option("block-len", tf.block_len, "Tokens per encoder block");
  tf_rec.option("target-len", tf.target_len, "Target tokens including <EOS>");
  tf_rec.option("dropout", tf.dropout, "Dropout rate");
  tf_rec.option("epochs", tf.epochs, "Training epochs");
  tf_rec.option("batch-size", tf.batch_size, "Mini-batch size");
  tf_rec.option("lr", tf.lr, "Adam learning rate");
  tf_rec.option("beta1", tf.beta1, "Adam beta1");
  tf_rec.option("beta2", tf.beta2, "Adam beta2");
  tf_rec.option("grad-clip", tf.grad_clip, "Global gradient-norm clip, 0 disables");
  tf_rec.option("min-freq", tf.min_freq, "Minimum token frequency for the vocabulary");
  tf_rec.option("max-vocab", tf.max_vocab, "Vocabulary size cap");
  tf_rec.option("seed", tf.seed, "Random seed")->required();

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Generate citation text for a dataset split");
  Recorder gen_rec(gen_cmd);
  gen_rec.option("model", gen.model, "Model checkpoint")->required();
  gen_rec.option("dataset", gen.dataset, "Dataset file")->required();
  gen_rec.option("documents", gen.documents, "Documents file")->required();
  gen_rec.option("split", gen.split, "train, valid, test or all");
  gen_rec.option("beam", gen.beam, "Beam width; 0 decodes greedily");
  gen_rec.option("max-len", gen.max_len, "Output length cap; 0 uses the model's target length");
  gen_rec.option("length-penalty", gen.length_penalty, "Beam length normalization exponent");
  gen_rec.option("out", gen.out, "Predictions file")->required();

  RetrieveArgs ret;
  auto* ret_cmd = app.add_subcommand("retrieve", "Sentence-retrieval baselines");
  Recorder ret_rec(ret_cmd);
  ret_rec.option("model", ret.model, "Checkpoint whose token embeddings are used")->required();
  ret_rec.option("dataset", ret.dataset, "Dataset file")->required();
  ret_rec.option("documents", ret.documents, "Documents file")->required();
  ret_rec.option("split", ret.split, "train, valid, test or all");
  ret_rec.flag("--oracle,!--baseline", "oracle", ret.oracle,
               "Query with the target (oracle) or with the citing abstract (baseline, default)");
  ret_rec.option("out", ret.out, "Predictions file")->required();

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score predictions against references");
  Recorder ev_rec(ev_cmd);
  ev_rec.option("predictions", ev.predictions, "Predictions file")->required();
  ev_rec.option("references", ev.references, "References file")->required();
  ev_rec.option("dataset", ev.dataset, "Dataset file giving the intended intents");
  ev_rec.option("intent-model", ev.intent_model, "Intent classifier for round-trip accuracy");
  ev_rec.option("predictions-no-intent", ev.predictions_no_intent,
                "Predictions of a model trained without intent codes");
  ev_rec.option("out", ev.out, "JSON report file")->required();

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code::kConfig;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth, synth_rec);
    if (*ti_cmd) return cmd_train_intent(ti, ti_rec);
    if (*bc_cmd) return cmd_build_corpus(bc, bc_rec);
    if (*tf_cmd) return cmd_train_fid(tf, tf_rec);
    if (*gen_cmd) return cmd_generate(gen, gen_rec);
    if (*ret_cmd) return cmd_retrieve(ret, ret_rec);
    if (*ev_cmd) return cmd_evaluate(ev, ev_rec);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::kOther;
  }
  return exit_code::kOther;
}

int run_cli(int argc, char** argv) { return run_cli(std::vector<std::string>(argv, argv + argc)); }

}  // namespace citegen
