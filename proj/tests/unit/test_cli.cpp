#include <filesystem>

#include "citegen/cli.hpp"
#include "citegen/fid_model.hpp"
#include "citegen/io.hpp"
#include "citegen/tokenizer.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace citegen;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "citegen");
  return run_cli(args);
}

// Runs synth, train-intent and build-corpus into `dir`.
void build_small_corpus(const fs::path& dir) {
  const std::string d = dir.string();
  REQUIRE(run({"synth", "--out-dir", d + "/syn", "--n-single", "60", "--n-multi", "8", "--seed", "3"}) == 0);
  REQUIRE(run({"train-intent", "--data", d + "/syn/gold.jsonl", "--out", d + "/intent.bin", "--seed", "1"}) == 0);
  REQUIRE(run({"build-corpus", "--documents", d + "/syn/documents.jsonl", "--bodies", d + "/syn/bodies.jsonl",
               "--keys", d + "/syn/keys.tsv", "--intent-model", d + "/intent.bin", "--out-dir",
               d + "/corpus", "--seed", "3"}) == 0);
}

std::vector<std::string> small_fid_args(const std::string& d, const std::string& out) {
  return {"train-fid",     "--dataset",  d + "/corpus/dataset.jsonl", "--documents", d + "/syn/documents.jsonl",
          "--out-dir",     out,          "--d-model",                 "16",          "--heads",
          "2",             "--ffn-dim",  "32",                        "--enc-layers", "1",
          "--dec-layers",  "1",          "--block-len",               "40",          "--target-len",
          "24",            "--epochs",   "1",                         "--seed",      "1"};
}

}  // namespace

TEST_CASE("pipeline reproduces gold references") {
  const fs::path dir = testing::scratch_dir("cli_pipeline");
  build_small_corpus(dir);
  const std::string d = dir.string();
  CHECK(run({"evaluate", "--predictions", d + "/corpus/refs_test.jsonl", "--references",
             d + "/corpus/refs_test.jsonl", "--out", d + "/report.json"}) == 0);
  const std::string report = read_text(dir / "report.json");
  CHECK(report.find("\"bleu\": 100.0") != std::string::npos);
  CHECK(fs::exists(dir / "report.json.manifest.json"));
  CHECK(fs::exists(dir / "corpus" / "manifest.json"));

  const auto dataset = read_dataset(dir / "corpus" / "dataset.jsonl");
  const auto gold = read_dataset(dir / "syn" / "gold.jsonl");
  CHECK(dataset.size() == gold.size());
}

TEST_CASE("exit codes") {
  const fs::path dir = testing::scratch_dir("cli_exit");
  const std::string d = dir.string();
  CHECK(run({"evaluate", "--predictions", d + "/none.jsonl", "--references", d + "/none.jsonl", "--out",
             d + "/r.json"}) ==
        exit_code::kMissingFile);
  CHECK(run({"synth"}) == exit_code::kConfig);
  CHECK(run({"synth", "--out-dir", d, "--unknown-flag", "1", "--seed", "1"}) == exit_code::kConfig);
  CHECK(run({"synth", "--out-dir", d}) == exit_code::kConfig);
  CHECK(run({"synth", "--out-dir", d, "--max-multi", "9", "--seed", "1"}) == exit_code::kConfig);
  CHECK(run({}) == exit_code::kConfig);

  write_text(dir / "bad.cfg", "seed = 1\nthis line has no separator\n");
  CHECK(run({"synth", "--config", d + "/bad.cfg", "--out-dir", d}) == exit_code::kConfig);
  write_text(dir / "unknown.cfg", "seed = 1\ncolour = red\n");
  CHECK(run({"synth", "--config", d + "/unknown.cfg", "--out-dir", d}) == exit_code::kConfig);
  CHECK(run({"synth", "--config", d + "/missing.cfg", "--out-dir", d}) == exit_code::kMissingFile);

  write_text(dir / "preds.jsonl", "{\"instance_id\": \"a#0\", \"text\": \"x\"}\n");
  write_text(dir / "refs.jsonl", "{\"instance_id\": \"b#0\", \"text\": \"x\"}\n");
  CHECK(run({"evaluate", "--predictions", d + "/preds.jsonl", "--references", d + "/refs.jsonl", "--out",
             d + "/r.json"}) ==
        exit_code::kData);
  write_text(dir / "broken.jsonl", "{not json\n");
  CHECK(run({"evaluate", "--predictions", d + "/broken.jsonl", "--references", d + "/refs.jsonl", "--out",
             d + "/r.json"}) ==
        exit_code::kData);
}

TEST_CASE("config file values yield to command-line flags") {
  const fs::path dir = testing::scratch_dir("cli_config");
  const std::string d = dir.string();
  write_text(dir / "synth.cfg", "# small corpus\nn-single = 12\nn-multi = 2\nseed = 9\n");
  REQUIRE(run({"synth", "--config", d + "/synth.cfg", "--out-dir", d + "/a", "--n-multi", "4"}) == 0);
  const auto gold = read_dataset(dir / "a" / "gold.jsonl");
  CHECK(gold.size() == 16);
  const std::string manifest = read_text(dir / "a" / "manifest.json");
  CHECK(manifest.find("\"seed\": 9") != std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
  const fs::path dir = testing::scratch_dir("cli_rerun");
  build_small_corpus(dir / "one");
  build_small_corpus(dir / "two");
  for (const char* name : {"syn/documents.jsonl", "syn/gold.jsonl", "intent.bin", "corpus/dataset.jsonl",
                           "corpus/refs_train.jsonl"}) {
    CHECK_MESSAGE(read_text(dir / "one" / name) == read_text(dir / "two" / name), name);
  }
  // Manifests record paths, which differ between the two runs, so compare
  // the output digests only.
  CHECK(file_digest(dir / "one" / "corpus" / "dataset.jsonl") ==
        file_digest(dir / "two" / "corpus" / "dataset.jsonl"));

  const std::string d = (dir / "one").string();
  REQUIRE(run(small_fid_args(d, d + "/fid_a")) == 0);
  REQUIRE(run(small_fid_args(d, d + "/fid_b")) == 0);
  CHECK(read_text(dir / "one" / "fid_a" / "model.ckpt") == read_text(dir / "one" / "fid_b" / "model.ckpt"));
  CHECK(read_text(dir / "one" / "fid_a" / "loss_curve.tsv") ==
        read_text(dir / "one" / "fid_b" / "loss_curve.tsv"));
}

TEST_CASE("no-intent models never see intent codes") {
  const fs::path dir = testing::scratch_dir("cli_no_intent");
  build_small_corpus(dir);
  const std::string d = dir.string();
  auto args = small_fid_args(d, d + "/fid");
  args.push_back("--no-intent");
  REQUIRE(run(args) == 0);
  const Checkpoint ckpt = load_checkpoint(dir / "fid" / "model.ckpt");
  CHECK(ckpt.header.at("use_intent") == "0");
  const Vocabulary vocab = Vocabulary::load(dir / "fid" / "vocab.tsv");
  DocumentIndex documents;
  for (const auto& doc : read_documents(dir / "syn" / "documents.jsonl")) documents[doc.id] = doc;
  for (const auto& c : read_dataset(dir / "corpus" / "dataset.jsonl")) {
    const FidInput input = build_fid_input(vocab, c, documents, ckpt.config.block_len, false);
    for (const auto& block : input.blocks) {
      for (int t : block) CHECK((t < token_id::kFirstIntent || t >= token_id::kNumReserved));
    }
  }

  CHECK(run({"generate", "--model", d + "/fid/model.ckpt", "--dataset", d + "/corpus/dataset.jsonl",
             "--documents", d + "/syn/documents.jsonl", "--split", "valid", "--max-len", "5", "--out",
             d + "/pred.jsonl"}) == 0);
  const auto preds = read_records(dir / "pred.jsonl");
  const auto dataset = read_dataset(dir / "corpus" / "dataset.jsonl");
  std::size_t valid = 0;
  for (const auto& c : dataset) valid += c.split == Split::kValid;
  CHECK(preds.size() == valid);

  CHECK(run({"retrieve", "--model", d + "/fid/model.ckpt", "--dataset", d + "/corpus/dataset.jsonl",
             "--documents", d + "/syn/documents.jsonl", "--out", d + "/base.jsonl"}) == 0);
  CHECK(run({"evaluate", "--predictions", d + "/base.jsonl", "--references", d + "/corpus/refs_test.jsonl",
             "--dataset", d + "/corpus/dataset.jsonl", "--intent-model", d + "/intent.bin", "--out",
             d + "/base_report.json"}) == 0);
  CHECK(fs::exists(dir / "base_report.json.manifest.json"));
}
