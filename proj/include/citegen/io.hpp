#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "citegen/corpus.hpp"
#include "citegen/metrics.hpp"
#include "citegen/types.hpp"

namespace citegen {

// Line-delimited JSON, one object per line. Readers throw Error(kMissingFile)
// when the file cannot be opened and Error(kFormatError) on malformed lines.

// {"id", "title", "abstract"}
std::vector<Document> read_documents(const std::filesystem::path& path);
void write_documents(const std::filesystem::path& path, const std::vector<Document>& documents);

// {"id", "body"}
std::map<std::string, std::string> read_bodies(const std::filesystem::path& path);
void write_bodies(const std::filesystem::path& path, const std::map<std::string, std::string>& bodies);

// "marker<TAB>doc_id" per line, e.g. "Smith 2019\tdoc7" or "[3]\tdoc7".
KeyTable read_key_table(const std::filesystem::path& path);
void write_key_table(const std::filesystem::path& path, const KeyTable& keys);

// {"citing_id", "cited_ids", "intents", "target", "split"}; instance ids are
// recomputed from file order on read.
std::vector<CitationInstance> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<CitationInstance>& instances);

// {"instance_id", "text"}
std::vector<TextRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<TextRecord>& records);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

// FNV-1a 64 of the file bytes, hex.
std::string file_digest(const std::filesystem::path& path);

struct Manifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;   // resolved option values
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, std::string> outputs;  // path -> digest
};

// Deterministic: no timestamps or host data.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

}  // namespace citegen
