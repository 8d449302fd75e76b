#include "citegen/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "citegen/errors.hpp"
#include "citegen/text.hpp"
#include "json.hpp"

namespace citegen {

namespace {

using Json = nlohmann::ordered_json;

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  return out;
}

// Calls fn(json, line_number) for every non-blank line.
template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormatError, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
    try {
      fn(j, number);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormatError, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

}  // namespace

std::vector<Document> read_documents(const std::filesystem::path& path) {
  std::vector<Document> documents;
  for_each_json_line(path, [&](const Json& j, std::size_t) {
    documents.push_back(
        {j.at("id").get<std::string>(), j.at("title").get<std::string>(), j.at("abstract").get<std::string>()});
  });
  return documents;
}

void write_documents(const std::filesystem::path& path, const std::vector<Document>& documents) {
  auto out = open_out(path);
  for (const auto& d : documents) {
    Json j;
    j["id"] = d.id;
    j["title"] = d.title;
    j["abstract"] = d.abstract;
    out << j.dump() << "\n";
  }
}

std::map<std::string, std::string> read_bodies(const std::filesystem::path& path) {
  std::map<std::string, std::string> bodies;
  for_each_json_line(path, [&](const Json& j, std::size_t line) {
    auto id = j.at("id").get<std::string>();
    if (!bodies.emplace(id, j.at("body").get<std::string>()).second) {
      throw Error(ErrorCode::kFormatError, where(path, line) + ": duplicate body for " + id);
    }
  });
  return bodies;
}

void write_bodies(const std::filesystem::path& path, const std::map<std::string, std::string>& bodies) {
  auto out = open_out(path);
  for (const auto& [id, body] : bodies) {
    Json j;
    j["id"] = id;
    j["body"] = body;
    out << j.dump() << "\n";
  }
}

KeyTable read_key_table(const std::filesystem::path& path) {
  auto in = open_in(path);
  KeyTable keys;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::kFormatError, where(path, number) + ": expected marker<TAB>id");
    keys[std::string(trim(line.substr(0, tab)))] = std::string(trim(line.substr(tab + 1)));
  }
  return keys;
}

void write_key_table(const std::filesystem::path& path, const KeyTable& keys) {
  std::vector<std::pair<std::string, std::string>> sorted(keys.begin(), keys.end());
  std::sort(sorted.begin(), sorted.end());
  auto out = open_out(path);
  for (const auto& [marker, id] : sorted) out << marker << "\t" << id << "\n";
}

std::vector<CitationInstance> read_dataset(const std::filesystem::path& path) {
  std::vector<CitationInstance> instances;
  for_each_json_line(path, [&](const Json& j, std::size_t line) {
    CitationInstance c;
    c.citing_id = j.at("citing_id").get<std::string>();
    c.cited_ids = j.at("cited_ids").get<std::vector<std::string>>();
    for (const auto& name : j.at("intents")) {
      auto label = parse_intent(name.get<std::string>());
      if (!label) throw Error(ErrorCode::kFormatError, where(path, line) + ": unknown intent " + name.dump());
      c.intents.push_back(*label);
    }
    c.target = j.at("target").get<std::string>();
    auto split = parse_split(j.at("split").get<std::string>());
    if (!split) throw Error(ErrorCode::kFormatError, where(path, line) + ": unknown split");
    c.split = *split;
    if (auto problem = validate_instance(c); !problem.empty()) {
      throw Error(ErrorCode::kFormatError, where(path, line) + ": " + problem);
    }
    instances.push_back(std::move(c));
  });
  assign_instance_ids(instances);
  return instances;
}

void write_dataset(const std::filesystem::path& path, const std::vector<CitationInstance>& instances) {
  auto out = open_out(path);
  for (const auto& c : instances) {
    Json j;
    j["citing_id"] = c.citing_id;
    j["cited_ids"] = c.cited_ids;
    Json intents = Json::array();
    for (auto label : c.intents) intents.push_back(std::string(to_string(label)));
    j["intents"] = intents;
    j["target"] = c.target;
    j["split"] = std::string(to_string(c.split));
    out << j.dump() << "\n";
  }
}

std::vector<TextRecord> read_records(const std::filesystem::path& path) {
  std::vector<TextRecord> records;
  for_each_json_line(path, [&](const Json& j, std::size_t) {
    records.push_back({j.at("instance_id").get<std::string>(), j.at("text").get<std::string>()});
  });
  return records;
}

void write_records(const std::filesystem::path& path, const std::vector<TextRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    Json j;
    j["instance_id"] = r.instance_id;
    j["text"] = r.text;
    out << j.dump() << "\n";
  }
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string file_digest(const std::filesystem::path& path) { return hex64(fnv1a64(read_text(path))); }

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  Json j;
  j["command"] = manifest.command;
  j["config_hash"] = manifest.config_hash;
  j["seed"] = manifest.seed;
  Json config = Json::object();
  for (const auto& [k, v] : manifest.config) config[k] = v;
  j["config"] = config;
  Json inputs = Json::object();
  for (const auto& [k, v] : manifest.inputs) inputs[k] = v;
  j["inputs"] = inputs;
  Json outputs = Json::object();
  for (const auto& [k, v] : manifest.outputs) outputs[k] = v;
  j["outputs"] = outputs;
  write_text(path, j.dump(2) + "\n");
}

}  // namespace citegen
