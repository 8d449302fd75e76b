#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include "citegen/errors.hpp"
#include "citegen/fid_model.hpp"

// Layout, all integers little-endian:
//   "CGFID001"
//   u32 header length, header text ("key=value\n" lines: ModelConfig fields
//       first, then free-form entries such as vocab_path)
//   u32 tensor count
//   per tensor: u32 name length, name, u64 rows, u64 cols, rows*cols f64 row-major

namespace citegen {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'G', 'F', 'I', 'D', '0', '0', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::kFormatError, "truncated checkpoint");
  return value;
}

std::string read_string(std::istream& in, std::uint32_t length) {
  if (length > (1u << 24)) throw Error(ErrorCode::kFormatError, "implausible string length in checkpoint");
  std::string s(length, '\0');
  in.read(s.data(), length);
  if (!in) throw Error(ErrorCode::kFormatError, "truncated checkpoint");
  return s;
}

std::string config_header(const ModelConfig& c, const std::map<std::string, std::string>& extra) {
  std::ostringstream os;
  os.precision(17);
  os << "vocab_size=" << c.vocab_size << "\n"
     << "d_model=" << c.d_model << "\n"
     << "n_heads=" << c.n_heads << "\n"
     << "n_enc_layers=" << c.n_enc_layers << "\n"
     << "n_dec_layers=" << c.n_dec_layers << "\n"
     << "ffn_dim=" << c.ffn_dim << "\n"
     << "block_len=" << c.block_len << "\n"
     << "target_len=" << c.target_len << "\n"
     << "max_blocks=" << c.max_blocks << "\n"
     << "dropout=" << c.dropout << "\n";
  for (const auto& [key, value] : extra) os << key << "=" << value << "\n";
  return os.str();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::string header = config_header(checkpoint.config, checkpoint.header);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::uint32_t count = 0;
  checkpoint.params.visit([&](const std::string&, const Matrix&) { ++count; });
  put<std::uint32_t>(out, count);
  checkpoint.params.visit([&](const std::string& name, const Matrix& m) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kMagic)) {
    throw Error(ErrorCode::kFormatError, path.string() + " is not a model checkpoint");
  }
  const std::string header = read_string(in, get<std::uint32_t>(in));

  Checkpoint checkpoint;
  std::map<std::string, std::string> fields;
  std::istringstream lines(header);
  std::string line;
  while (std::getline(lines, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto take = [&](const std::string& key) -> std::string {
    auto it = fields.find(key);
    if (it == fields.end()) throw Error(ErrorCode::kFormatError, "checkpoint header lacks " + key);
    std::string value = it->second;
    fields.erase(it);
    return value;
  };
  ModelConfig& c = checkpoint.config;
  c.vocab_size = std::stoul(take("vocab_size"));
  c.d_model = std::stoul(take("d_model"));
  c.n_heads = std::stoul(take("n_heads"));
  c.n_enc_layers = std::stoul(take("n_enc_layers"));
  c.n_dec_layers = std::stoul(take("n_dec_layers"));
  c.ffn_dim = std::stoul(take("ffn_dim"));
  c.block_len = std::stoul(take("block_len"));
  c.target_len = std::stoul(take("target_len"));
  c.max_blocks = std::stoul(take("max_blocks"));
  c.dropout = std::stod(take("dropout"));
  c.validate();
  checkpoint.header = std::move(fields);

  checkpoint.params = zero_parameters(c);
  std::map<std::string, Matrix*> slots;
  checkpoint.params.visit([&](const std::string& name, Matrix& m) { slots[name] = &m; });
  const auto count = get<std::uint32_t>(in);
  if (count != slots.size()) throw Error(ErrorCode::kFormatError, "tensor count does not match config");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = read_string(in, get<std::uint32_t>(in));
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    auto it = slots.find(name);
    if (it == slots.end()) throw Error(ErrorCode::kFormatError, "unexpected tensor " + name);
    Matrix& m = *it->second;
    if (rows != static_cast<std::uint64_t>(m.rows()) || cols != static_cast<std::uint64_t>(m.cols())) {
      throw Error(ErrorCode::kFormatError, "shape mismatch for " + name);
    }
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw Error(ErrorCode::kFormatError, "truncated tensor " + name);
  }
  return checkpoint;
}

}  // namespace citegen
