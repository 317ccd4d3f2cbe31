#include "sphnn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "sphnn/error.hpp"

namespace sphnn {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kFormat = "sphnn-checkpoint-v1";

std::uint64_t to_little(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  std::uint64_t y = 0;
  for (int i = 0; i < 8; ++i) y = (y << 8) | ((x >> (8 * i)) & 0xff);
  return y;
}

void write_blob(const fs::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::MissingFile, "cannot write", path.string());
  for (double x : m.data()) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    bits = to_little(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

void read_blob(const fs::path& path, Matrix& m) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::MissingFile, "cannot open file", path.string());
  for (double& x : m.data()) {
    std::uint64_t bits;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits))
      throw DataError(DataErrorKind::MalformedRow, "parameter blob too short", path.string());
    bits = to_little(bits);
    std::memcpy(&x, &bits, sizeof x);
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw DataError(DataErrorKind::MalformedRow, "parameter blob too long", path.string());
}

}  // namespace

json model_config_to_json(const ModelConfig& cfg) {
  return {{"num_classes", cfg.num_classes}, {"layers", cfg.layers},
          {"d_hidden", cfg.d_hidden},       {"d_att", cfg.d_att},
          {"d_fusion", cfg.d_fusion},       {"lambda", cfg.lambda},
          {"train_lambda", cfg.train_lambda}, {"leaky_slope", cfg.slope},
          {"mode", to_string(cfg.mode)},    {"use_attention", cfg.use_attention},
          {"dropout", cfg.dropout}};
}

ModelConfig model_config_from_json(const json& j) {
  try {
    ModelConfig cfg;
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.layers = j.at("layers").get<std::size_t>();
    cfg.d_hidden = j.at("d_hidden").get<std::size_t>();
    cfg.d_att = j.at("d_att").get<std::size_t>();
    cfg.d_fusion = j.at("d_fusion").get<std::size_t>();
    cfg.lambda = j.at("lambda").get<double>();
    cfg.train_lambda = j.at("train_lambda").get<bool>();
    cfg.slope = j.at("leaky_slope").get<double>();
    cfg.mode = parse_accumulation(j.at("mode").get<std::string>());
    cfg.use_attention = j.at("use_attention").get<bool>();
    cfg.dropout = j.at("dropout").get<double>();
    return cfg;
  } catch (const json::exception& e) {
    throw DataError(DataErrorKind::MalformedRow, std::string("model config: ") + e.what());
  }
}

void save_checkpoint(const fs::path& dir, const ModelParams& params, const ModelConfig& cfg,
                     std::uint64_t seed, const json& run) {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = kFormat;
  manifest["seed"] = seed;
  manifest["lambda"] = params.lambda(0, 0);
  manifest["model"] = model_config_to_json(cfg);
  manifest["type_names"] = params.type_names;
  json branches = json::array();
  for (const auto& b : params.branches) branches.push_back(b.motif_id);
  manifest["branches"] = branches;
  json tensors = json::array();
  params.visit([&](const std::string& name, const Matrix& m) {
    const std::string file = name + ".bin";
    write_blob(dir / file, m);
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"file", file}});
  });
  manifest["parameters"] = tensors;
  manifest["run"] = run;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw DataError(DataErrorKind::MissingFile, "cannot write", (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError(DataErrorKind::MissingFile, "cannot open file", manifest_path.string());
  Checkpoint ck;
  try {
    in >> ck.manifest;
  } catch (const json::exception& e) {
    throw DataError(DataErrorKind::MalformedRow, e.what(), manifest_path.string());
  }
  if (ck.manifest.value("format", "") != kFormat)
    throw DataError(DataErrorKind::MalformedRow, "not a checkpoint manifest",
                    manifest_path.string());

  try {
    const ModelConfig cfg = model_config_from_json(ck.manifest.at("model"));
    ModelParams& p = ck.params;
    p.type_names = ck.manifest.at("type_names").get<std::vector<std::string>>();
    p.type_proj.resize(p.type_names.size());
    p.attention_vec.resize(cfg.layers);
    for (const auto& id : ck.manifest.at("branches")) {
      BranchParams b;
      b.motif_id = id.get<std::string>();
      b.layers.resize(cfg.layers);
      if (cfg.mode == Accumulation::Concat)
        for (auto& l : b.layers) l.concat_proj = Matrix(1, 1);  // placeholder, resized below
      p.branches.push_back(std::move(b));
    }
    p.lambda = Matrix(1, 1);

    const auto& tensors = ck.manifest.at("parameters");
    std::size_t idx = 0;
    p.visit([&](const std::string& name, Matrix& m) {
      if (idx >= tensors.size())
        throw DataError(DataErrorKind::MalformedRow, "manifest lists too few parameters",
                        manifest_path.string());
      const auto& t = tensors[idx++];
      if (t.at("name").get<std::string>() != name)
        throw DataError(DataErrorKind::MalformedRow,
                        "expected parameter '" + name + "', manifest has '" +
                            t.at("name").get<std::string>() + "'",
                        manifest_path.string());
      m = Matrix(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>());
      read_blob(dir / t.at("file").get<std::string>(), m);
    });
    if (idx != tensors.size())
      throw DataError(DataErrorKind::MalformedRow, "manifest lists extra parameters",
                      manifest_path.string());
  } catch (const json::exception& e) {
    throw DataError(DataErrorKind::MalformedRow, e.what(), manifest_path.string());
  }
  return ck;
}

}  // namespace sphnn
