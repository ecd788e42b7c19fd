#include "rgbdtrack/net/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace rgbdtrack::net {

namespace {

constexpr char kMagic[8] = {'R', 'T', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

nlohmann::json config_to_json(const NetConfig& cfg) {
  return nlohmann::json{
      {"profile", to_string(cfg.profile)},
      {"backbone", to_string(cfg.backbone)},
      {"channels", cfg.channels},
      {"heads", cfg.heads},
      {"ffn_width", cfg.ffn_width},
      {"encoder_layers", cfg.encoder_layers},
      {"fusion_layers", cfg.fusion_layers},
      {"decoder_layers", cfg.decoder_layers},
      {"search_resolution", cfg.search_resolution},
      {"template_resolution", cfg.template_resolution},
      {"fusion_variant", to_string(cfg.fusion_variant)},
      {"positional_embeddings", cfg.positional_embeddings},
      {"lambda_iou", cfg.lambda_iou},
      {"lambda_l1", cfg.lambda_l1},
      {"generalized_iou", cfg.generalized_iou},
  };
}

NetConfig config_from_json(const nlohmann::json& j) {
  NetConfig cfg;
  cfg.profile = profile_from_string(j.at("profile").get<std::string>());
  cfg.backbone = backbone_from_string(j.at("backbone").get<std::string>());
  cfg.channels = j.at("channels").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.ffn_width = j.at("ffn_width").get<int>();
  cfg.encoder_layers = j.at("encoder_layers").get<int>();
  cfg.fusion_layers = j.at("fusion_layers").get<int>();
  cfg.decoder_layers = j.at("decoder_layers").get<int>();
  cfg.search_resolution = j.at("search_resolution").get<int>();
  cfg.template_resolution = j.at("template_resolution").get<int>();
  cfg.fusion_variant = fusion_from_string(j.at("fusion_variant").get<std::string>());
  cfg.positional_embeddings = j.value("positional_embeddings", true);
  cfg.lambda_iou = j.at("lambda_iou").get<double>();
  cfg.lambda_l1 = j.at("lambda_l1").get<double>();
  cfg.generalized_iou = j.value("generalized_iou", false);
  cfg.validate();
  return cfg;
}

void save_checkpoint(const TrackerModel& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["version"] = kVersion;
  header["config"] = config_to_json(model.config());
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, var] : model.params().all()) {
    tensors.push_back({{"name", name}, {"shape", var->value.shape()}});
  }
  header["tensors"] = tensors;
  const std::string header_str = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, var] : model.params().all()) {
    out.write(reinterpret_cast<const char*>(var->value.data()),
              static_cast<std::streamsize>(var->value.size() * sizeof(double)));
  }
  if (!out) throw LoadError("write failed for checkpoint " + path.string());
}

TrackerModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw LoadError(path.string() + ": not a checkpoint file");
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != kVersion) {
    throw LoadError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw LoadError(path.string() + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": bad header: " + e.what());
  }
  const NetConfig cfg = config_from_json(header.at("config"));
  TrackerModel model(cfg, 0);

  std::size_t filled = 0;
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    if (!model.params().has(name)) {
      throw LoadError(path.string() + ": unknown parameter '" + name + "'");
    }
    auto var = model.params().get(name);
    if (var->value.shape() != shape) {
      throw LoadError(path.string() + ": shape mismatch for '" + name + "'");
    }
    in.read(reinterpret_cast<char*>(var->value.data()),
            static_cast<std::streamsize>(var->value.size() * sizeof(double)));
    if (!in) throw LoadError(path.string() + ": truncated tensor data at '" + name + "'");
    ++filled;
  }
  if (filled != model.params().all().size()) {
    throw LoadError(path.string() + ": checkpoint covers " + std::to_string(filled) + " of " +
                    std::to_string(model.params().all().size()) + " parameters");
  }
  return model;
}

}  // namespace rgbdtrack::net
