#include "rgbdtrack/net/config.hpp"

namespace rgbdtrack::net {

std::string to_string(Profile p) { return p == Profile::Paper ? "paper" : "toy"; }

std::string to_string(BackboneKind k) {
  return k == BackboneKind::Tiny ? "tiny" : "resnet50_style";
}

std::string to_string(FusionVariant v) {
  switch (v) {
    case FusionVariant::A: return "A";
    case FusionVariant::B: return "B";
    case FusionVariant::C: return "C";
    default: return "D";
  }
}

Profile profile_from_string(const std::string& s) {
  if (s == "paper") return Profile::Paper;
  if (s == "toy") return Profile::Toy;
  throw ConfigError("unknown profile: " + s);
}

BackboneKind backbone_from_string(const std::string& s) {
  if (s == "tiny") return BackboneKind::Tiny;
  if (s == "resnet50_style") return BackboneKind::Resnet50Style;
  throw ConfigError("unknown backbone: " + s);
}

FusionVariant fusion_from_string(const std::string& s) {
  if (s == "A") return FusionVariant::A;
  if (s == "B") return FusionVariant::B;
  if (s == "C") return FusionVariant::C;
  if (s == "D") return FusionVariant::D;
  throw ConfigError("unknown fusion variant: " + s);
}

NetConfig NetConfig::paper() {
  NetConfig cfg;
  cfg.profile = Profile::Paper;
  cfg.backbone = BackboneKind::Resnet50Style;
  cfg.channels = 256;
  cfg.heads = 8;
  cfg.ffn_width = 2048;
  cfg.encoder_layers = 6;
  cfg.fusion_layers = 2;
  cfg.decoder_layers = 6;
  cfg.search_resolution = 320;
  cfg.template_resolution = 128;
  cfg.fusion_variant = FusionVariant::B;
  return cfg;
}

NetConfig NetConfig::toy(int channels) {
  NetConfig cfg;
  cfg.channels = channels;
  return cfg;
}

void NetConfig::validate() const {
  if (channels <= 0 || heads <= 0 || channels % heads != 0) {
    throw ConfigError("NetConfig: channels must be a positive multiple of heads");
  }
  if (channels % 4 != 0) {
    throw ConfigError("NetConfig: channels must be divisible by 4 for 2D sinusoidal embeddings");
  }
  if (ffn_width <= 0 || encoder_layers <= 0 || fusion_layers <= 0 || decoder_layers <= 0) {
    throw ConfigError("NetConfig: layer counts and widths must be positive");
  }
  if (search_resolution % kBackboneStride != 0 || template_resolution % kBackboneStride != 0 ||
      search_resolution <= 0 || template_resolution <= 0) {
    throw ConfigError("NetConfig: crop resolutions must be positive multiples of the stride");
  }
  if (profile == Profile::Paper &&
      (encoder_layers != 6 || fusion_layers != 2 || decoder_layers != 6)) {
    throw ConfigError("NetConfig: the paper profile fixes 6 encoder / 2 fusion / 6 decoder layers");
  }
  if (lambda_iou < 0.0 || lambda_l1 < 0.0) {
    throw ConfigError("NetConfig: loss weights must be nonnegative");
  }
}

}  // namespace rgbdtrack::net
