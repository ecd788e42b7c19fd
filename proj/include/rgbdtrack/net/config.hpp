#pragma once

#include <cstdint>
#include <string>

#include "rgbdtrack/errors.hpp"

namespace rgbdtrack::net {

inline constexpr int kBackboneStride = 16;

enum class Profile { Paper, Toy };
enum class BackboneKind { Tiny, Resnet50Style };
enum class FusionVariant { A, B, C, D };

std::string to_string(Profile p);
std::string to_string(BackboneKind k);
std::string to_string(FusionVariant v);
Profile profile_from_string(const std::string& s);
BackboneKind backbone_from_string(const std::string& s);
FusionVariant fusion_from_string(const std::string& s);

/// Architecture hyperparameters. The paper profile pins the published layer
/// counts (6 encoder / 2 fusion / 6 decoder); the toy profile is free.
struct NetConfig {
  Profile profile = Profile::Toy;
  BackboneKind backbone = BackboneKind::Tiny;
  int channels = 64;  // token width C
  int heads = 4;
  int ffn_width = 256;
  int encoder_layers = 1;  // per modality
  int fusion_layers = 1;
  int decoder_layers = 1;
  int search_resolution = 128;    // square crop side in pixels
  int template_resolution = 64;
  FusionVariant fusion_variant = FusionVariant::B;
  bool positional_embeddings = true;
  double lambda_iou = 2.0;
  double lambda_l1 = 5.0;
  bool generalized_iou = false;

  static NetConfig paper();
  static NetConfig toy(int channels = 64);

  int search_grid() const { return search_resolution / kBackboneStride; }
  int template_grid() const { return template_resolution / kBackboneStride; }
  int token_count() const {
    return template_grid() * template_grid() + search_grid() * search_grid();
  }

  void validate() const;

  bool operator==(const NetConfig&) const = default;
};

}  // namespace rgbdtrack::net
