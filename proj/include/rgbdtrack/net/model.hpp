#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "rgbdtrack/geometry.hpp"
#include "rgbdtrack/net/config.hpp"
#include "rgbdtrack/nn/autograd.hpp"

namespace rgbdtrack::net {

enum class Stream { Rgb, Depth };

/// Flattened template+search tokens with the block layout they came from.
struct TokenSeq {
  nn::Var tokens;  // [h*w + H*W, C], template block first
  int tpl_h = 0, tpl_w = 0;
  int srch_h = 0, srch_w = 0;

  int template_len() const { return tpl_h * tpl_w; }
  int search_len() const { return srch_h * srch_w; }
  int length() const { return template_len() + search_len(); }
};

/// Two normalized corner maps over the search grid.
struct CornerHeatmaps {
  nn::Var tl;  // [1, H*W], sums to 1
  nn::Var br;
  int height = 0, width = 0;

  nn::Tensor tl_map() const { return tl->value.reshaped({height, width}); }
  nn::Tensor br_map() const { return br->value.reshaped({height, width}); }
};

/// Dual-stream fusion tracker: per-modality backbone + encoder, fusion
/// module (variants A-D), query decoder and corner prediction head.
class TrackerModel {
 public:
  TrackerModel(NetConfig cfg, std::uint64_t seed);

  const NetConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  /// Backbone: [3,R,R] image -> [C, R/16, R/16] feature grid.
  nn::Var extract_features(const nn::Var& image, Stream stream) const;

  /// Flattens template and search grids, concatenates (template first), adds
  /// sinusoidal positional embeddings and runs the modality encoder stack.
  TokenSeq encode_modality(const nn::Var& template_grid, const nn::Var& search_grid,
                           Stream stream) const;

  /// Positional embedding + encoder stack over an already-flattened sequence.
  nn::Var encode_tokens(const nn::Var& tokens, Stream stream) const;

  TokenSeq fuse(const TokenSeq& rgb, const TokenSeq& depth) const;
  TokenSeq fuse(const TokenSeq& rgb, const TokenSeq& depth, FusionVariant variant) const;

  /// Learnable query through the decoder stack -> [1, C].
  nn::Var decode(const TokenSeq& fused) const;

  /// Similarity-enhanced search tokens through the corner head.
  CornerHeatmaps predict_heatmaps(const nn::Var& query, const TokenSeq& fused) const;

  struct Forward {
    CornerHeatmaps heatmaps;
    nn::Var corners;   // [1,4] (x_tl, y_tl, x_br, y_br) in grid coordinates
    nn::Var box_norm;  // [1,4] (x, y, w, h) in crop-normalized coordinates
  };

  /// Full pass from normalized [3,R,R] crops.
  Forward forward(const nn::Var& rgb_template, const nn::Var& depth_template,
                  const nn::Var& rgb_search, const nn::Var& depth_search) const;

  /// Same pass with precomputed template feature grids (online tracking).
  Forward forward_with_template_features(const nn::Var& rgb_template_feat,
                                         const nn::Var& depth_template_feat,
                                         const nn::Var& rgb_search,
                                         const nn::Var& depth_search) const;

 private:
  nn::Var p(const std::string& name) const { return store_.get(name); }
  nn::Var attention(const std::string& prefix, const nn::Var& queries,
                    const nn::Var& memory) const;
  nn::Var feed_forward(const std::string& prefix, const nn::Var& x) const;
  nn::Var encoder_layer(const std::string& prefix, const nn::Var& x) const;
  nn::Var decoder_layer(const std::string& prefix, const nn::Var& q, const nn::Var& memory) const;
  nn::Var corner_branch(const std::string& prefix, const nn::Var& grid) const;
  nn::Var tiny_backbone(const std::string& prefix, const nn::Var& image) const;
  nn::Var resnet_backbone(const std::string& prefix, const nn::Var& image) const;
  void build_params(std::uint64_t seed);

  NetConfig cfg_;
  nn::ParamStore store_;
  nn::Tensor positional_;  // [h*w + H*W, C]
};

/// Fixed 2D sinusoidal embeddings for an h x w grid, C channels.
nn::Tensor sinusoidal_embedding_2d(int height, int width, int channels);

/// Expectation of grid coordinates under each corner map -> [1,4] graph node.
nn::Var soft_argmax(const CornerHeatmaps& maps);

/// Value-level soft-argmax of one normalized H x W map.
std::pair<double, double> soft_argmax(const nn::Tensor& map);

/// Grid-coordinate corners -> crop-normalized (x,y,w,h) via cell centers.
nn::Var corners_to_box_norm(const nn::Var& corners, int grid_h, int grid_w);

/// Weighted sum of (1 - IoU) and mean-L1 over (x,y,w,h); inputs are [1,4]
/// boxes in the same normalized frame.
nn::Var box_loss_graph(const nn::Var& pred_xywh, const nn::Var& gt_xywh, double lambda_iou,
                       double lambda_l1, bool generalized = false);

/// Scalar loss between two valid boxes in the same normalized frame.
double box_loss(const BoundingBox& pred, const BoundingBox& gt, double lambda_iou,
                double lambda_l1, bool generalized = false);

}  // namespace rgbdtrack::net
