#include "rgbdtrack/net/model.hpp"

#include <cmath>

namespace rgbdtrack::net {

using nn::Var;

namespace {

std::string stream_name(Stream s) { return s == Stream::Rgb ? "rgb" : "depth"; }

std::vector<int> tiny_channels(int c) {
  return {std::max(4, c / 4), std::max(8, c / 2), c, c};
}

struct StageSpec {
  int blocks, mid, out, stride;
};

constexpr StageSpec kResnetStages[] = {
    {3, 64, 256, 1},
    {4, 128, 512, 2},
    {6, 256, 1024, 2},
};

}  // namespace

nn::Tensor sinusoidal_embedding_2d(int height, int width, int channels) {
  if (channels % 4 != 0) throw InputError("sinusoidal embedding needs channels divisible by 4");
  const int half = channels / 2;   // y block then x block
  const int pairs = half / 2;
  nn::Tensor emb({height * width, channels});
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int row = y * width + x;
      for (int k = 0; k < pairs; ++k) {
        const double freq = std::pow(10000.0, -2.0 * k / half);
        emb.at(row, 2 * k) = std::sin(y * freq);
        emb.at(row, 2 * k + 1) = std::cos(y * freq);
        emb.at(row, half + 2 * k) = std::sin(x * freq);
        emb.at(row, half + 2 * k + 1) = std::cos(x * freq);
      }
    }
  }
  return emb;
}

TrackerModel::TrackerModel(NetConfig cfg, std::uint64_t seed) : cfg_(cfg), store_(seed) {
  cfg_.validate();
  build_params(seed);
  const int t = cfg_.template_grid();
  const int s = cfg_.search_grid();
  const nn::Tensor tpl = sinusoidal_embedding_2d(t, t, cfg_.channels);
  const nn::Tensor srch = sinusoidal_embedding_2d(s, s, cfg_.channels);
  positional_ = nn::Tensor({cfg_.token_count(), cfg_.channels});
  std::copy(tpl.data(), tpl.data() + tpl.size(), positional_.data());
  std::copy(srch.data(), srch.data() + srch.size(), positional_.data() + tpl.size());
}

void TrackerModel::build_params(std::uint64_t) {
  const int c = cfg_.channels;
  const int f = cfg_.ffn_width;

  auto make_attn = [&](const std::string& prefix) {
    for (const char* part : {"q", "k", "v", "o"}) {
      store_.xavier(prefix + ".w" + part, {c, c});
      store_.zeros(prefix + ".b" + part, {c});
    }
  };
  auto make_norm = [&](const std::string& prefix, int width) {
    store_.ones(prefix + ".g", {width});
    store_.zeros(prefix + ".b", {width});
  };
  auto make_ffn = [&](const std::string& prefix) {
    store_.xavier(prefix + ".w1", {c, f});
    store_.zeros(prefix + ".b1", {f});
    store_.xavier(prefix + ".w2", {f, c});
    store_.zeros(prefix + ".b2", {c});
  };
  auto make_encoder_layer = [&](const std::string& prefix) {
    make_attn(prefix + ".attn");
    make_norm(prefix + ".norm1", c);
    make_ffn(prefix + ".ffn");
    make_norm(prefix + ".norm2", c);
  };
  auto make_conv = [&](const std::string& prefix, int out, int in, int k) {
    store_.xavier(prefix + ".w", {out, in, k, k});
    store_.zeros(prefix + ".b", {out});
  };

  for (const char* stream : {"rgb", "depth"}) {
    const std::string bb = std::string("backbone.") + stream;
    if (cfg_.backbone == BackboneKind::Tiny) {
      const auto chans = tiny_channels(c);
      int in = 3;
      for (std::size_t i = 0; i < chans.size(); ++i) {
        const std::string block = bb + ".block" + std::to_string(i);
        make_conv(block + ".conv", chans[i], in, 3);
        make_norm(block + ".norm", chans[i]);
        in = chans[i];
      }
    } else {
      make_conv(bb + ".stem.conv", 64, 3, 7);
      make_norm(bb + ".stem.norm", 64);
      int in = 64;
      for (int st = 0; st < 3; ++st) {
        const auto& spec = kResnetStages[st];
        for (int bl = 0; bl < spec.blocks; ++bl) {
          const std::string block = bb + ".stage" + std::to_string(st + 1) + ".block" +
                                    std::to_string(bl);
          make_conv(block + ".conv1", spec.mid, in, 1);
          make_norm(block + ".norm1", spec.mid);
          make_conv(block + ".conv2", spec.mid, spec.mid, 3);
          make_norm(block + ".norm2", spec.mid);
          make_conv(block + ".conv3", spec.out, spec.mid, 1);
          make_norm(block + ".norm3", spec.out);
          if (bl == 0) {
            make_conv(block + ".down", spec.out, in, 1);
            make_norm(block + ".downnorm", spec.out);
          }
          in = spec.out;
        }
      }
      make_conv(bb + ".proj", c, in, 1);
    }
    for (int i = 0; i < cfg_.encoder_layers; ++i) {
      make_encoder_layer(std::string("encoder.") + stream + ".layer" + std::to_string(i));
    }
  }

  store_.xavier("fusion.proj.w", {2 * c, c});
  store_.zeros("fusion.proj.b", {c});
  for (int i = 0; i < cfg_.fusion_layers; ++i) {
    make_encoder_layer("fusion.enc.layer" + std::to_string(i));
  }

  for (int i = 0; i < cfg_.decoder_layers; ++i) {
    const std::string prefix = "decoder.layer" + std::to_string(i);
    make_attn(prefix + ".self");
    make_norm(prefix + ".norm1", c);
    make_attn(prefix + ".cross");
    make_norm(prefix + ".norm2", c);
    make_ffn(prefix + ".ffn");
    make_norm(prefix + ".norm3", c);
  }

  store_.normal("query", {1, c}, 0.02);

  const int h1 = c;
  const int h2 = std::max(4, c / 2);
  const int h3 = std::max(4, c / 4);
  const int h4 = std::max(4, c / 8);
  for (const char* branch : {"tl", "br"}) {
    const std::string head = std::string("head.") + branch;
    const int widths[] = {c, h1, h2, h3, h4};
    for (int i = 0; i < 4; ++i) {
      make_conv(head + ".conv" + std::to_string(i), widths[i + 1], widths[i], 3);
      make_norm(head + ".norm" + std::to_string(i), widths[i + 1]);
    }
    make_conv(head + ".conv4", 1, h4, 3);
  }

  if (cfg_.profile == Profile::Paper) {
    // the two streams start from identical weights
    store_.copy_prefix("backbone.rgb.", "backbone.depth.");
    store_.copy_prefix("encoder.rgb.", "encoder.depth.");
  }
}

Var TrackerModel::attention(const std::string& prefix, const Var& queries,
                            const Var& memory) const {
  const int dh = cfg_.channels / cfg_.heads;
  auto q = nn::add_rows(nn::matmul(queries, p(prefix + ".wq")), p(prefix + ".bq"));
  auto k = nn::add_rows(nn::matmul(memory, p(prefix + ".wk")), p(prefix + ".bk"));
  auto v = nn::add_rows(nn::matmul(memory, p(prefix + ".wv")), p(prefix + ".bv"));
  std::vector<Var> heads;
  heads.reserve(cfg_.heads);
  for (int h = 0; h < cfg_.heads; ++h) {
    auto qh = nn::slice_cols(q, h * dh, dh);
    auto kh = nn::slice_cols(k, h * dh, dh);
    auto vh = nn::slice_cols(v, h * dh, dh);
    auto scores = nn::scale(nn::matmul(qh, nn::transpose(kh)), 1.0 / std::sqrt(double(dh)));
    heads.push_back(nn::matmul(nn::softmax_rows(scores), vh));
  }
  auto merged = cfg_.heads == 1 ? heads[0] : nn::concat_cols(heads);
  return nn::add_rows(nn::matmul(merged, p(prefix + ".wo")), p(prefix + ".bo"));
}

Var TrackerModel::feed_forward(const std::string& prefix, const Var& x) const {
  auto hidden = nn::relu(nn::add_rows(nn::matmul(x, p(prefix + ".w1")), p(prefix + ".b1")));
  return nn::add_rows(nn::matmul(hidden, p(prefix + ".w2")), p(prefix + ".b2"));
}

Var TrackerModel::encoder_layer(const std::string& prefix, const Var& x) const {
  auto attended = attention(prefix + ".attn", x, x);
  auto x1 = nn::layer_norm(nn::add(x, attended), p(prefix + ".norm1.g"), p(prefix + ".norm1.b"));
  auto f = feed_forward(prefix + ".ffn", x1);
  return nn::layer_norm(nn::add(x1, f), p(prefix + ".norm2.g"), p(prefix + ".norm2.b"));
}

Var TrackerModel::decoder_layer(const std::string& prefix, const Var& q,
                                const Var& memory) const {
  auto self_attended = attention(prefix + ".self", q, q);
  auto q1 = nn::layer_norm(nn::add(q, self_attended), p(prefix + ".norm1.g"),
                           p(prefix + ".norm1.b"));
  auto cross = attention(prefix + ".cross", q1, memory);
  auto q2 = nn::layer_norm(nn::add(q1, cross), p(prefix + ".norm2.g"), p(prefix + ".norm2.b"));
  auto f = feed_forward(prefix + ".ffn", q2);
  return nn::layer_norm(nn::add(q2, f), p(prefix + ".norm3.g"), p(prefix + ".norm3.b"));
}

Var TrackerModel::tiny_backbone(const std::string& prefix, const Var& image) const {
  auto x = image;
  const auto chans = tiny_channels(cfg_.channels);
  for (std::size_t i = 0; i < chans.size(); ++i) {
    const std::string block = prefix + ".block" + std::to_string(i);
    x = nn::conv2d(x, p(block + ".conv.w"), p(block + ".conv.b"), 2, 1);
    x = nn::channel_norm(x, p(block + ".norm.g"), p(block + ".norm.b"));
    x = nn::relu(x);
  }
  return x;
}

Var TrackerModel::resnet_backbone(const std::string& prefix, const Var& image) const {
  auto x = nn::conv2d(image, p(prefix + ".stem.conv.w"), p(prefix + ".stem.conv.b"), 2, 3);
  x = nn::relu(nn::channel_norm(x, p(prefix + ".stem.norm.g"), p(prefix + ".stem.norm.b")));
  x = nn::maxpool2d(x, 3, 2, 1);
  for (int st = 0; st < 3; ++st) {
    const auto& spec = kResnetStages[st];
    for (int bl = 0; bl < spec.blocks; ++bl) {
      const std::string block = prefix + ".stage" + std::to_string(st + 1) + ".block" +
                                std::to_string(bl);
      const int stride = bl == 0 ? spec.stride : 1;
      auto y = nn::conv2d(x, p(block + ".conv1.w"), p(block + ".conv1.b"), 1, 0);
      y = nn::relu(nn::channel_norm(y, p(block + ".norm1.g"), p(block + ".norm1.b")));
      y = nn::conv2d(y, p(block + ".conv2.w"), p(block + ".conv2.b"), stride, 1);
      y = nn::relu(nn::channel_norm(y, p(block + ".norm2.g"), p(block + ".norm2.b")));
      y = nn::conv2d(y, p(block + ".conv3.w"), p(block + ".conv3.b"), 1, 0);
      y = nn::channel_norm(y, p(block + ".norm3.g"), p(block + ".norm3.b"));
      Var skip = x;
      if (bl == 0) {
        skip = nn::conv2d(x, p(block + ".down.w"), p(block + ".down.b"), stride, 0);
        skip = nn::channel_norm(skip, p(block + ".downnorm.g"), p(block + ".downnorm.b"));
      }
      x = nn::relu(nn::add(y, skip));
    }
  }
  return nn::conv2d(x, p(prefix + ".proj.w"), p(prefix + ".proj.b"), 1, 0);
}

Var TrackerModel::extract_features(const Var& image, Stream stream) const {
  if (image->value.ndim() != 3 || image->value.dim(0) != 3) {
    throw InputError("extract_features: expected [3,H,W] image");
  }
  if (image->value.dim(1) % kBackboneStride != 0 || image->value.dim(2) % kBackboneStride != 0) {
    throw InputError("extract_features: image dimensions must be divisible by the stride");
  }
  const std::string prefix = "backbone." + stream_name(stream);
  return cfg_.backbone == BackboneKind::Tiny ? tiny_backbone(prefix, image)
                                             : resnet_backbone(prefix, image);
}

Var TrackerModel::encode_tokens(const Var& tokens, Stream stream) const {
  if (tokens->value.ndim() != 2 || tokens->value.rows() != cfg_.token_count() ||
      tokens->value.cols() != cfg_.channels) {
    throw InputError("encode_tokens: expected [" + std::to_string(cfg_.token_count()) + "," +
                     std::to_string(cfg_.channels) + "] tokens");
  }
  auto x = tokens;
  if (cfg_.positional_embeddings) x = nn::add(x, nn::constant(positional_));
  for (int i = 0; i < cfg_.encoder_layers; ++i) {
    x = encoder_layer("encoder." + stream_name(stream) + ".layer" + std::to_string(i), x);
  }
  return x;
}

TokenSeq TrackerModel::encode_modality(const Var& template_grid, const Var& search_grid,
                                       Stream stream) const {
  const int t = cfg_.template_grid();
  const int s = cfg_.search_grid();
  auto check_grid = [&](const Var& g, int expect, const char* what) {
    if (g->value.ndim() != 3 || g->value.dim(0) != cfg_.channels || g->value.dim(1) != expect ||
        g->value.dim(2) != expect) {
      throw InputError(std::string("encode_modality: ") + what + " grid " +
                       g->value.shape_string() + " does not match config");
    }
  };
  check_grid(template_grid, t, "template");
  check_grid(search_grid, s, "search");
  auto tokens = nn::concat_rows({nn::chw_to_tokens(template_grid), nn::chw_to_tokens(search_grid)});
  TokenSeq seq;
  seq.tokens = encode_tokens(tokens, stream);
  seq.tpl_h = seq.tpl_w = t;
  seq.srch_h = seq.srch_w = s;
  return seq;
}

TokenSeq TrackerModel::fuse(const TokenSeq& rgb, const TokenSeq& depth) const {
  return fuse(rgb, depth, cfg_.fusion_variant);
}

TokenSeq TrackerModel::fuse(const TokenSeq& rgb, const TokenSeq& depth,
                            FusionVariant variant) const {
  if (rgb.tpl_h != depth.tpl_h || rgb.srch_h != depth.srch_h || rgb.tpl_w != depth.tpl_w ||
      rgb.srch_w != depth.srch_w) {
    throw InputError("fuse: modality layouts disagree");
  }
  if (!rgb.tokens->value.same_shape(depth.tokens->value)) {
    throw InputError("fuse: modality token shapes disagree");
  }
  auto cat = nn::concat_cols({rgb.tokens, depth.tokens});  // [L, 2C]
  auto x = nn::add_rows(nn::matmul(cat, p("fusion.proj.w")), p("fusion.proj.b"));
  if (variant == FusionVariant::B || variant == FusionVariant::D) {
    for (int i = 0; i < cfg_.fusion_layers; ++i) {
      x = encoder_layer("fusion.enc.layer" + std::to_string(i), x);
    }
  }
  if (variant == FusionVariant::C || variant == FusionVariant::D) {
    x = nn::add(x, rgb.tokens);  // skip connection emphasizing the RGB stream
  }
  TokenSeq out = rgb;
  out.tokens = x;
  return out;
}

Var TrackerModel::decode(const TokenSeq& fused) const {
  auto q = p("query");
  for (int i = 0; i < cfg_.decoder_layers; ++i) {
    q = decoder_layer("decoder.layer" + std::to_string(i), q, fused.tokens);
  }
  return q;
}

Var TrackerModel::corner_branch(const std::string& prefix, const Var& grid) const {
  auto z = grid;
  for (int i = 0; i < 4; ++i) {
    const std::string idx = std::to_string(i);
    z = nn::conv2d(z, p(prefix + ".conv" + idx + ".w"), p(prefix + ".conv" + idx + ".b"), 1, 1);
    z = nn::relu(nn::channel_norm(z, p(prefix + ".norm" + idx + ".g"),
                                  p(prefix + ".norm" + idx + ".b")));
  }
  return nn::conv2d(z, p(prefix + ".conv4.w"), p(prefix + ".conv4.b"), 1, 1);
}

CornerHeatmaps TrackerModel::predict_heatmaps(const Var& query, const TokenSeq& fused) const {
  if (query->value.ndim() != 2 || query->value.rows() != 1 ||
      query->value.cols() != cfg_.channels) {
    throw InputError("predict_heatmaps: query must be [1,C]");
  }
  // only the search block is reshaped to a spatial map
  auto search = nn::slice_rows(fused.tokens, fused.template_len(), fused.search_len());
  auto sim = nn::matmul(search, nn::transpose(query));  // [H*W, 1]
  auto enhanced = nn::row_scale(search, sim);
  auto grid = nn::tokens_to_chw(enhanced, fused.srch_h, fused.srch_w);
  const int cells = fused.search_len();
  CornerHeatmaps maps;
  maps.height = fused.srch_h;
  maps.width = fused.srch_w;
  maps.tl = nn::softmax_rows(nn::reshape(corner_branch("head.tl", grid), {1, cells}));
  maps.br = nn::softmax_rows(nn::reshape(corner_branch("head.br", grid), {1, cells}));
  return maps;
}

TrackerModel::Forward TrackerModel::forward(const Var& rgb_template, const Var& depth_template,
                                            const Var& rgb_search,
                                            const Var& depth_search) const {
  return forward_with_template_features(extract_features(rgb_template, Stream::Rgb),
                                        extract_features(depth_template, Stream::Depth),
                                        rgb_search, depth_search);
}

TrackerModel::Forward TrackerModel::forward_with_template_features(
    const Var& rgb_template_feat, const Var& depth_template_feat, const Var& rgb_search,
    const Var& depth_search) const {
  auto rgb_tokens = encode_modality(rgb_template_feat, extract_features(rgb_search, Stream::Rgb),
                                    Stream::Rgb);
  auto depth_tokens = encode_modality(depth_template_feat,
                                      extract_features(depth_search, Stream::Depth), Stream::Depth);
  auto fused = fuse(rgb_tokens, depth_tokens);
  auto query = decode(fused);
  Forward out;
  out.heatmaps = predict_heatmaps(query, fused);
  out.corners = soft_argmax(out.heatmaps);
  out.box_norm = corners_to_box_norm(out.corners, out.heatmaps.height, out.heatmaps.width);
  return out;
}

Var soft_argmax(const CornerHeatmaps& maps) {
  const int cells = maps.height * maps.width;
  nn::Tensor xs({cells, 1});
  nn::Tensor ys({cells, 1});
  for (int i = 0; i < cells; ++i) {
    xs[i] = i % maps.width;
    ys[i] = i / maps.width;
  }
  auto xcol = nn::constant(xs);
  auto ycol = nn::constant(ys);
  auto xtl = nn::matmul(maps.tl, xcol);
  auto ytl = nn::matmul(maps.tl, ycol);
  auto xbr = nn::matmul(maps.br, xcol);
  auto ybr = nn::matmul(maps.br, ycol);
  return nn::concat_cols({xtl, ytl, xbr, ybr});
}

std::pair<double, double> soft_argmax(const nn::Tensor& map) {
  if (map.ndim() != 2) throw InputError("soft_argmax: expected [H,W] map");
  double ex = 0.0, ey = 0.0;
  for (int y = 0; y < map.rows(); ++y) {
    for (int x = 0; x < map.cols(); ++x) {
      ex += x * map.at(y, x);
      ey += y * map.at(y, x);
    }
  }
  return {ex, ey};
}

Var corners_to_box_norm(const Var& corners, int grid_h, int grid_w) {
  if (corners->value.ndim() != 2 || corners->value.rows() != 1 || corners->value.cols() != 4) {
    throw InputError("corners_to_box_norm: expected [1,4]");
  }
  // grid index g covers the cell centered at (g + 0.5) / extent
  auto centered = nn::add_scalar(corners, 0.5);
  auto norm = nn::mul(centered, nn::constant(nn::Tensor::from(
                                    {1, 4}, {1.0 / grid_w, 1.0 / grid_h, 1.0 / grid_w, 1.0 / grid_h})));
  auto x = nn::slice_cols(norm, 0, 1);
  auto y = nn::slice_cols(norm, 1, 1);
  auto x2 = nn::slice_cols(norm, 2, 1);
  auto y2 = nn::slice_cols(norm, 3, 1);
  return nn::concat_cols({x, y, nn::sub(x2, x), nn::sub(y2, y)});
}

Var box_loss_graph(const Var& pred_xywh, const Var& gt_xywh, double lambda_iou, double lambda_l1,
                   bool generalized) {
  auto col = [](const Var& v, int i) { return nn::slice_cols(v, i, 1); };
  auto ax0 = col(pred_xywh, 0), ay0 = col(pred_xywh, 1);
  auto aw = col(pred_xywh, 2), ah = col(pred_xywh, 3);
  auto ax1 = nn::add(ax0, aw), ay1 = nn::add(ay0, ah);
  auto bx0 = col(gt_xywh, 0), by0 = col(gt_xywh, 1);
  auto bw = col(gt_xywh, 2), bh = col(gt_xywh, 3);
  auto bx1 = nn::add(bx0, bw), by1 = nn::add(by0, bh);

  auto iw = nn::relu(nn::sub(nn::min_elem(ax1, bx1), nn::max_elem(ax0, bx0)));
  auto ih = nn::relu(nn::sub(nn::min_elem(ay1, by1), nn::max_elem(ay0, by0)));
  auto inter = nn::mul(iw, ih);
  auto area_a = nn::mul(nn::relu(aw), nn::relu(ah));  // degenerate predictions count as empty
  auto area_b = nn::mul(bw, bh);
  auto uni = nn::sub(nn::add(area_a, area_b), inter);
  auto iou = nn::div_elem(inter, nn::add_scalar(uni, 1e-12));
  Var iou_term;
  if (generalized) {
    auto ew = nn::sub(nn::max_elem(ax1, bx1), nn::min_elem(ax0, bx0));
    auto eh = nn::sub(nn::max_elem(ay1, by1), nn::min_elem(ay0, by0));
    auto enclosing = nn::mul(nn::relu(ew), nn::relu(eh));
    auto giou = nn::sub(iou, nn::div_elem(nn::sub(enclosing, uni), nn::add_scalar(enclosing, 1e-12)));
    iou_term = nn::add_scalar(nn::neg(giou), 1.0);
  } else {
    iou_term = nn::add_scalar(nn::neg(iou), 1.0);
  }
  auto l1 = nn::reshape(nn::scale(nn::sum_all(nn::abs_elem(nn::sub(pred_xywh, gt_xywh))), 0.25),
                        {1, 1});
  return nn::add(nn::scale(iou_term, lambda_iou), nn::scale(l1, lambda_l1));
}

double box_loss(const BoundingBox& pred, const BoundingBox& gt, double lambda_iou,
                double lambda_l1, bool generalized) {
  auto pv = nn::constant(nn::Tensor::from({1, 4}, {pred.x, pred.y, pred.w, pred.h}));
  auto gv = nn::constant(nn::Tensor::from({1, 4}, {gt.x, gt.y, gt.w, gt.h}));
  return box_loss_graph(pv, gv, lambda_iou, lambda_l1, generalized)->value.item();
}

}  // namespace rgbdtrack::net
