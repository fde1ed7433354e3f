#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hurry/common.hpp"

namespace hurry {

struct TensorShape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::int64_t elems() const {
    return std::int64_t(channels) * height * width;
  }
  bool operator==(const TensorShape&) const = default;
};

// One layer of the CNN description. Kernel fields are used by Conv/FC,
// window fields by Max, residual_source by Res.
struct LayerSpec {
  int id = 0;
  OpKind kind = OpKind::Conv;
  TensorShape in_shape;
  TensorShape out_shape;

  // Conv/FC kernel: K output channels (FC: out features), kh x kw window.
  int out_channels = 0;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int pad = 0;

  // Max pooling window.
  int pool_h = 0;
  int pool_w = 0;

  int residual_source = -1;  // Res only: id of the skip-connection source.

  int bits_in = 8;   // element width of this layer's input
  int bits_w = 8;    // weight width (Conv/FC)
  int bits_out = 8;  // element width of this layer's output

  // Conv/FC requantization: raw accumulator >> out_shift, clamped to
  // signed bits_out. Absent means raw passthrough (bits_out widens).
  std::optional<int> out_shift;

  // Optional user-supplied weights, [k][c][r][s] flattened (FC: [k][in]).
  std::vector<std::int32_t> weights;

  std::int64_t fc_in_features() const {
    return in_shape.elems();
  }
};

struct ModelGraph {
  std::string name;
  std::string schema_version;
  TensorShape input;
  int input_bits = 8;
  std::vector<LayerSpec> layers;                 // topologically ordered
  std::vector<std::pair<int, int>> edges;        // (producer id, consumer id)

  const LayerSpec& layer(int id) const;
  const LayerSpec& back() const { return layers.back(); }
};

// Parses and validates a model description (schema "v1"). Throws
// ConfigError with the offending layer id on schema or shape errors.
ModelGraph parse_model(const std::string& text);

// Convenience: read a file and parse it.
ModelGraph load_model_file(const std::string& path);

}  // namespace hurry
