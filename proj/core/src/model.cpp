#include "hurry/model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hurry {

using nlohmann::json;

const LayerSpec& ModelGraph::layer(int id) const {
  for (const auto& l : layers)
    if (l.id == id) return l;
  throw ConfigError("no layer with id " + std::to_string(id));
}

namespace {

[[noreturn]] void fail(int layer_id, const std::string& msg) {
  throw ConfigError("layer " + std::to_string(layer_id) + ": " + msg);
}

int get_int(const json& j, const char* key, int layer_id) {
  if (!j.contains(key)) fail(layer_id, std::string("missing field '") + key + "'");
  if (!j[key].is_number_integer()) fail(layer_id, std::string("field '") + key + "' must be an integer");
  return j[key].get<int>();
}

int get_int_or(const json& j, const char* key, int dflt, int layer_id) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number_integer()) fail(layer_id, std::string("field '") + key + "' must be an integer");
  return j[key].get<int>();
}

// Output extent of a sliding window over `in` with the given geometry.
int window_out(int in, int k, int stride, int pad, int layer_id, const char* axis) {
  int span = in + 2 * pad - k;
  if (span < 0) fail(layer_id, std::string("kernel exceeds padded input along ") + axis);
  return span / stride + 1;
}

void infer_shapes(ModelGraph& g) {
  TensorShape cur = g.input;
  int cur_bits = g.input_bits;
  for (auto& l : g.layers) {
    l.in_shape = cur;
    l.bits_in = cur_bits;
    switch (l.kind) {
      case OpKind::Conv: {
        l.out_shape.channels = l.out_channels;
        l.out_shape.height = window_out(cur.height, l.kernel_h, l.stride, l.pad, l.id, "height");
        l.out_shape.width = window_out(cur.width, l.kernel_w, l.stride, l.pad, l.id, "width");
        break;
      }
      case OpKind::FC: {
        // FC consumes the flattened input; geometrically a 1x1 map.
        l.out_shape = {l.out_channels, 1, 1};
        break;
      }
      case OpKind::Max: {
        l.out_shape.channels = cur.channels;
        l.out_shape.height = window_out(cur.height, l.pool_h, l.stride, 0, l.id, "height");
        l.out_shape.width = window_out(cur.width, l.pool_w, l.stride, 0, l.id, "width");
        break;
      }
      case OpKind::ReLU:
      case OpKind::Res:
      case OpKind::Softmax: {
        l.out_shape = cur;
        break;
      }
    }
    if (l.out_shape.channels <= 0 || l.out_shape.height <= 0 || l.out_shape.width <= 0)
      fail(l.id, "output shape is not positive");

    if (l.kind == OpKind::Conv || l.kind == OpKind::FC) {
      if (l.out_shift) {
        if (*l.out_shift < 0) fail(l.id, "out_shift must be >= 0");
      } else {
        // Raw passthrough: accumulator width grows with the dot-product size.
        std::int64_t terms = (l.kind == OpKind::Conv)
                                 ? std::int64_t(l.kernel_h) * l.kernel_w * cur.channels
                                 : l.fc_in_features();
        int width = l.bits_in + l.bits_w + signed_bit_width(terms);
        l.bits_out = std::min(width + 1, 48);
      }
    } else {
      l.bits_out = cur_bits;
    }
    cur = l.out_shape;
    cur_bits = l.bits_out;
  }
}

void validate_fields(const ModelGraph& g) {
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& l = g.layers[i];
    if (l.id != int(i) + 1) fail(l.id, "ids must be consecutive from 1 in file order");
    switch (l.kind) {
      case OpKind::Conv:
      case OpKind::FC:
        if (l.out_channels < 1) fail(l.id, "out_channels must be >= 1");
        if (l.kernel_h < 1 || l.kernel_w < 1) fail(l.id, "kernel dims must be >= 1");
        if (l.stride < 1) fail(l.id, "stride must be >= 1");
        if (l.pad < 0) fail(l.id, "pad must be >= 0");
        if (l.bits_w < 1) fail(l.id, "bits_w must be >= 1");
        break;
      case OpKind::Max:
        if (l.pool_h < 1 || l.pool_w < 1) fail(l.id, "pool window must be >= 1");
        if (l.stride < 1) fail(l.id, "stride must be >= 1");
        break;
      case OpKind::Res: {
        if (l.residual_source < 1 || l.residual_source >= l.id)
          fail(l.id, "residual_source must name an earlier layer");
        if (i == 0) fail(l.id, "res cannot be the first layer");
        const auto& prod = g.layers[i - 1];
        if (prod.kind != OpKind::Conv && prod.kind != OpKind::FC)
          fail(l.id, "res must directly follow the conv/fc it accumulates with");
        break;
      }
      case OpKind::ReLU:
      case OpKind::Softmax:
        break;
    }
  }
  if (!g.layers.empty() && g.layers.front().kind == OpKind::Res)
    fail(1, "first layer has no producer");
}

void validate(ModelGraph& g) {
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    auto& l = g.layers[i];
    if (l.bits_in < 1) fail(l.id, "bits_in must be >= 1");
    if (l.kind == OpKind::Res) {
      const auto& src = g.layer(l.residual_source);
      if (!(src.out_shape == l.out_shape))
        fail(l.id, "residual_source shape does not match res output shape");
    }
    if (!l.weights.empty()) {
      std::int64_t want = (l.kind == OpKind::Conv)
                              ? std::int64_t(l.out_channels) * l.in_shape.channels * l.kernel_h * l.kernel_w
                              : (l.kind == OpKind::FC ? l.out_channels * l.fc_in_features() : 0);
      if (want == 0) fail(l.id, "weights given for a layer without weights");
      if (std::int64_t(l.weights.size()) != want)
        fail(l.id, "weights length " + std::to_string(l.weights.size()) + ", expected " + std::to_string(want));
      std::int64_t lo = -(std::int64_t(1) << (l.bits_w - 1));
      std::int64_t hi = (std::int64_t(1) << (l.bits_w - 1)) - 1;
      for (auto w : l.weights)
        if (w < lo || w > hi) fail(l.id, "weight out of signed bits_w range");
    }
  }
}

}  // namespace

ModelGraph parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model is not valid JSON: ") + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"] != "v1")
    throw ConfigError("model schema_version must be \"v1\"");
  if (!j.contains("input") || !j.contains("layers"))
    throw ConfigError("model must have 'input' and 'layers'");

  ModelGraph g;
  g.schema_version = "v1";
  g.name = j.value("name", "unnamed");
  const auto& in = j["input"];
  g.input.channels = get_int(in, "channels", 0);
  g.input.height = get_int(in, "height", 0);
  g.input.width = get_int(in, "width", 0);
  g.input_bits = get_int_or(in, "bits", 8, 0);
  if (g.input.channels < 1 || g.input.height < 1 || g.input.width < 1 || g.input_bits < 1)
    throw ConfigError("model input shape/bits must be positive");

  if (!j["layers"].is_array() || j["layers"].empty())
    throw ConfigError("'layers' must be a non-empty array");

  int next_id = 1;
  for (const auto& lj : j["layers"]) {
    LayerSpec l;
    l.id = get_int_or(lj, "id", next_id, next_id);
    l.kind = op_kind_from_string(lj.value("kind", std::string()));
    switch (l.kind) {
      case OpKind::Conv:
        l.out_channels = get_int(lj, "out_channels", l.id);
        l.kernel_h = get_int(lj, "kernel_h", l.id);
        l.kernel_w = get_int(lj, "kernel_w", l.id);
        l.stride = get_int_or(lj, "stride", 1, l.id);
        l.pad = get_int_or(lj, "pad", 0, l.id);
        l.bits_w = get_int_or(lj, "bits_w", 8, l.id);
        break;
      case OpKind::FC:
        l.out_channels = get_int(lj, "out_features", l.id);
        l.kernel_h = l.kernel_w = 1;
        l.bits_w = get_int_or(lj, "bits_w", 8, l.id);
        break;
      case OpKind::Max:
        l.pool_h = get_int(lj, "pool_h", l.id);
        l.pool_w = get_int(lj, "pool_w", l.id);
        l.stride = get_int_or(lj, "stride", l.pool_h, l.id);
        break;
      case OpKind::Res:
        l.residual_source = get_int(lj, "residual_source", l.id);
        break;
      case OpKind::ReLU:
      case OpKind::Softmax:
        break;
    }
    if (lj.contains("out_shift")) l.out_shift = get_int(lj, "out_shift", l.id);
    if (lj.contains("bits_out")) l.bits_out = get_int(lj, "bits_out", l.id);
    if (lj.contains("weights")) {
      if (!lj["weights"].is_array()) fail(l.id, "'weights' must be an array");
      for (const auto& w : lj["weights"]) l.weights.push_back(w.get<std::int32_t>());
    }
    g.layers.push_back(std::move(l));
    ++next_id;
  }

  // bits_out from the file only applies to requantized conv/fc layers.
  for (auto& l : g.layers) {
    if (l.out_shift && l.bits_out < 1) fail(l.id, "bits_out must be >= 1");
  }

  validate_fields(g);
  infer_shapes(g);
  validate(g);

  // Chain edges plus residual edges.
  for (std::size_t i = 1; i < g.layers.size(); ++i)
    g.edges.emplace_back(g.layers[i - 1].id, g.layers[i].id);
  for (const auto& l : g.layers)
    if (l.kind == OpKind::Res) g.edges.emplace_back(l.residual_source, l.id);

  return g;
}

ModelGraph load_model_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_model(ss.str());
}

}  // namespace hurry
