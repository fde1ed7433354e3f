#include "hurry/reference.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hurry {

std::vector<std::int32_t> layer_weights(const LayerSpec& layer, std::uint64_t seed) {
  if (!layer.weights.empty()) return layer.weights;
  std::int64_t count = 0;
  if (layer.kind == OpKind::Conv)
    count = std::int64_t(layer.out_channels) * layer.in_shape.channels * layer.kernel_h * layer.kernel_w;
  else if (layer.kind == OpKind::FC)
    count = std::int64_t(layer.out_channels) * layer.fc_in_features();
  std::vector<std::int32_t> w(std::size_t(count), 0);
  std::mt19937_64 rng(seed ^ fnv1a("layer-weights-" + std::to_string(layer.id)));
  std::int64_t lo = -(std::int64_t(1) << (layer.bits_w - 1));
  std::int64_t hi = (std::int64_t(1) << (layer.bits_w - 1)) - 1;
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  for (auto& x : w) x = std::int32_t(dist(rng));
  return w;
}

std::vector<std::int64_t> seeded_input(const ModelGraph& model, std::uint64_t seed) {
  std::vector<std::int64_t> in(std::size_t(model.input.elems()));
  std::mt19937_64 rng(seed ^ fnv1a("input-tensor"));
  std::int64_t lo = -(std::int64_t(1) << (model.input_bits - 1));
  std::int64_t hi = (std::int64_t(1) << (model.input_bits - 1)) - 1;
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  for (auto& x : in) x = dist(rng);
  return in;
}

std::int64_t requantize(std::int64_t raw, int shift, int bits_out) {
  std::int64_t v = raw >> shift;
  std::int64_t lo = -(std::int64_t(1) << (bits_out - 1));
  std::int64_t hi = (std::int64_t(1) << (bits_out - 1)) - 1;
  return std::clamp(v, lo, hi);
}

namespace {

std::int64_t at(const std::vector<std::int64_t>& t, const TensorShape& s, int c, int h, int w) {
  return t[std::size_t((std::int64_t(c) * s.height + h) * s.width + w)];
}

std::vector<std::int64_t> conv_raw(const LayerSpec& l, const std::vector<std::int64_t>& in,
                                   const std::vector<std::int32_t>& w) {
  const TensorShape& is = l.in_shape;
  const TensorShape& os = l.out_shape;
  std::vector<std::int64_t> out(std::size_t(os.elems()), 0);
  const std::int64_t per_k = std::int64_t(is.channels) * l.kernel_h * l.kernel_w;
  for (int k = 0; k < os.channels; ++k)
    for (int y = 0; y < os.height; ++y)
      for (int x = 0; x < os.width; ++x) {
        std::int64_t acc = 0;
        for (int c = 0; c < is.channels; ++c)
          for (int i = 0; i < l.kernel_h; ++i)
            for (int j = 0; j < l.kernel_w; ++j) {
              int hy = y * l.stride - l.pad + i;
              int hx = x * l.stride - l.pad + j;
              if (hy < 0 || hy >= is.height || hx < 0 || hx >= is.width) continue;
              std::int64_t wv = w[std::size_t(k * per_k + (std::int64_t(c) * l.kernel_h + i) * l.kernel_w + j)];
              acc += wv * at(in, is, c, hy, hx);
            }
        out[std::size_t((std::int64_t(k) * os.height + y) * os.width + x)] = acc;
      }
  return out;
}

std::vector<std::int64_t> fc_raw(const LayerSpec& l, const std::vector<std::int64_t>& in,
                                 const std::vector<std::int32_t>& w) {
  const std::int64_t n = l.fc_in_features();
  std::vector<std::int64_t> out(std::size_t(l.out_channels), 0);
  for (int k = 0; k < l.out_channels; ++k) {
    std::int64_t acc = 0;
    for (std::int64_t r = 0; r < n; ++r) acc += std::int64_t(w[std::size_t(k * n + r)]) * in[std::size_t(r)];
    out[std::size_t(k)] = acc;
  }
  return out;
}

}  // namespace

ReferenceResult reference_inference(const ModelGraph& model, std::span<const std::int64_t> input,
                                    std::uint64_t weight_seed) {
  ReferenceResult res;
  std::vector<std::int64_t> cur(input.begin(), input.end());

  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    const bool res_next = i + 1 < model.layers.size() && model.layers[i + 1].kind == OpKind::Res;
    std::vector<std::int64_t> out;
    switch (l.kind) {
      case OpKind::Conv:
      case OpKind::FC: {
        auto w = layer_weights(l, weight_seed);
        auto raw = l.kind == OpKind::Conv ? conv_raw(l, cur, w) : fc_raw(l, cur, w);
        if (res_next) {
          // The residual accumulates on the same bitlines before
          // requantization; this layer's requant is applied by the res.
          out = raw;
        } else if (l.out_shift) {
          out.resize(raw.size());
          for (std::size_t e = 0; e < raw.size(); ++e)
            out[e] = requantize(raw[e], *l.out_shift, l.bits_out);
        } else {
          out = raw;
        }
        break;
      }
      case OpKind::Res: {
        const LayerSpec& host = model.layers[i - 1];
        const auto& src = res.layer_outputs[std::size_t(l.residual_source - 1)];
        out.resize(cur.size());
        for (std::size_t e = 0; e < cur.size(); ++e) {
          std::int64_t sum = cur[e] + src[e];
          out[e] = host.out_shift ? requantize(sum, *host.out_shift, host.bits_out) : sum;
        }
        break;
      }
      case OpKind::ReLU: {
        out.resize(cur.size());
        for (std::size_t e = 0; e < cur.size(); ++e) out[e] = std::max<std::int64_t>(cur[e], 0);
        break;
      }
      case OpKind::Max: {
        const TensorShape& is = l.in_shape;
        const TensorShape& os = l.out_shape;
        out.resize(std::size_t(os.elems()));
        for (int c = 0; c < os.channels; ++c)
          for (int y = 0; y < os.height; ++y)
            for (int x = 0; x < os.width; ++x) {
              std::int64_t best = INT64_MIN;
              for (int i2 = 0; i2 < l.pool_h; ++i2)
                for (int j2 = 0; j2 < l.pool_w; ++j2)
                  best = std::max(best, at(cur, is, c, y * l.stride + i2, x * l.stride + j2));
              out[std::size_t((std::int64_t(c) * os.height + y) * os.width + x)] = best;
            }
        break;
      }
      case OpKind::Softmax: {
        out = cur;
        double mx = -1e300;
        for (auto v : cur) mx = std::max(mx, double(v));
        double s = 0;
        std::vector<double> e(cur.size());
        for (std::size_t k = 0; k < cur.size(); ++k) {
          e[k] = std::exp(double(cur[k]) - mx);
          s += e[k];
        }
        res.probabilities.resize(cur.size());
        for (std::size_t k = 0; k < cur.size(); ++k) res.probabilities[k] = e[k] / s;
        break;
      }
    }
    res.layer_outputs.push_back(out);
    cur = std::move(out);
  }
  return res;
}

std::string compare_with_reference(const ModelGraph& model, std::span<const std::int64_t> input,
                                   std::uint64_t weight_seed,
                                   const std::vector<std::vector<std::int64_t>>& layer_outputs,
                                   const std::vector<double>& probabilities,
                                   double softmax_tol) {
  ReferenceResult ref = reference_inference(model, input, weight_seed);
  if (layer_outputs.size() != ref.layer_outputs.size())
    return "layer count mismatch";
  for (std::size_t i = 0; i < ref.layer_outputs.size(); ++i) {
    if (layer_outputs[i].size() != ref.layer_outputs[i].size())
      return "layer " + std::to_string(i + 1) + ": output size mismatch";
    for (std::size_t e = 0; e < ref.layer_outputs[i].size(); ++e)
      if (layer_outputs[i][e] != ref.layer_outputs[i][e])
        return "layer " + std::to_string(i + 1) + ": element " + std::to_string(e) + " is " +
               std::to_string(layer_outputs[i][e]) + ", reference " +
               std::to_string(ref.layer_outputs[i][e]);
  }
  if (probabilities.size() != ref.probabilities.size()) return "softmax output size mismatch";
  for (std::size_t e = 0; e < probabilities.size(); ++e)
    if (std::abs(probabilities[e] - ref.probabilities[e]) > softmax_tol)
      return "softmax entry " + std::to_string(e) + " off by " +
             std::to_string(std::abs(probabilities[e] - ref.probabilities[e]));
  return {};
}

}  // namespace hurry
