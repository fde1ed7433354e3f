#include "hurry/lowering.hpp"

namespace hurry {

namespace {

bool is_relu_merged(const ModelGraph& g, std::size_t i) {
  // ReLU fuses into an adjacent Max layer (either order).
  if (g.layers[i].kind != OpKind::ReLU) return false;
  if (i + 1 < g.layers.size() && g.layers[i + 1].kind == OpKind::Max) return true;
  if (i > 0 && g.layers[i - 1].kind == OpKind::Max) return true;
  return false;
}

void check_fits(const FbRequirement& fb, const ArrayDims& array, int layer_id) {
  if (fb.bx > array.rows || fb.by > array.cols)
    throw InfeasibleError("layer " + std::to_string(layer_id) + ": op instance " +
                          std::to_string(fb.bx) + "x" + std::to_string(fb.by) +
                          " does not fit a " + std::to_string(array.rows) + "x" +
                          std::to_string(array.cols) + " array");
}

}  // namespace

std::vector<FbRequirement> lower_to_fbs(const ModelGraph& graph, const ArrayDims& array) {
  std::vector<FbRequirement> fbs;
  int next_fb = 1;

  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& l = graph.layers[i];
    if (is_relu_merged(graph, i)) {
      // Attach to the Max FB; the preceding-ReLU case is patched once the
      // Max FB exists (below), the following-ReLU case here.
      if (!fbs.empty() && graph.layer(fbs.back().layer_id).kind == OpKind::Max)
        fbs.back().merged_layers.push_back(l.id);
      continue;
    }

    FbRequirement fb;
    fb.fb_id = next_fb;
    fb.layer_id = l.id;
    fb.op_kind = l.kind;

    switch (l.kind) {
      case OpKind::Conv: {
        fb.dataflow = Dataflow::WeightStationary;
        fb.bx = std::int64_t(l.kernel_h) * l.kernel_w * l.in_shape.channels;
        fb.by = std::int64_t(l.out_channels) * l.bits_w;
        fb.bits_w = l.bits_w;
        fb.ops_per_layer = std::int64_t(l.out_shape.height) * l.out_shape.width;
        break;
      }
      case OpKind::FC: {
        fb.dataflow = Dataflow::WeightStationary;
        fb.bx = l.fc_in_features();
        fb.by = std::int64_t(l.out_channels) * l.bits_w;
        fb.bits_w = l.bits_w;
        fb.ops_per_layer = 1;
        break;
      }
      case OpKind::Max: {
        fb.dataflow = Dataflow::InputStationary;
        fb.elem_bits = l.bits_in;
        fb.tournament = plan_tournament(l.pool_h * l.pool_w, l.bits_in);
        fb.bx = fb.tournament->rows();
        fb.by = fb.tournament->leaf_columns;
        fb.ops_per_layer = l.out_shape.elems();
        // A ReLU immediately before this Max fused into it, unless it
        // already went to a Max right before it.
        if (i > 0 && graph.layers[i - 1].kind == OpKind::ReLU &&
            !(i > 1 && graph.layers[i - 2].kind == OpKind::Max))
          fb.merged_layers.push_back(graph.layers[i - 1].id);
        break;
      }
      case OpKind::ReLU: {
        // Standalone ReLU: two-leaf tournament against a constant zero.
        fb.dataflow = Dataflow::InputStationary;
        fb.elem_bits = l.bits_in;
        fb.tournament = plan_tournament(2, l.bits_in);
        fb.bx = fb.tournament->rows();
        fb.by = fb.tournament->leaf_columns;
        fb.ops_per_layer = l.in_shape.elems();
        break;
      }
      case OpKind::Res: {
        const FbRequirement& host = fbs.back();  // validated: conv/fc right before
        fb.dataflow = Dataflow::InputStationary;
        fb.elem_bits = l.bits_in;
        fb.bx = l.bits_in;  // one row per residual bit-plane
        fb.by = host.by;    // shares the producer's bitlines
        fb.bits_w = host.bits_w;
        fb.ops_per_layer = host.ops_per_layer;
        fb.accumulates_with = host.fb_id;
        break;
      }
      case OpKind::Softmax: {
        fb.dataflow = Dataflow::InputStationary;
        fb.elem_bits = l.bits_in;
        fb.tournament = plan_tournament(int(l.in_shape.elems()), l.bits_in);
        fb.bx = fb.tournament->rows();
        fb.by = fb.tournament->leaf_columns;
        fb.ops_per_layer = 1;
        break;
      }
    }

    check_fits(fb, array, l.id);
    fbs.push_back(std::move(fb));
    ++next_fb;
  }
  return fbs;
}

const FbRequirement& fb_for_layer(const std::vector<FbRequirement>& fbs, int layer_id) {
  for (const auto& fb : fbs) {
    if (fb.layer_id == layer_id) return fb;
    for (int m : fb.merged_layers)
      if (m == layer_id) return fb;
  }
  throw InvariantError("no FB covers layer " + std::to_string(layer_id));
}

}  // namespace hurry
