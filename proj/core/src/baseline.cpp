#include "hurry/baseline.hpp"

#include <cmath>

namespace hurry {

namespace {

struct LayerMap {
  std::int64_t bx = 0, byw = 0;
  std::int64_t grid_arrays = 0;
  std::int64_t mapped = 0;
  std::int64_t size = 0;  // chosen array size
  double util = 0;
};

LayerMap map_gemm_layer(const LayerSpec& l, const HardwareConfig& hw, std::int64_t size) {
  LayerMap m;
  m.size = size;
  m.bx = l.kind == OpKind::Conv
             ? std::int64_t(l.kernel_h) * l.kernel_w * l.in_shape.channels
             : l.fc_in_features();
  std::int64_t cols_per_weight = ceil_div(l.bits_w, hw.baseline_cell_bits);
  m.byw = std::int64_t(l.out_channels) * cols_per_weight;
  m.grid_arrays = ceil_div(m.bx, size) * ceil_div(m.byw, size);
  m.mapped = m.bx * m.byw;
  m.util = double(m.mapped) / (double(m.grid_arrays) * double(size) * double(size));
  return m;
}

}  // namespace

BaselineResult run_baseline(const ModelGraph& model, const HardwareConfig& hw,
                            const BaselineConfig& cfg) {
  if (cfg.sizes.empty()) throw ConfigError("baseline needs at least one array size");

  BaselineResult res;
  res.trace.array = hw.array;
  Allocation alloc;

  std::int64_t t = 0;
  int pseudo_fb = 1;

  auto move_bytes = [&](std::int64_t bytes) {
    std::int64_t cycles = std::int64_t(std::ceil(double(bytes) * hw.edram_cycles_per_byte));
    res.events.transfer_bytes += bytes;
    res.trace.transfer_bytes += bytes;
    res.trace.transfer_cycles += cycles;
    res.movement_cycles += cycles;
    t += cycles;
  };
  auto bytes_of = [](std::int64_t elems, int bits) { return elems * ceil_div(bits, 8); };

  for (const auto& l : model.layers) {
    switch (l.kind) {
      case OpKind::Conv:
      case OpKind::FC: {
        LayerMap best;
        if (cfg.mode == BaselineMode::Static) {
          best = map_gemm_layer(l, hw, cfg.sizes.front());
        } else {
          bool first = true;
          for (auto size : cfg.sizes) {
            LayerMap m = map_gemm_layer(l, hw, size);
            if (first || m.util > best.util || (m.util == best.util && m.size < best.size)) {
              best = m;
              first = false;
            }
          }
        }
        alloc.arrays_by_size[best.size] += best.grid_arrays;
        res.layer_array_size.push_back({l.id, best.size});
        res.spatial.push_back({l.id, best.util, best.mapped, best.grid_arrays});

        std::int64_t positions = l.kind == OpKind::Conv
                                     ? std::int64_t(l.out_shape.height) * l.out_shape.width
                                     : 1;
        move_bytes(bytes_of(l.in_shape.elems(), l.bits_in));
        std::int64_t compute = positions * l.bits_in;
        FbTask task;
        task.fb_id = pseudo_fb;
        task.phase = Phase::Compute;
        task.start = t;
        task.end = t + compute;
        task.granule = 0;
        task.activated_cells = std::min(best.mapped, hw.array.rows * hw.array.cols);
        res.trace.tasks.push_back(task);
        t += compute;

        res.events.read_cycles += compute;
        res.events.adc_conversions += compute * best.byw;
        res.events.adc_conversions_by_bits[hw.adc_bits_for(best.size)] += compute * best.byw;
        res.events.dac_drives += compute * best.bx;
        res.events.cell_read_activations += compute * best.mapped;
        res.events.sna_ops += positions * best.byw;
        res.events.cell_write_events += best.mapped;  // one-time weight write
        res.events.register_accesses += positions * (best.bx + l.out_channels);

        move_bytes(bytes_of(l.out_shape.elems(), l.bits_out));
        break;
      }
      case OpKind::Max: {
        std::int64_t windows = l.out_shape.elems();
        move_bytes(bytes_of(l.in_shape.elems(), l.bits_in));
        std::int64_t cycles = windows * hw.digital_pool_cycles_per_window;
        res.events.digital_ops += windows;
        t += cycles;
        move_bytes(bytes_of(windows, l.bits_out));
        break;
      }
      case OpKind::ReLU:
      case OpKind::Res: {
        std::int64_t elems = l.out_shape.elems();
        std::int64_t in_bytes = bytes_of(elems, l.bits_in);
        if (l.kind == OpKind::Res) in_bytes *= 2;  // both operand streams
        move_bytes(in_bytes);
        t += elems * hw.digital_relu_cycles_per_elem;
        res.events.digital_ops += elems;
        move_bytes(bytes_of(elems, l.bits_out));
        break;
      }
      case OpKind::Softmax: {
        std::int64_t elems = l.in_shape.elems();
        move_bytes(bytes_of(elems, l.bits_in));
        t += elems * hw.digital_softmax_cycles_per_elem;
        res.events.digital_ops += elems;
        break;
      }
    }
    ++pseudo_fb;
  }

  res.trace.total_cycles = t;
  res.used_arrays = alloc.total();
  res.trace.used_arrays = std::max<std::int64_t>(1, res.used_arrays);
  res.trace.cell_budget = 0;
  for (auto& [rows, count] : alloc.arrays_by_size) res.trace.cell_budget += count * rows * rows;
  if (res.trace.cell_budget == 0) res.trace.cell_budget = hw.array.rows * hw.array.cols;
  // Keep the allocation for cost accounting.
  res.alloc = alloc;
  return res;
}

}  // namespace hurry
