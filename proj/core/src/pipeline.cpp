#include "hurry/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "hurry/datamap.hpp"
#include "hurry/reference.hpp"

namespace hurry {

const FbPlan& MappingPlan::fb(int fb_id) const {
  for (const auto& f : fbs)
    if (f.req.fb_id == fb_id) return f;
  throw InvariantError("plan has no fb " + std::to_string(fb_id));
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::LoadInput: return "load_input";
    case Phase::Compute: return "compute";
    case Phase::WriteOutput: return "write_output";
  }
  return "?";
}

EventCounts& EventCounts::operator+=(const EventCounts& o) {
  read_cycles += o.read_cycles;
  adc_conversions += o.adc_conversions;
  for (auto& [b, n] : o.adc_conversions_by_bits) adc_conversions_by_bits[b] += n;
  dac_drives += o.dac_drives;
  sna_ops += o.sna_ops;
  cell_write_events += o.cell_write_events;
  cell_read_activations += o.cell_read_activations;
  register_accesses += o.register_accesses;
  transfer_bytes += o.transfer_bytes;
  lut_evaluations += o.lut_evaluations;
  digital_ops += o.digital_ops;
  adc_saturations += o.adc_saturations;
  return *this;
}

namespace {

std::uint64_t structural_hash(const ModelGraph& m) {
  std::string s = m.name;
  for (const auto& l : m.layers) {
    s += "|" + std::to_string(l.id) + ":" + to_string(l.kind) + ":" +
         std::to_string(l.out_channels) + ":" + std::to_string(l.kernel_h) + "x" +
         std::to_string(l.kernel_w) + ":" + std::to_string(l.pool_h) + "x" +
         std::to_string(l.pool_w) + ":" + std::to_string(l.stride) + ":" +
         std::to_string(l.pad) + ":" + std::to_string(l.bits_w) + ":" +
         std::to_string(l.bits_in);
  }
  return fnv1a(s);
}

}  // namespace

MappingPlan build_plan(const ModelGraph& model, const HardwareConfig& hw,
                       const PlanOptions& opts) {
  MappingPlan plan;
  plan.array = hw.array;
  plan.model_hash = structural_hash(model);

  auto fbs = lower_to_fbs(model, hw.array);

  // One layer group per IMA: a group opens at every weight-stationary FB.
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < fbs.size(); ++i) {
    if (groups.empty() || fbs[i].dataflow == Dataflow::WeightStationary)
      groups.push_back({});
    groups.back().push_back(i);
  }

  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<FbRequirement> sub;
    for (auto idx : groups[g]) sub.push_back(fbs[idx]);

    SequencePair sp = position_fbs(sub, opts.alg1);
    std::vector<FbShape> shapes = balance_sizes(sub, hw.array, opts.throughput);

    // Pack the chain with hosts expanded by their bound res rows, then
    // carve the res block directly beneath its host (shared bitlines).
    std::map<int, int> res_of;  // host fb_id -> index in sub
    for (std::size_t i = 0; i < sub.size(); ++i)
      if (sub[i].accumulates_with) res_of[*sub[i].accumulates_with] = int(i);

    std::vector<FbShape> pack_shapes;
    SequencePair pack_sp;
    for (std::size_t i = 0; i < sub.size(); ++i) {
      if (sub[i].accumulates_with) continue;
      FbShape s = shapes[i];
      if (auto it = res_of.find(sub[i].fb_id); it != res_of.end())
        s.nx += shapes[std::size_t(it->second)].nx;
      pack_shapes.push_back(s);
    }
    auto keep = [&](const std::vector<int>& seq) {
      std::vector<int> out;
      for (int id : seq)
        for (const auto& s : pack_shapes)
          if (s.fb_id == id) out.push_back(id);
      return out;
    };
    pack_sp.seq1 = keep(sp.seq1);
    pack_sp.seq2 = keep(sp.seq2);

    auto placed = realize_placement(pack_sp, pack_shapes, hw.array);

    for (std::size_t i = 0; i < sub.size(); ++i) {
      FbPlan fp;
      fp.req = sub[i];
      fp.shape = shapes[i];
      fp.group = int(g);
      if (!sub[i].accumulates_with) {
        for (const auto& pl : placed)
          if (pl.fb_id == sub[i].fb_id) fp.place = pl;
        fp.place.nx = shapes[i].nx;  // carve the host's own extent back out
        fp.place.fb_id = sub[i].fb_id;
      } else {
        // Directly beneath the host, same column span.
        for (const auto& pl : placed)
          if (pl.fb_id == *sub[i].accumulates_with) {
            fp.place.row = pl.row;  // adjusted below once host extent known
            fp.place.col = pl.col;
            fp.place.ny = shapes[i].ny;
            fp.place.nx = shapes[i].nx;
            fp.place.fb_id = sub[i].fb_id;
          }
      }
      plan.fbs.push_back(fp);
    }
    plan.group_fbs.push_back({});
    for (auto idx : groups[g]) plan.group_fbs.back().push_back(fbs[idx].fb_id);
  }

  // Second pass: res rows start where the host's own rows end.
  for (auto& fp : plan.fbs) {
    if (!fp.req.accumulates_with) continue;
    const FbPlan& host = plan.fb(*fp.req.accumulates_with);
    fp.place.row = host.place.row + host.place.nx;
    fp.place.col = host.place.col;
  }

  // Validate the final geometry.
  for (std::size_t i = 0; i < plan.fbs.size(); ++i) {
    const auto& a = plan.fbs[i].place;
    if (a.row < 0 || a.col < 0 || a.row + a.nx > plan.array.rows || a.col + a.ny > plan.array.cols)
      throw InvariantError("planned fb " + std::to_string(plan.fbs[i].req.fb_id) + " out of bounds");
    for (std::size_t j = i + 1; j < plan.fbs.size(); ++j) {
      if (plan.fbs[i].group != plan.fbs[j].group) continue;
      if (a.overlaps(plan.fbs[j].place))
        throw InvariantError("planned fbs overlap in group " + std::to_string(plan.fbs[i].group));
    }
  }
  return plan;
}

namespace {

// Scheduling view of one FB inside a group.
struct StageInfo {
  const FbPlan* fp = nullptr;
  const LayerSpec* layer = nullptr;
  bool weight_stationary = false;
  std::int64_t parallel_ops = 1;   // replicas / tournament instances
  std::int64_t intake = 1;         // ny / by
  std::int64_t k_out = 1;          // elements produced per op instance
  int elem_bits = 8;
  std::int64_t pass_cycles = 1;
  std::int64_t region_cells = 0;
  int p_leaves = 1;                // elements consumed per tournament window
};

StageInfo make_stage(const FbPlan& fp, const ModelGraph& model, const HardwareConfig& hw) {
  StageInfo s;
  s.fp = &fp;
  s.layer = &model.layer(fp.req.layer_id);
  s.weight_stationary = fp.req.dataflow == Dataflow::WeightStationary;
  TileGrid grid = tile_grid(fp.req, fp.place);
  s.parallel_ops = grid.total();
  s.intake = fp.place.ny / fp.req.by;
  s.region_cells = fp.place.nx * fp.place.ny;
  if (s.weight_stationary) {
    s.k_out = fp.req.by / fp.req.bits_w;
    s.elem_bits = s.layer->bits_in;
    s.pass_cycles = s.layer->bits_in;  // bit-serial read cycles
  } else {
    const TournamentLayout& t = *fp.req.tournament;
    s.elem_bits = t.b;
    s.p_leaves = fp.req.op_kind == OpKind::ReLU ? 1 : t.p;
    int matches = fp.req.op_kind == OpKind::ReLU ? 1 : t.p - 1;
    s.pass_cycles = std::int64_t(matches) * hw.tournament_match_cycles(t.b) + 1;  // +1 winner readout
    if (fp.req.op_kind == OpKind::Softmax)
      s.pass_cycles += std::int64_t(hw.softmax_per_class_cycles) * t.p;
    s.k_out = 1;
  }
  return s;
}

// Row-parallel transfer cost: one cycle per leaf row-slot batch.
std::int64_t transfer_cycles_for(std::int64_t elems, const StageInfo& dst) {
  std::int64_t elems_per_cycle = std::max<std::int64_t>(1, dst.fp->place.ny / dst.elem_bits);
  return ceil_div(elems, elems_per_cycle);
}

struct GroupSchedule {
  std::vector<FbTask> tasks;
  std::int64_t end = 0;
  std::int64_t out_elems = 0;
  int out_bits = 8;
  std::map<int, std::int64_t> stalls;
};

GroupSchedule schedule_group(const std::vector<const FbPlan*>& members, const ModelGraph& model,
                             const HardwareConfig& hw, std::int64_t start) {
  GroupSchedule gs;
  const FbPlan* res_plan = nullptr;
  std::vector<StageInfo> chain;
  for (const FbPlan* fp : members) {
    if (fp->req.accumulates_with) {
      res_plan = fp;
      continue;
    }
    chain.push_back(make_stage(*fp, model, hw));
  }
  if (chain.empty()) throw InvariantError("empty group");

  StageInfo& head = chain[0];
  std::int64_t ops = head.fp->req.ops_per_layer;
  std::int64_t P = head.parallel_ops;
  std::int64_t rounds = ceil_div(ops, P);

  std::vector<std::int64_t> pending(chain.size(), 0);   // elements awaiting windows
  std::vector<std::int64_t> done_windows(chain.size(), 0);
  std::vector<std::int64_t> last_intake(chain.size(), -1);  // granule of the latest hand-off

  std::int64_t head_free = start;
  std::int64_t port = start;

  auto emit = [&](int fb_id, Phase ph, std::int64_t s, std::int64_t len, std::int64_t granule,
                  int prod_fb, std::int64_t prod_gran, std::int64_t cells) {
    if (len <= 0) return s;
    FbTask t;
    t.fb_id = fb_id;
    t.phase = ph;
    t.start = s;
    t.end = s + len;
    t.granule = granule;
    t.producer_fb = prod_fb;
    t.producer_granule = prod_gran;
    t.activated_cells = cells;
    gs.tasks.push_back(t);
    return t.end;
  };

  // Consumer-side port work for the batch of elements produced in round r.
  auto run_consumers = [&](std::int64_t cursor, std::int64_t elems_in, std::int64_t granule,
                           bool drain) {
    std::int64_t e = elems_in;
    for (std::size_t c = 1; c < chain.size(); ++c) {
      StageInfo& st = chain[c];
      StageInfo& prev = chain[c - 1];
      if (e > 0) {
        std::int64_t w = transfer_cycles_for(e, st);
        cursor = emit(prev.fp->req.fb_id, Phase::WriteOutput, cursor, w, granule, -1, -1,
                      st.region_cells);
        // Intake capacity in producer op-instance units: a violation of the
        // sizing bound forces drain passes between partial hand-offs.
        std::int64_t q = ceil_div(prev.parallel_ops, st.intake);
        if (q > 1) {
          std::int64_t gap = (q - 1) * st.pass_cycles;
          gs.stalls[prev.fp->req.fb_id] += gap;
          cursor += gap;
        }
        pending[c] += e;
        last_intake[c] = granule;
      }
      std::int64_t windows = pending[c] / st.p_leaves;
      std::int64_t fire = drain ? windows : (windows / st.parallel_ops) * st.parallel_ops;
      std::int64_t produced = 0;
      while (fire > 0) {
        std::int64_t batch = std::min(fire, st.parallel_ops);
        cursor = emit(st.fp->req.fb_id, Phase::Compute, cursor, st.pass_cycles,
                      done_windows[c], prev.fp->req.fb_id, last_intake[c], st.region_cells);
        pending[c] -= batch * st.p_leaves;
        done_windows[c] += 1;
        produced += batch;
        fire -= batch;
      }
      e = produced;  // winners flow to the next stage
    }
    return std::pair<std::int64_t, std::int64_t>(cursor, e);
  };

  std::int64_t out_elems_total = 0;
  std::int64_t prev_batch_elems = 0;

  for (std::int64_t r = 0; r < rounds; ++r) {
    std::int64_t batch = std::min<std::int64_t>(P, ops - r * P);
    std::int64_t round_start = std::max(head_free, port);
    std::int64_t cursor = round_start;

    if (res_plan) {
      std::int64_t res_elems = batch * head.k_out;
      std::int64_t per_cycle =
          std::max<std::int64_t>(1, res_plan->place.ny / std::max(1, res_plan->req.elem_bits));
      std::int64_t w = ceil_div(res_elems, per_cycle);
      cursor = emit(res_plan->req.fb_id, Phase::LoadInput, cursor, w, r, -1, -1,
                    res_plan->place.nx * res_plan->place.ny);
    }

    std::int64_t head_start = std::max(head_free, cursor);
    if (!head.weight_stationary && r == 0) {
      // Degenerate group headed by an input-stationary FB: load leaves.
      std::int64_t w = transfer_cycles_for(batch * head.p_leaves, head);
      head_start = emit(head.fp->req.fb_id, Phase::LoadInput, head_start, w, r, -1, -1,
                        head.region_cells);
    }
    head_free = emit(head.fp->req.fb_id, Phase::Compute, head_start, head.pass_cycles, r, -1, -1,
                     head.region_cells);

    // Port side works on the previous round's outputs.
    if (r > 0) {
      auto [c2, out] = run_consumers(cursor, prev_batch_elems, r - 1, false);
      cursor = c2;
      out_elems_total += out;
    }
    port = cursor;
    prev_batch_elems = batch * head.k_out;
  }

  // Drain the final round and any partial windows.
  std::int64_t cursor = std::max(head_free, port);
  auto [c3, out] = run_consumers(cursor, prev_batch_elems, rounds - 1, true);
  out_elems_total += out;
  gs.end = std::max(head_free, c3);

  if (chain.size() == 1) out_elems_total = ops * head.k_out;
  gs.out_elems = out_elems_total;
  gs.out_bits = chain.back().weight_stationary ? chain.back().layer->bits_out
                                               : chain.back().elem_bits;
  return gs;
}

}  // namespace

PipelineTrace schedule_plan(const ModelGraph& model, const MappingPlan& plan,
                            const HardwareConfig& hw) {
  PipelineTrace trace;
  trace.array = plan.array;
  trace.used_arrays = std::int64_t(plan.group_fbs.size());
  trace.cell_budget = trace.used_arrays * plan.array.rows * plan.array.cols;

  std::int64_t t = 0;
  for (std::size_t g = 0; g < plan.group_fbs.size(); ++g) {
    std::vector<const FbPlan*> members;
    for (int id : plan.group_fbs[g]) members.push_back(&plan.fb(id));
    GroupSchedule gs = schedule_group(members, model, hw, t);
    for (auto& task : gs.tasks) trace.tasks.push_back(task);
    for (auto& [fb, c] : gs.stalls) trace.stall_cycles[fb] += c;
    t = gs.end;
    // Inter-IMA transfer of the group's outputs (the last group's results
    // leave through the I/O interface instead).
    if (g + 1 < plan.group_fbs.size()) {
      std::int64_t bytes = gs.out_elems * ceil_div(gs.out_bits, 8);
      std::int64_t cycles = std::int64_t(std::ceil(double(bytes) * hw.edram_cycles_per_byte));
      trace.transfer_bytes += bytes;
      trace.transfer_cycles += cycles;
      t += cycles;
    }
  }
  trace.total_cycles = t;
  std::sort(trace.tasks.begin(), trace.tasks.end(),
            [](const FbTask& a, const FbTask& b) {
              return a.start != b.start ? a.start < b.start : a.fb_id < b.fb_id;
            });
  return trace;
}

CycleReport count_cycles(const PipelineTrace& trace, const MappingPlan& plan) {
  CycleReport rep;
  rep.total_cycles = trace.total_cycles;
  std::map<int, FbCycleReport> acc;
  for (const auto& fp : plan.fbs) {
    FbCycleReport r;
    r.fb_id = fp.req.fb_id;
    r.layer_id = fp.req.layer_id;
    acc[r.fb_id] = r;
  }
  for (const auto& t : trace.tasks) {
    auto& r = acc[t.fb_id];
    std::int64_t len = t.end - t.start;
    switch (t.phase) {
      case Phase::LoadInput: r.load_cycles += len; break;
      case Phase::Compute: r.compute_cycles += len; break;
      case Phase::WriteOutput: r.write_cycles += len; break;
    }
  }
  for (const auto& [fb, c] : trace.stall_cycles) acc[fb].stall_cycles += c;
  for (auto& [id, r] : acc) rep.per_fb.push_back(r);

  for (const auto& fp : plan.fbs) {
    std::int64_t total = acc[fp.req.fb_id].total();
    rep.per_layer[fp.req.layer_id] = total;
    for (int m : fp.req.merged_layers) rep.per_layer[m] = total;
  }

  // Overlap fraction: cycles with two or more FBs active over total.
  std::vector<std::pair<std::int64_t, int>> ev;
  for (const auto& t : trace.tasks) {
    ev.push_back({t.start, +1});
    ev.push_back({t.end, -1});
  }
  std::sort(ev.begin(), ev.end());
  std::int64_t overlap = 0, prev = 0;
  int depth = 0;
  for (auto& [cyc, d] : ev) {
    if (depth >= 2) overlap += cyc - prev;
    depth += d;
    prev = cyc;
  }
  rep.overlap_fraction = rep.total_cycles > 0 ? double(overlap) / double(rep.total_cycles) : 0.0;
  return rep;
}

std::string check_trace(const PipelineTrace& trace, const MappingPlan& plan) {
  std::int64_t array_cells = plan.array.rows * plan.array.cols;
  std::int64_t max_end = 0;
  for (const auto& t : trace.tasks) {
    if (t.end < t.start) return "task ends before it starts";
    max_end = std::max(max_end, t.end);
    if (t.activated_cells > array_cells) return "task activates more cells than the array holds";
  }
  if (max_end > trace.total_cycles) return "total cycles below the last task end";

  // Per-cycle activation bound (groups never overlap in time, so a sweep
  // over all tasks covers the per-array constraint).
  std::vector<std::pair<std::int64_t, std::int64_t>> ev;
  for (const auto& t : trace.tasks) {
    ev.push_back({t.start, t.activated_cells});
    ev.push_back({t.end, -t.activated_cells});
  }
  std::sort(ev.begin(), ev.end());
  std::int64_t cur = 0;
  for (auto& [cyc, d] : ev) {
    cur += d;
    if (cur > array_cells) return "activated cells exceed the array at cycle " + std::to_string(cyc);
  }

  // Causality: a consumer compute never precedes its producer's hand-off.
  for (const auto& t : trace.tasks) {
    if (t.phase != Phase::Compute || t.producer_fb < 0) continue;
    bool ok = false;
    for (const auto& w : trace.tasks) {
      if (w.fb_id != t.producer_fb || w.phase != Phase::WriteOutput) continue;
      if (w.granule == t.producer_granule && w.end <= t.start) ok = true;
    }
    if (!ok)
      return "consumer fb " + std::to_string(t.fb_id) + " starts before producer granule " +
             std::to_string(t.producer_granule) + " is written";
  }
  return {};
}

}  // namespace hurry

namespace hurry {

namespace {

std::int64_t tensor_at(const std::vector<std::int64_t>& t, const TensorShape& s, int c, int h,
                       int w) {
  return t[std::size_t((std::int64_t(c) * s.height + h) * s.width + w)];
}

// Flattened im2col window for one output position; zero padding.
std::vector<std::int64_t> conv_window(const LayerSpec& l, const std::vector<std::int64_t>& in,
                                      int y, int x) {
  std::vector<std::int64_t> win(std::size_t(l.kernel_h) * l.kernel_w * l.in_shape.channels, 0);
  std::size_t idx = 0;
  for (int c = 0; c < l.in_shape.channels; ++c)
    for (int i = 0; i < l.kernel_h; ++i)
      for (int j = 0; j < l.kernel_w; ++j, ++idx) {
        int hy = y * l.stride - l.pad + i;
        int hx = x * l.stride - l.pad + j;
        if (hy < 0 || hy >= l.in_shape.height || hx < 0 || hx >= l.in_shape.width) continue;
        win[idx] = tensor_at(in, l.in_shape, c, hy, hx);
      }
  return win;
}

}  // namespace

InferenceResult simulate_inference(const ModelGraph& model, const MappingPlan& plan,
                                   const HardwareConfig& hw, std::span<const std::int64_t> input,
                                   std::uint64_t weight_seed) {
  if (std::int64_t(input.size()) != model.input.elems())
    throw ConfigError("input tensor size does not match the model input shape");

  InferenceResult res;
  res.trace = schedule_plan(model, plan, hw);
  const std::int64_t adc_range = hw.adc_range(hw.array.rows);

  std::map<int, CrossbarState> states;  // group -> its IMA array
  auto state_of = [&](int group) -> CrossbarState& {
    auto it = states.find(group);
    if (it == states.end())
      it = states.emplace(group, CrossbarState(plan.array.rows, plan.array.cols)).first;
    return it->second;
  };

  std::vector<std::int64_t> cur(input.begin(), input.end());
  std::vector<std::int64_t> pending_res_output;

  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const LayerSpec& l = model.layers[li];
    std::vector<std::int64_t> out;

    switch (l.kind) {
      case OpKind::Conv:
      case OpKind::FC: {
        const FbPlan& fp = [&]() -> const FbPlan& {
          for (const auto& f : plan.fbs)
            if (f.req.layer_id == l.id) return f;
          throw InvariantError("no plan for layer " + std::to_string(l.id));
        }();
        CrossbarState& st = state_of(fp.group);

        auto kernel = layer_weights(l, weight_seed);
        auto wasg = map_weights(fp.req, fp.place, kernel);
        auto wbits = bit_matrix(wasg, fp.req, kernel);
        res.config_write_cycles += write_fb(st, fp.place, wbits, hw.include_reset);
        res.events.cell_write_events += std::int64_t(wasg.cells.size());

        const bool res_next =
            li + 1 < model.layers.size() && model.layers[li + 1].kind == OpKind::Res;
        const std::vector<std::int64_t>* residual = nullptr;
        const FbPlan* res_fp = nullptr;
        if (res_next) {
          residual = &res.layer_outputs[std::size_t(model.layers[li + 1].residual_source - 1)];
          for (const auto& f : plan.fbs)
            if (f.req.layer_id == model.layers[li + 1].id) res_fp = &f;
        }

        TileGrid grid = tile_grid(fp.req, fp.place);
        const std::int64_t K = fp.req.by / fp.req.bits_w;
        const TensorShape& os = l.out_shape;
        const std::int64_t positions =
            l.kind == OpKind::Conv ? std::int64_t(os.height) * os.width : 1;
        std::vector<std::int64_t> raw(std::size_t(K * positions), 0);

        for (std::int64_t base = 0; base < positions; base += grid.total()) {
          std::int64_t batch = std::min(grid.total(), positions - base);
          std::vector<std::vector<std::int64_t>> wins{std::size_t(batch), std::vector<std::int64_t>{}};
          for (std::int64_t w = 0; w < batch; ++w) {
            std::int64_t pos = base + w;
            if (l.kind == OpKind::Conv)
              wins[std::size_t(w)] = conv_window(l, cur, int(pos / os.width), int(pos % os.width));
            else
              wins[std::size_t(w)] = cur;
          }
          if (res_fp) {
            // Rewrite the residual bit-planes for this pass: per vertical
            // band the values of its horizontal replicas, channel-major.
            std::vector<std::int64_t> relems(std::size_t(grid.total() * K), 0);
            for (std::int64_t w = 0; w < batch; ++w) {
              std::int64_t pos = base + w;
              for (std::int64_t k = 0; k < K; ++k)
                relems[std::size_t(w * K + k)] =
                    (*residual)[std::size_t(k * positions + pos)];
            }
            auto rasg = map_inputs(res_fp->req, res_fp->place, relems);
            auto rbits = bit_matrix(rasg, res_fp->req, {});
            write_fb(st, res_fp->place, rbits, hw.include_reset);
            res.events.cell_write_events += std::int64_t(rasg.cells.size());
          }
          GemmStats gs;
          auto outs = gemm_pass(st, fp.req, fp.place, wins, l.bits_in, adc_range, &gs);
          res.events.read_cycles += gs.cycles;
          res.events.adc_conversions += gs.adc_conversions;
          res.events.adc_conversions_by_bits[hw.adc_bits_for(hw.array.rows)] += gs.adc_conversions;
          res.events.dac_drives += gs.dac_drives;
          res.events.sna_ops += gs.sna_ops;
          res.events.adc_saturations += gs.adc_saturated_columns;
          res.events.cell_read_activations += gs.activated_cell_cycles;
          res.events.register_accesses += batch * (fp.req.bx + K);
          for (std::int64_t w = 0; w < batch; ++w)
            for (std::int64_t k = 0; k < K; ++k)
              raw[std::size_t(k * positions + base + w)] = outs[std::size_t(w)][std::size_t(k)];
        }

        if (res_next) {
          // The residual current accumulates before requantization; this
          // layer's requant is applied by the res layer.
          pending_res_output.assign(raw.size(), 0);
          for (std::size_t e = 0; e < raw.size(); ++e) {
            std::int64_t sum = raw[e] + (*residual)[e];
            pending_res_output[e] =
                l.out_shift ? requantize(sum, *l.out_shift, l.bits_out) : sum;
          }
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
        out = pending_res_output;
        break;
      }

      case OpKind::ReLU:
      case OpKind::Max: {
        const FbPlan& fp = [&]() -> const FbPlan& {
          for (const auto& f : plan.fbs) {
            if (f.req.layer_id == l.id) return f;
            for (int m : f.req.merged_layers)
              if (m == l.id) return f;
          }
          throw InvariantError("no plan covers layer " + std::to_string(l.id));
        }();

        if (fp.req.layer_id != l.id) {
          // A ReLU merged into a Max FB: the clamp rides the tournament.
          out.resize(cur.size());
          for (std::size_t e = 0; e < cur.size(); ++e) out[e] = std::max<std::int64_t>(cur[e], 0);
          break;
        }

        CrossbarState& st = state_of(fp.group);
        const TournamentLayout& t = *fp.req.tournament;
        const std::int64_t bias = std::int64_t(1) << (t.b - 1);
        TileGrid grid = tile_grid(fp.req, fp.place);
        const bool is_relu = l.kind == OpKind::ReLU;
        TournamentMode mode = is_relu ? TournamentMode::Relu : TournamentMode::Max;

        // Gather per-window element lists.
        std::vector<std::vector<std::int64_t>> windows;
        if (is_relu) {
          for (auto v : cur) windows.push_back({v});
          out.resize(cur.size());
        } else {
          const TensorShape& is = l.in_shape;
          const TensorShape& os = l.out_shape;
          for (int c = 0; c < os.channels; ++c)
            for (int y = 0; y < os.height; ++y)
              for (int x = 0; x < os.width; ++x) {
                std::vector<std::int64_t> w;
                for (int i = 0; i < l.pool_h; ++i)
                  for (int j = 0; j < l.pool_w; ++j)
                    w.push_back(tensor_at(cur, is, c, y * l.stride + i, x * l.stride + j));
                windows.push_back(std::move(w));
              }
          out.resize(windows.size());
        }

        // Merged ReLUs clamp at their own (recorded) layer step so the
        // per-layer outputs match the reference exactly.
        const bool clamp = is_relu;
        for (std::size_t base = 0; base < windows.size(); base += std::size_t(grid.total())) {
          std::size_t batch = std::min(std::size_t(grid.total()), windows.size() - base);
          std::vector<std::int64_t> elems;
          for (std::size_t w = 0; w < batch; ++w)
            for (auto v : windows[base + w]) elems.push_back(v + bias);
          auto asg = map_inputs(fp.req, fp.place, elems, bias);
          auto bits = bit_matrix(asg, fp.req, {});
          write_fb(st, fp.place, bits, hw.include_reset);
          res.events.cell_write_events += std::int64_t(asg.cells.size());
          for (std::size_t w = 0; w < batch; ++w) {
            auto tr = run_tournament(st, fp.req, fp.place, hw, mode, std::int64_t(w),
                                     int(windows[base + w].size()));
            std::int64_t winner = tr.winner - bias;
            if (clamp) winner = std::max<std::int64_t>(winner, 0);
            out[base + w] = winner;
            res.events.cell_write_events += std::int64_t(windows[base + w].size()) * t.b;
          }
          res.events.register_accesses += std::int64_t(elems.size()) + std::int64_t(batch);
        }
        break;
      }

      case OpKind::Softmax: {
        std::int64_t cycles = 0;
        res.probabilities = softmax_eval(cur, hw, &cycles);
        res.events.lut_evaluations += std::int64_t(cur.size());
        res.events.cell_write_events +=
            std::int64_t(cur.size()) * l.bits_in + std::int64_t(cur.size() - 1) * l.bits_in;
        out = cur;
        break;
      }
    }

    res.layer_outputs.push_back(out);
    cur = std::move(out);
  }

  res.events.transfer_bytes += res.trace.transfer_bytes;
  return res;
}

}  // namespace hurry
