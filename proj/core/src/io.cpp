#include "hurry/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hurry {

using nlohmann::ordered_json;

void atomic_write(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + tmp);
    f << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ConfigError("cannot rename " + tmp + " to " + path);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string plan_to_json(const MappingPlan& plan) {
  ordered_json j;
  j["schema_version"] = "v1";
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", (unsigned long long)plan.model_hash);
  j["model_hash"] = hash;
  j["array"] = {{"rows", plan.array.rows}, {"cols", plan.array.cols}};
  j["groups"] = plan.group_fbs;
  ordered_json fbs = ordered_json::array();
  for (const auto& fp : plan.fbs) {
    ordered_json f;
    f["fb_id"] = fp.req.fb_id;
    f["layer_id"] = fp.req.layer_id;
    f["op_kind"] = to_string(fp.req.op_kind);
    f["dataflow"] = to_string(fp.req.dataflow);
    f["bx"] = fp.req.bx;
    f["by"] = fp.req.by;
    f["ops_per_layer"] = fp.req.ops_per_layer;
    f["bits_w"] = fp.req.bits_w;
    f["elem_bits"] = fp.req.elem_bits;
    if (fp.req.accumulates_with) f["accumulates_with"] = *fp.req.accumulates_with;
    if (!fp.req.merged_layers.empty()) f["merged_layers"] = fp.req.merged_layers;
    if (fp.req.tournament) f["tournament"] = {{"p", fp.req.tournament->p}, {"b", fp.req.tournament->b}};
    f["shape"] = {{"nx", fp.shape.nx}, {"ny", fp.shape.ny}};
    f["place"] = {{"row", fp.place.row}, {"col", fp.place.col}, {"nx", fp.place.nx}, {"ny", fp.place.ny}};
    f["group"] = fp.group;
    fbs.push_back(f);
  }
  j["fbs"] = fbs;
  return j.dump(2) + "\n";
}

MappingPlan plan_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("plan file is not valid JSON: ") + e.what());
  }
  if (j.value("schema_version", "") != "v1") throw ConfigError("plan schema_version must be \"v1\"");
  MappingPlan plan;
  plan.model_hash = std::stoull(j.value("model_hash", "0"), nullptr, 16);
  plan.array.rows = j["array"]["rows"].get<std::int64_t>();
  plan.array.cols = j["array"]["cols"].get<std::int64_t>();
  for (const auto& g : j["groups"]) plan.group_fbs.push_back(g.get<std::vector<int>>());
  for (const auto& f : j["fbs"]) {
    FbPlan fp;
    fp.req.fb_id = f["fb_id"].get<int>();
    fp.req.layer_id = f["layer_id"].get<int>();
    fp.req.op_kind = op_kind_from_string(f["op_kind"].get<std::string>());
    fp.req.dataflow = f["dataflow"].get<std::string>() == "weight_stationary"
                          ? Dataflow::WeightStationary
                          : Dataflow::InputStationary;
    fp.req.bx = f["bx"].get<std::int64_t>();
    fp.req.by = f["by"].get<std::int64_t>();
    fp.req.ops_per_layer = f["ops_per_layer"].get<std::int64_t>();
    fp.req.bits_w = f["bits_w"].get<int>();
    fp.req.elem_bits = f["elem_bits"].get<int>();
    if (f.contains("accumulates_with")) fp.req.accumulates_with = f["accumulates_with"].get<int>();
    if (f.contains("merged_layers")) fp.req.merged_layers = f["merged_layers"].get<std::vector<int>>();
    if (f.contains("tournament"))
      fp.req.tournament = plan_tournament(f["tournament"]["p"].get<int>(), f["tournament"]["b"].get<int>());
    fp.shape.fb_id = fp.req.fb_id;
    fp.shape.nx = f["shape"]["nx"].get<std::int64_t>();
    fp.shape.ny = f["shape"]["ny"].get<std::int64_t>();
    fp.place.fb_id = fp.req.fb_id;
    fp.place.row = f["place"]["row"].get<std::int64_t>();
    fp.place.col = f["place"]["col"].get<std::int64_t>();
    fp.place.nx = f["place"]["nx"].get<std::int64_t>();
    fp.place.ny = f["place"]["ny"].get<std::int64_t>();
    fp.group = f["group"].get<int>();
    plan.fbs.push_back(fp);
  }
  return plan;
}

void write_plan(const std::string& path, const MappingPlan& plan) {
  atomic_write(path, plan_to_json(plan));
}

MappingPlan load_plan(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open plan file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return plan_from_json(ss.str());
}

std::string trace_to_text(const PipelineTrace& trace) {
  std::ostringstream out;
  out << "# cycle fb_id phase activated_cells\n";
  // Expand task spans; rows ordered by (cycle, fb_id, phase).
  struct Row {
    std::int64_t cycle;
    int fb;
    int phase;
    std::int64_t cells;
  };
  std::vector<Row> rows;
  for (const auto& t : trace.tasks)
    for (std::int64_t c = t.start; c < t.end; ++c)
      rows.push_back({c, t.fb_id, int(t.phase), t.activated_cells});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.cycle != b.cycle) return a.cycle < b.cycle;
    if (a.fb != b.fb) return a.fb < b.fb;
    return a.phase < b.phase;
  });
  for (const auto& r : rows)
    out << r.cycle << ' ' << r.fb << ' ' << to_string(Phase(r.phase)) << ' ' << r.cells << '\n';
  return out.str();
}

void write_trace(const std::string& path, const PipelineTrace& trace) {
  atomic_write(path, trace_to_text(trace));
}

std::string spatial_csv(const std::vector<LayerUtil>& spatial) {
  std::ostringstream out;
  out << "layer_id,utilization,mapped_cells,arrays\n";
  for (const auto& u : spatial)
    out << u.layer_id << ',' << format_double(u.util) << ',' << u.mapped_cells << ','
        << u.arrays_used << '\n';
  return out.str();
}

std::string cost_csv(const CostReport& cost) {
  std::ostringstream out;
  out << "component,energy_pj,area_mm2\n";
  for (const auto& l : cost.lines)
    out << l.component << ',' << format_double(l.energy_pj) << ',' << format_double(l.area_mm2)
        << '\n';
  out << "total," << format_double(cost.energy_total_pj) << ','
      << format_double(cost.area_total_mm2) << '\n';
  return out.str();
}

std::string utilization_summary(const UtilizationReport& rep) {
  std::ostringstream out;
  out << "total_cycles " << rep.total_cycles << '\n';
  out << "spatial_mean " << format_double(rep.spatial_mean) << '\n';
  out << "spatial_stddev " << format_double(rep.spatial_stddev) << '\n';
  out << "temporal_mean " << format_double(rep.temporal_mean) << '\n';
  return out.str();
}

std::string plot_csv_spatial_vs_size(const ModelGraph& model, const HardwareConfig& hw,
                                     const std::vector<std::int64_t>& sizes) {
  std::ostringstream out;
  out << "array_size,spatial_utilization_mean\n";
  for (auto size : sizes) {
    BaselineConfig cfg;
    cfg.mode = BaselineMode::Static;
    cfg.sizes = {size};
    BaselineResult r = run_baseline(model, hw, cfg);
    double mean = 0, sd = 0;
    spatial_stats(r.spatial, mean, sd);
    out << size << ',' << format_double(mean) << '\n';
  }
  return out.str();
}

}  // namespace hurry
