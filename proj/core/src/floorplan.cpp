#include "hurry/floorplan.hpp"

#include <algorithm>
#include <map>

namespace hurry {

namespace {

void insert_left_of(std::vector<int>& seq, int id, int target) {
  auto it = std::find(seq.begin(), seq.end(), target);
  seq.insert(it, id);
}

// Index of the FB a res-kind requirement accumulates into, or -1.
int host_index(const std::vector<FbRequirement>& fbs, std::size_t i) {
  if (!fbs[i].accumulates_with) return -1;
  for (std::size_t j = 0; j < fbs.size(); ++j)
    if (fbs[j].fb_id == *fbs[i].accumulates_with) return int(j);
  return -1;
}

}  // namespace

SequencePair position_fbs(const std::vector<FbRequirement>& fbs, Alg1Mode mode) {
  SequencePair sp;
  if (fbs.empty()) return sp;
  sp.seq1 = {fbs[0].fb_id};
  sp.seq2 = {fbs[0].fb_id};
  for (std::size_t i = 1; i < fbs.size(); ++i) {
    int id = fbs[i].fb_id;
    int host = host_index(fbs, i);
    if (host >= 0 && host < int(i)) {
      // Accumulative: below the host (after it in seq1, before it in seq2).
      sp.seq1.push_back(id);
      insert_left_of(sp.seq2, id, fbs[host].fb_id);
    } else {
      int k = sp.seq1.back();
      sp.seq1.push_back(id);
      if (mode == Alg1Mode::Literal) {
        insert_left_of(sp.seq2, id, k);
      } else {
        sp.seq2.push_back(id);
      }
    }
  }
  return sp;
}

namespace {

struct ChainEntry {
  std::size_t fb_index;
  std::int64_t res_bits = 0;       // residual rows per host replica band
  int res_index = -1;              // index of the bound res FB, if any
};

std::int64_t min_intake_ny(std::int64_t p_prev, std::int64_t by_prev, std::int64_t by,
                           ThroughputIndex ti) {
  std::int64_t need = (ti == ThroughputIndex::Literal) ? p_prev * by_prev : p_prev * by;
  return ceil_div(need, by) * by;
}

}  // namespace

std::vector<FbShape> balance_sizes(const std::vector<FbRequirement>& fbs,
                                   const ArrayDims& array, ThroughputIndex ti) {
  if (fbs.empty()) return {};

  // Pipeline chain: every FB except res blocks, which are bound to hosts.
  std::vector<ChainEntry> chain;
  std::vector<int> bound_to(fbs.size(), -1);
  for (std::size_t i = 0; i < fbs.size(); ++i) {
    if (fbs[i].accumulates_with) {
      int h = host_index(fbs, i);
      if (h < 0) throw InvariantError("res FB accumulates with unknown host");
      bound_to[i] = h;
      continue;
    }
    chain.push_back({i});
  }
  for (std::size_t i = 0; i < fbs.size(); ++i) {
    if (bound_to[i] < 0) continue;
    for (auto& ce : chain)
      if (int(ce.fb_index) == bound_to[i]) {
        ce.res_bits += fbs[i].bx;  // bx of a res block is its bit-plane rows
        ce.res_index = int(i);
      }
  }

  const std::int64_t X = array.rows, Y = array.cols;
  std::size_t m = chain.size();

  // Feasibility at minimum sizes.
  std::int64_t min_rows = 0, min_cols = 0;
  for (const auto& ce : chain) {
    min_rows += fbs[ce.fb_index].bx + ce.res_bits;
    min_cols += fbs[ce.fb_index].by;
  }
  if (min_rows > X)
    throw InfeasibleError("row constraint: sum of minimum FB rows " + std::to_string(min_rows) +
                          " exceeds array rows " + std::to_string(X));
  if (min_cols > Y)
    throw InfeasibleError("column constraint: sum of minimum FB columns " + std::to_string(min_cols) +
                          " exceeds array columns " + std::to_string(Y));

  // Columns a minimal completion of FBs after position t would need, given
  // the running parallelism p of FB t.
  auto completion_cols = [&](std::size_t t, std::int64_t p, std::int64_t by_t) {
    std::int64_t total = 0;
    std::int64_t p_prev = p, by_prev = by_t;
    for (std::size_t u = t + 1; u < m; ++u) {
      std::int64_t by_u = fbs[chain[u].fb_index].by;
      std::int64_t ny_u = min_intake_ny(p_prev, by_prev, by_u, ti);
      total += ny_u;
      p_prev = ny_u / by_u;  // minimal rows: one replica band
      by_prev = by_u;
    }
    return total;
  };

  std::vector<FbShape> shapes(fbs.size());
  std::int64_t rows_used = 0, cols_used = 0;
  std::int64_t p_prev = 1, by_prev = 0;

  for (std::size_t t = 0; t < m; ++t) {
    const FbRequirement& fb = fbs[chain[t].fb_index];
    std::int64_t rows_rest = 0;
    for (std::size_t u = t + 1; u < m; ++u)
      rows_rest += fbs[chain[u].fb_index].bx + chain[u].res_bits;

    std::int64_t row_unit = fb.bx + chain[t].res_bits;
    std::int64_t v_max = (X - rows_used - rows_rest) / row_unit;
    if (v_max < 1)
      throw InfeasibleError("row constraint: FB " + std::to_string(fb.fb_id) +
                            " cannot fit even one replica band");

    std::int64_t ny = (t == 0) ? fb.by : min_intake_ny(p_prev, by_prev, fb.by, ti);
    std::int64_t intake = ny / fb.by;

    std::int64_t v = 0;
    if (t + 1 == m) {
      // Terminal FB: rows first, then all remaining columns.
      v = v_max;
      std::int64_t a_max = (Y - cols_used) / fb.by;
      if (a_max < intake)
        throw InfeasibleError("throughput constraint: FB " + std::to_string(fb.fb_id) +
                              " needs intake " + std::to_string(intake) +
                              " ops but only " + std::to_string(a_max) + " fit");
      ny = a_max * fb.by;
    } else {
      for (std::int64_t cand = v_max; cand >= 1; --cand) {
        std::int64_t p_here = cand * (ny / fb.by);
        if (cols_used + ny + completion_cols(t, p_here, fb.by) <= Y) {
          v = cand;
          break;
        }
      }
      if (v == 0)
        throw InfeasibleError("throughput constraint: FB " + std::to_string(fb.fb_id) +
                              " intake of " + std::to_string(ny) +
                              " columns leaves no feasible successor sizing");
    }

    FbShape s{fb.fb_id, v * fb.bx, ny};
    shapes[chain[t].fb_index] = s;
    if (chain[t].res_index >= 0) {
      const FbRequirement& res = fbs[chain[t].res_index];
      shapes[chain[t].res_index] = FbShape{res.fb_id, v * res.bx, ny};
    }
    rows_used += v * row_unit;
    cols_used += ny;
    p_prev = v * (ny / fb.by);
    by_prev = fb.by;
  }

  return shapes;
}

std::vector<Placement> realize_placement(const SequencePair& sp,
                                         const std::vector<FbShape>& shapes,
                                         const ArrayDims& array) {
  const std::size_t n = sp.seq1.size();
  if (sp.seq2.size() != n) throw InvariantError("sequence pair length mismatch");

  std::map<int, std::size_t> pos1, pos2;
  for (std::size_t i = 0; i < n; ++i) pos1[sp.seq1[i]] = i;
  for (std::size_t i = 0; i < n; ++i) pos2[sp.seq2[i]] = i;

  std::map<int, const FbShape*> shape_of;
  for (const auto& s : shapes) shape_of[s.fb_id] = &s;
  for (int id : sp.seq1) {
    if (!pos2.count(id)) throw InvariantError("id in seq1 missing from seq2");
    if (!shape_of.count(id)) throw InvariantError("no shape for fb " + std::to_string(id));
  }

  // Longest-path packing. a left of b: both orders agree. a below b: a is
  // later in seq1, earlier in seq2.
  std::vector<Placement> out;
  out.reserve(n);
  std::map<int, std::int64_t> col, row;
  // Columns accumulate along seq1 order; rows along reversed seq1 order.
  for (int id : sp.seq1) {
    std::int64_t c = 0;
    for (int other : sp.seq1) {
      if (other == id) break;
      if (pos2[other] < pos2[id]) c = std::max(c, col[other] + shape_of[other]->ny);
    }
    col[id] = c;
  }
  // Rows: b below a when pos1(b) > pos1(a) and pos2(b) < pos2(a); process
  // ids in reverse seq2 order so constraints resolve top-down.
  std::vector<int> by_seq2(sp.seq2.rbegin(), sp.seq2.rend());
  for (int id : by_seq2) {
    std::int64_t r = 0;
    for (int other : by_seq2) {
      if (other == id) break;
      // other has larger pos2; id below other needs pos1(id) > pos1(other).
      if (pos1[id] > pos1[other]) r = std::max(r, row[other] + shape_of[other]->nx);
    }
    row[id] = r;
  }

  std::int64_t max_r = 0, max_c = 0;
  for (int id : sp.seq1) {
    Placement p{id, row[id], col[id], shape_of[id]->nx, shape_of[id]->ny};
    max_r = std::max(max_r, p.row + p.nx);
    max_c = std::max(max_c, p.col + p.ny);
    out.push_back(p);
  }
  if (max_r > array.rows || max_c > array.cols)
    throw InfeasibleError("placement overflow: packed extent " + std::to_string(max_r) + "x" +
                          std::to_string(max_c) + " exceeds array " + std::to_string(array.rows) +
                          "x" + std::to_string(array.cols));
  return out;
}

std::string check_balance(const std::vector<FbRequirement>& fbs,
                          const std::vector<FbShape>& shapes, const ArrayDims& array,
                          ThroughputIndex ti) {
  if (fbs.size() != shapes.size()) return "shape count mismatch";
  std::int64_t sum_rows = 0, sum_cols = 0;
  for (std::size_t i = 0; i < fbs.size(); ++i) {
    if (shapes[i].nx < fbs[i].bx || shapes[i].nx % fbs[i].bx != 0)
      return "fb " + std::to_string(fbs[i].fb_id) + ": nx not a positive multiple of bx";
    if (shapes[i].ny < fbs[i].by || shapes[i].ny % fbs[i].by != 0)
      return "fb " + std::to_string(fbs[i].fb_id) + ": ny not a positive multiple of by";
    sum_rows += shapes[i].nx;
    if (!fbs[i].accumulates_with) sum_cols += shapes[i].ny;  // res shares host bitlines
  }
  if (sum_rows > array.rows) return "sum of nx exceeds array rows";
  if (sum_cols > array.cols) return "sum of ny exceeds array columns";

  const FbRequirement* prev = nullptr;
  const FbShape* prev_s = nullptr;
  for (std::size_t i = 0; i < fbs.size(); ++i) {
    if (fbs[i].accumulates_with) continue;
    if (prev) {
      std::int64_t p = (prev_s->nx / prev->bx) * (prev_s->ny / prev->by);
      std::int64_t denom = (ti == ThroughputIndex::Literal) ? prev->by : fbs[i].by;
      if (p > shapes[i].ny / denom)
        return "fb " + std::to_string(fbs[i].fb_id) + ": throughput bound violated";
    }
    prev = &fbs[i];
    prev_s = &shapes[i];
  }
  return {};
}

}  // namespace hurry
