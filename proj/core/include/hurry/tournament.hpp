#pragma once

#include <cstdint>
#include <vector>

#include "hurry/common.hpp"

namespace hurry {

// Layout of one tournament instance: p leaf elements of b bits reduced
// level by level; odd survivors advance in place (bye). Only match
// winners get cells above the leaf row, so the leaf row always holds at
// least as many cells as all upper levels combined.
struct TournamentLayout {
  int p = 0;       // leaf element count
  int b = 0;       // bits per element
  int levels = 0;  // ceil(log2 p); 0 for p == 1 (pass-through)
  int leaf_columns = 0;  // p * b

  // Survivors entering level l (l = 0 is the leaf row): ceil(p / 2^l).
  int survivors(int level) const;
  // Matches played at level l >= 1: floor(survivors(l-1) / 2).
  int matches(int level) const;
  // Winner cells allocated above the leaves, sum over levels of matches*b.
  std::int64_t upper_cells() const;
  // Total cells of one instance, leaves included.
  std::int64_t cells() const { return std::int64_t(leaf_columns) + upper_cells(); }
  // Row bands used by one instance: leaf row plus one per level.
  int rows() const { return levels + 1; }
};

TournamentLayout plan_tournament(int p, int b);

}  // namespace hurry
