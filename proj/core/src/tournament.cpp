#include "hurry/tournament.hpp"

namespace hurry {

int TournamentLayout::survivors(int level) const {
  std::int64_t s = p;
  for (int l = 0; l < level; ++l) s = (s + 1) / 2;
  return int(s);
}

int TournamentLayout::matches(int level) const {
  return survivors(level - 1) / 2;
}

std::int64_t TournamentLayout::upper_cells() const {
  std::int64_t total = 0;
  for (int l = 1; l <= levels; ++l) total += std::int64_t(matches(l)) * b;
  return total;
}

TournamentLayout plan_tournament(int p, int b) {
  if (p < 1 || b < 1) throw InvariantError("plan_tournament: p and b must be >= 1");
  TournamentLayout t;
  t.p = p;
  t.b = b;
  t.leaf_columns = p * b;
  t.levels = 0;
  while ((1 << t.levels) < p) ++t.levels;
  return t;
}

}  // namespace hurry
