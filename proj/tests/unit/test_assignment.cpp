#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "jianpu/assignment.hpp"

using namespace jianpu;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double exhaustive(const std::vector<std::vector<double>>& c) {
  const std::size_t n = c.size(), m = c[0].size();
  std::vector<int> cols(m);
  std::iota(cols.begin(), cols.end(), 0);
  double best = kInf;
  // Every injective row -> column map appears as the prefix of some permutation.
  do {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += c[i][cols[i]];
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

}  // namespace

TEST(Hungarian, SmallHandCase) {
  const auto r = solve_assignment({{4, 1, 3}, {2, 0, 5}, {3, 2, 2}});
  EXPECT_DOUBLE_EQ(r.cost, 5.0);
  EXPECT_EQ(r.row_to_col, (std::vector<int>{1, 0, 2}));
}

TEST(Hungarian, MatchesExhaustiveOnRandomMatrices) {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    const int m = n + static_cast<int>(rng() % 3);
    std::vector<std::vector<double>> c(n, std::vector<double>(m));
    for (auto& row : c) {
      for (auto& v : row) v = trial % 3 == 0 ? std::floor(u(rng)) : u(rng);
    }
    const auto r = solve_assignment(c);
    EXPECT_NEAR(r.cost, exhaustive(c), 1e-9);
    std::vector<int> used = r.row_to_col;
    std::sort(used.begin(), used.end());
    EXPECT_EQ(std::adjacent_find(used.begin(), used.end()), used.end());
  }
}

TEST(Hungarian, ForbiddenPairsAndInfeasibility) {
  const auto r = solve_assignment({{kInf, 1}, {2, kInf}});
  EXPECT_DOUBLE_EQ(r.cost, 3.0);
  EXPECT_THROW(solve_assignment({{kInf, kInf}, {1, 2}}), InfeasibleAssignment);
  EXPECT_THROW(solve_assignment({{1}, {2}}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(solve_assignment({}).cost, 0.0);
}
