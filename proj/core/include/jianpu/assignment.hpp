#pragma once

#include <stdexcept>
#include <vector>

namespace jianpu {

class InfeasibleAssignment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AssignmentResult {
  std::vector<int> row_to_col;
  double cost = 0.0;
};

/// Exact minimum-cost assignment (Hungarian method with potentials) of an
/// n x m cost matrix with n <= m: every row gets a distinct column.
/// +infinity marks a forbidden pair. Throws InfeasibleAssignment when no
/// finite assignment exists.
AssignmentResult solve_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace jianpu
