#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dmlsim {

struct ExpandedDesign {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
  std::vector<std::string> dropped;  // notices: constant / duplicate columns
};

// Degree 1 returns the input unchanged. Degree 2 appends every pairwise
// product X_i * X_j for i <= j (named "a*b"), then drops columns that are
// constant or exact duplicates of an earlier column.
ExpandedDesign expand_interactions(const Eigen::MatrixXd& X,
                                   const std::vector<std::string>& names,
                                   int degree);

}  // namespace dmlsim
