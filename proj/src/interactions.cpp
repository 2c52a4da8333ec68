#include "dmlsim/interactions.hpp"

#include <stdexcept>

namespace dmlsim {

ExpandedDesign expand_interactions(const Eigen::MatrixXd& X,
                                   const std::vector<std::string>& names,
                                   int degree) {
  if (degree != 1 && degree != 2)
    throw std::invalid_argument("expand_interactions: degree must be 1 or 2");
  if (static_cast<int>(names.size()) != X.cols())
    throw std::invalid_argument("expand_interactions: name count mismatch");
  if (!X.allFinite())
    throw std::invalid_argument("expand_interactions: non-finite values");

  ExpandedDesign out;
  if (degree == 1) {
    out.X = X;
    out.names = names;
    return out;
  }

  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> kept;
  auto try_add = [&](Eigen::VectorXd col, const std::string& name) {
    if ((col.array() - col(0)).abs().maxCoeff() == 0.0) {
      out.dropped.push_back(name + " (constant)");
      return;
    }
    for (size_t k = 0; k < cols.size(); ++k) {
      if (col == cols[k]) {
        out.dropped.push_back(name + " (duplicate of " + kept[k] + ")");
        return;
      }
    }
    cols.push_back(std::move(col));
    kept.push_back(name);
  };
  for (int j = 0; j < p; ++j) try_add(X.col(j), names[j]);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j)
      try_add(X.col(i).cwiseProduct(X.col(j)), names[i] + "*" + names[j]);

  out.X.resize(n, cols.size());
  for (size_t k = 0; k < cols.size(); ++k) out.X.col(k) = cols[k];
  out.names = std::move(kept);
  return out;
}

}  // namespace dmlsim
