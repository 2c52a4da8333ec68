#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dmlsim/scm.hpp"

namespace dmlsim {

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;

  int column(const std::string& name) const;  // -1 when absent
};

// Numeric CSV with a header row, '.' decimal separator. Parse errors carry
// 1-based line numbers.
CsvTable read_csv(const std::string& path);

// Doubles are written with 17 significant digits so a write/read round
// trip is bit exact.
void write_dataset_csv(const Dataset& data, const std::string& path);

Dataset dataset_from_table(const CsvTable& table, const std::string& outcome,
                           const std::string& treatment,
                           const std::vector<std::string>& controls);

}  // namespace dmlsim
