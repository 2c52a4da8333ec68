#include "dmlsim/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dmlsim {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail("'" + path + "': empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  CsvTable table;
  table.header = split_line(line);
  const int ncol = static_cast<int>(table.header.size());
  if (ncol == 0) fail("'" + path + "': empty header");

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (static_cast<int>(fields.size()) != ncol)
      fail("'" + path + "' line " + std::to_string(lineno) + ": expected " +
           std::to_string(ncol) + " fields, got " +
           std::to_string(fields.size()));
    std::vector<double> row(ncol);
    for (int c = 0; c < ncol; ++c) {
      const char* s = fields[c].c_str();
      char* end = nullptr;
      row[c] = std::strtod(s, &end);
      if (end == s || *end != '\0')
        fail("'" + path + "' line " + std::to_string(lineno) +
             ": non-numeric value '" + fields[c] + "' in column '" +
             table.header[c] + "'");
    }
    rows.push_back(std::move(row));
  }
  table.values.resize(rows.size(), ncol);
  for (size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < ncol; ++c) table.values(r, c) = rows[r][c];
  return table;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) fail("cannot write '" + path + "'");
  out << "y,d";
  for (const auto& name : data.control_names) out << "," << name;
  out << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (int i = 0; i < data.n(); ++i) {
    put(data.y(i));
    out << ",";
    put(data.d(i));
    for (int j = 0; j < data.p(); ++j) {
      out << ",";
      put(data.X(i, j));
    }
    out << "\n";
  }
}

Dataset dataset_from_table(const CsvTable& table, const std::string& outcome,
                           const std::string& treatment,
                           const std::vector<std::string>& controls) {
  int yc = table.column(outcome);
  if (yc < 0) fail("outcome column '" + outcome + "' not found");
  int dc = table.column(treatment);
  if (dc < 0) fail("treatment column '" + treatment + "' not found");
  if (outcome == treatment) fail("outcome and treatment must differ");
  Dataset data;
  data.y = table.values.col(yc);
  data.d = table.values.col(dc);
  data.X.resize(table.values.rows(), controls.size());
  for (size_t j = 0; j < controls.size(); ++j) {
    int c = table.column(controls[j]);
    if (c < 0) fail("control column '" + controls[j] + "' not found");
    if (c == yc || c == dc)
      fail("control column '" + controls[j] + "' is the outcome or treatment");
    data.X.col(j) = table.values.col(c);
  }
  data.control_names = controls;
  data.validate();
  return data;
}

}  // namespace dmlsim
