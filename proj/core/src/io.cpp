#include "mvgrl/io.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mvgrl {

namespace {

std::string format_real(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  check_run(static_cast<bool>(out), "cannot open for writing: " + file.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream in(file);
  check_run(static_cast<bool>(in), "cannot open: " + file.string());
  return in;
}

}  // namespace

void write_csv_matrix(const std::filesystem::path& file, const Matrix& m,
                      const std::string& column_prefix) {
  auto out = open_out(file);
  for (int c = 0; c < m.cols(); ++c) out << (c ? "," : "") << column_prefix << c;
  out << "\n";
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_real(m(r, c));
    out << "\n";
  }
  check_run(static_cast<bool>(out), "write failed: " + file.string());
}

Matrix read_csv_matrix_file(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::vector<std::vector<Real>> rows;
  std::string line;
  bool first = true;
  size_t width = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<Real> row;
    std::istringstream ss(line);
    std::string tok;
    bool numeric = true;
    while (std::getline(ss, tok, ',')) {
      try {
        size_t used = 0;
        row.push_back(std::stod(tok, &used));
        (void)used;
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (first) {
      first = false;
      if (!numeric) continue;  // header
    }
    check_run(numeric, "csv: non-numeric row in " + file.string());
    if (width == 0) width = row.size();
    check_run(row.size() == width, "csv: ragged row in " + file.string());
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), width);
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < width; ++c) m(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  }
  return m;
}

void write_coo(const std::filesystem::path& file, const SparseMatrix& s) {
  auto out = open_out(file);
  out << "# " << s.n_rows << " " << s.n_cols << " " << s.nnz() << "\n";
  for (int r = 0; r < s.n_rows; ++r) {
    for (int k = s.row_begin(r); k < s.row_end(r); ++k) {
      out << r << " " << s.col_indices[k] << " " << format_real(s.values[k]) << "\n";
    }
  }
  check_run(static_cast<bool>(out), "write failed: " + file.string());
}

SparseMatrix read_coo(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  int n_rows = -1, n_cols = -1;
  std::vector<SparseMatrix::Triplet> triplets;
  int max_row = -1, max_col = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      long nnz = 0;
      ss >> n_rows >> n_cols >> nnz;
      continue;
    }
    std::istringstream ss(line);
    int r = 0, c = 0;
    Real v = 0.0;
    check_run(static_cast<bool>(ss >> r >> c >> v), "coo: malformed line in " + file.string());
    triplets.emplace_back(r, c, v);
    max_row = std::max(max_row, r);
    max_col = std::max(max_col, c);
  }
  if (n_rows < 0) {
    n_rows = max_row + 1;
    n_cols = max_col + 1;
  }
  return SparseMatrix::from_triplets(n_rows, n_cols, std::move(triplets));
}

void write_loss_history(const std::filesystem::path& file, const std::vector<LossRow>& rows) {
  auto out = open_out(file);
  out << "epoch,loss,mi_estimate\n";
  for (const auto& row : rows) {
    out << row.epoch << "," << format_real(row.loss) << "," << format_real(row.mi_estimate)
        << "\n";
  }
  check_run(static_cast<bool>(out), "write failed: " + file.string());
}

void write_labels_csv(const std::filesystem::path& file, const std::vector<int>& labels) {
  auto out = open_out(file);
  out << "label\n";
  for (int l : labels) out << l << "\n";
  check_run(static_cast<bool>(out), "write failed: " + file.string());
}

std::vector<int> read_labels_csv(const std::filesystem::path& file) {
  const Matrix m = read_csv_matrix_file(file);
  check_run(m.cols() == 1, "labels csv must have exactly one column: " + file.string());
  std::vector<int> labels(m.rows());
  for (int i = 0; i < m.rows(); ++i) labels[i] = static_cast<int>(m(i, 0));
  return labels;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["protocol"] = to_string(report.protocol);
  j["mean"] = report.mean;
  j["std"] = report.std_dev;
  j["per_run"] = report.per_run;
  j["chosen_hyperparameter"] = report.chosen_hyperparameter;
  return j.dump(2) + "\n";
}

std::string cluster_to_json(const ClusterResult& result) {
  nlohmann::json j;
  j["protocol"] = "clustering";
  j["nmi"] = result.nmi;
  j["ari"] = result.ari;
  return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& file, const std::string& content) {
  auto out = open_out(file);
  out << content;
  check_run(static_cast<bool>(out), "write failed: " + file.string());
}

void write_report_csv(const std::filesystem::path& file, const EvalReport& report) {
  auto out = open_out(file);
  out << "protocol,mean,std,chosen_hyperparameter,runs\n";
  out << to_string(report.protocol) << "," << format_real(report.mean) << ","
      << format_real(report.std_dev) << "," << format_real(report.chosen_hyperparameter)
      << "," << report.per_run.size() << "\n";
  check_run(static_cast<bool>(out), "write failed: " + file.string());
}

}  // namespace mvgrl
