#pragma once

#include "mvgrl/eval.hpp"
#include "mvgrl/sparse.hpp"
#include "mvgrl/trainer.hpp"

#include <filesystem>
#include <string>

namespace mvgrl {

/// Dense CSV with a header row (e0,e1,...); values are written with full
/// round-trip precision.
void write_csv_matrix(const std::filesystem::path& file, const Matrix& m,
                      const std::string& column_prefix = "e");
Matrix read_csv_matrix_file(const std::filesystem::path& file);

/// Three-column COO text ("row col value" per line) with a leading
/// "# rows cols nnz" comment so dimensions survive a round trip.
void write_coo(const std::filesystem::path& file, const SparseMatrix& s);
SparseMatrix read_coo(const std::filesystem::path& file);

/// One row per epoch: epoch,loss,mi_estimate.
void write_loss_history(const std::filesystem::path& file, const std::vector<LossRow>& rows);

/// Integer labels, one per line, with a header.
void write_labels_csv(const std::filesystem::path& file, const std::vector<int>& labels);
std::vector<int> read_labels_csv(const std::filesystem::path& file);

std::string report_to_json(const EvalReport& report);
std::string cluster_to_json(const ClusterResult& result);
void write_text_file(const std::filesystem::path& file, const std::string& content);
void write_report_csv(const std::filesystem::path& file, const EvalReport& report);

}  // namespace mvgrl
