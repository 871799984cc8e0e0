#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irsmd/oracles.hpp"

namespace irsmd {

/// One "[name]" block of a key = value file. Lines without '=' are kept as rows.
struct IniSection {
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> rows;

  const std::string* find(std::string_view key) const;
};

/// '#' starts a comment; keys before the first header land in a section named "".
std::vector<IniSection> parse_ini(std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

std::string trim(std::string_view s);
double parse_double(std::string_view s, std::string_view what);
long long parse_integer(std::string_view s, std::string_view what);
bool parse_bool(std::string_view s, std::string_view what);
/// Whitespace- or comma-separated numbers.
std::vector<double> parse_number_list(std::string_view s, std::string_view what);
/// Rows separated by ';'.
DenseMatrix parse_matrix(std::string_view s, std::string_view what);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Dense CSV: one row per line, comma-separated decimals.
DenseMatrix read_dense_csv(const std::filesystem::path& path);
/// Single-column CSV (a row with several entries is rejected).
Vector read_vector_csv(const std::filesystem::path& path);
void write_dense_csv(const std::filesystem::path& path, const DenseMatrix& m);

struct SparseDataset {
  SparseMatrix features;
  Vector labels;
};

/// "label index:value index:value ..." with 1-based indices. The feature
/// count is the largest index seen, or `features` when that is larger.
/// Labels must be -1 or +1 unless `binary_labels` is false (regression targets).
SparseDataset read_sparse_dataset(const std::filesystem::path& path, std::size_t features = 0,
                                  bool binary_labels = true);
SparseDataset parse_sparse_dataset(std::string_view text, std::size_t features = 0, bool binary_labels = true);
void write_sparse_dataset(const std::filesystem::path& path, const SparseDataset& data);

}  // namespace irsmd
