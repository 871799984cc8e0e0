#include "irsmd/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "irsmd/error.hpp"

namespace irsmd {

const std::string* IniSection::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<IniSection> parse_ini(std::string_view text) {
  std::vector<IniSection> out(1);
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": malformed section header");
      out.push_back({trim(std::string_view(line).substr(1, line.size() - 2)), line_no, {}, {}});
      continue;
    }
    if (auto eq = line.find('='); eq != std::string::npos) {
      std::string key = trim(std::string_view(line).substr(0, eq));
      if (key.empty()) fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": empty key");
      if (out.back().find(key)) {
        fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
      }
      out.back().entries.emplace_back(std::move(key), trim(std::string_view(line).substr(eq + 1)));
    } else {
      out.back().rows.push_back(line);
    }
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_double(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  std::string_view v = t;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    fail(ErrorCode::parse, std::string(what) + ": not a number: '" + t + "'");
  }
  return out;
}

long long parse_integer(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  std::string_view v = t;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    // accept integral values written in exponent form, e.g. 1e6
    const double d = parse_double(t, what);
    if (d != std::floor(d) || std::abs(d) > 9e18) {
      fail(ErrorCode::parse, std::string(what) + ": not an integer: '" + t + "'");
    }
    return static_cast<long long>(d);
  }
  return out;
}

bool parse_bool(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  fail(ErrorCode::parse, std::string(what) + ": not a boolean: '" + t + "'");
}

std::vector<double> parse_number_list(std::string_view s, std::string_view what) {
  std::vector<double> out;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      out.push_back(parse_double(token, what));
      token.clear();
    }
  };
  for (char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      flush();
    } else {
      token.push_back(ch);
    }
  }
  flush();
  return out;
}

DenseMatrix parse_matrix(std::string_view s, std::string_view what) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(';', start);
    const auto piece = s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    auto row = parse_number_list(piece, what);
    if (!row.empty()) rows.push_back(std::move(row));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (rows.empty()) return DenseMatrix();
  DenseMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) fail(ErrorCode::parse, std::string(what) + ": ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

DenseMatrix read_dense_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      row.push_back(parse_double(cell, path.filename().string() + " line " + std::to_string(line_no)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::parse, path.string() + " line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(rows.front().size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::parse, path.string() + ": empty matrix");
  DenseMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

Vector read_vector_csv(const std::filesystem::path& path) {
  DenseMatrix m = read_dense_csv(path);
  if (m.cols() != 1) fail(ErrorCode::parse, path.string() + ": expected a single column");
  return m.col(0);
}

void write_dense_csv(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write file: " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

SparseDataset parse_sparse_dataset(std::string_view text, std::size_t features, bool binary_labels) {
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> labels;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;
    const std::string where = "sparse data line " + std::to_string(line_no);
    const double label = parse_double(tok, where);
    if (binary_labels && label != 1.0 && label != -1.0) {
      fail(ErrorCode::invalid_argument, where + ": invalid label '" + tok + "' (expected -1 or +1)");
    }
    const auto row = static_cast<int>(labels.size());
    labels.push_back(label);
    long long prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) fail(ErrorCode::parse, where + ": expected index:value, got '" + tok + "'");
      const long long idx = parse_integer(std::string_view(tok).substr(0, colon), where);
      if (idx < 1) fail(ErrorCode::parse, where + ": indices are 1-based");
      if (idx <= prev) fail(ErrorCode::parse, where + ": indices must be strictly increasing");
      prev = idx;
      const double val = parse_double(std::string_view(tok).substr(colon + 1), where);
      max_index = std::max(max_index, static_cast<std::size_t>(idx));
      if (val != 0.0) triplets.emplace_back(row, static_cast<int>(idx - 1), val);
    }
  }
  if (labels.empty()) fail(ErrorCode::parse, "sparse data: no examples");
  const std::size_t cols = std::max(max_index, features);
  if (cols == 0) fail(ErrorCode::parse, "sparse data: no features");
  SparseDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(cols));
  ds.features.setFromTriplets(triplets.begin(), triplets.end());
  ds.features.makeCompressed();
  ds.labels = Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return ds;
}

SparseDataset read_sparse_dataset(const std::filesystem::path& path, std::size_t features, bool binary_labels) {
  return parse_sparse_dataset(read_text_file(path), features, binary_labels);
}

void write_sparse_dataset(const std::filesystem::path& path, const SparseDataset& data) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write file: " + path.string());
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    out << format_double(data.labels[i]);
    for (SparseMatrix::InnerIterator it(data.features, i); it; ++it) {
      out << ' ' << (it.col() + 1) << ':' << format_double(it.value());
    }
    out << '\n';
  }
}

}  // namespace irsmd
