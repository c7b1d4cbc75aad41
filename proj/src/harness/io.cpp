#include "whitebench/harness/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "whitebench/binary_io.hpp"
#include "whitebench/errors.hpp"
#include "whitebench/harness/csv.hpp"

namespace wb::io {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

void write_payload(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) bin::write_f64(out, m.data()[i]);
}

Matrix read_payload(std::istream& in, std::uint32_t rows, std::uint32_t cols, const std::string& path) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = bin::read_f64(in, path + " payload");
    if (!std::isfinite(v)) {
      throw ParseError(path + ": non-finite value at byte offset " +
                       std::to_string(static_cast<long long>(in.tellg()) - 8));
    }
    m.data()[i] = v;
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(path + ": trailing bytes at offset " + std::to_string(static_cast<long long>(in.tellg())));
  }
  return m;
}

void check_dims(const Matrix& m, const std::string& what) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() || m.cols() > std::numeric_limits<std::uint32_t>::max())
    throw InputError(what + " is too large for the u32 header");
}

std::string lower_extension(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

double parse_cell(const std::string& s, const std::string& path, long line, std::size_t col) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (b == e || ec != std::errc() || ptr != e) {
    throw ParseError(path + ": line " + std::to_string(line) + ", column " + std::to_string(col + 1) +
                     ": not a number: \"" + s + "\"");
  }
  if (!std::isfinite(v)) {
    throw ParseError(path + ": line " + std::to_string(line) + ", column " + std::to_string(col + 1) +
                     ": non-finite value");
  }
  return v;
}

Ingested ingest_csv(const std::string& path, Split split, int classes) {
  std::ifstream in = open_in(path);
  const std::vector<csv::Record> rows = csv::read(in, path);
  if (rows.empty()) throw ParseError(path + ": line 1: missing header row");
  const auto& header = rows.front().fields;
  std::ptrdiff_t label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "label") {
      if (label_col >= 0) throw ParseError(path + ": line 1: duplicate \"label\" column");
      label_col = static_cast<std::ptrdiff_t>(i);
    }
  }
  const Eigen::Index d = static_cast<Eigen::Index>(header.size()) - (label_col >= 0 ? 1 : 0);
  if (d < 1) throw ParseError(path + ": line 1: no feature columns");
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size()) - 1;
  if (n < 1) throw ParseError(path + ": no data rows");

  Matrix x(d, n);
  std::vector<int> labels;
  for (Eigen::Index j = 0; j < n; ++j) {
    const csv::Record& r = rows[static_cast<std::size_t>(j) + 1];
    if (r.fields.size() != header.size()) {
      throw ParseError(path + ": line " + std::to_string(r.line) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(r.fields.size()));
    }
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < r.fields.size(); ++c) {
      const double v = parse_cell(r.fields[c], path, r.line, c);
      if (static_cast<std::ptrdiff_t>(c) == label_col) {
        if (v != std::floor(v) || v < 0 || v > 1e6) {
          throw ParseError(path + ": line " + std::to_string(r.line) + ": label must be a non-negative integer");
        }
        labels.push_back(static_cast<int>(v));
      } else {
        x(row++, j) = v;
      }
    }
  }
  Ingested out{Dataset(std::move(x), split, std::filesystem::path(path).filename().string()), std::nullopt};
  if (label_col >= 0) {
    int k = classes;
    const int top = *std::max_element(labels.begin(), labels.end());
    if (k == 0) k = top + 1;
    if (top >= k) throw ParseError(path + ": label " + std::to_string(top) + " is outside [0, " + std::to_string(k) + ")");
    out.y = LabelSet::from_classes(labels, k);
  }
  return out;
}

bool is_one_hot(const Matrix& t) {
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    int ones = 0;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      if (t(i, j) == 1.0) {
        ++ones;
      } else if (t(i, j) != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

}  // namespace

void write_wbds(const Matrix& m, const std::string& path) {
  check_dims(m, "matrix");
  std::ofstream out = open_out(path);
  out.write("WBDS", 4);
  bin::write<std::uint16_t>(out, 1);
  bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  write_payload(out, m);
  if (!out) throw InputError("failed writing " + path);
}

Matrix read_wbds(const std::string& path) {
  std::ifstream in = open_in(path);
  bin::expect_magic(in, "WBDS", path);
  const auto version = bin::read<std::uint16_t>(in, path + " version");
  if (version != 1) throw ParseError(path + ": unsupported wbds version " + std::to_string(version) + " at byte offset 4");
  const auto d = bin::read<std::uint32_t>(in, path + " d");
  const auto n = bin::read<std::uint32_t>(in, path + " n");
  const auto size = std::filesystem::file_size(path);
  if (size != 14 + 8ULL * d * n) {
    throw ParseError(path + ": header says " + std::to_string(d) + "x" + std::to_string(n) + " but the file has " +
                     std::to_string(size) + " bytes");
  }
  return read_payload(in, d, n, path);
}

void write_labels(const Matrix& targets, const std::string& path) {
  check_dims(targets, "label matrix");
  std::ofstream out = open_out(path);
  out.write("WBLB", 4);
  bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(targets.rows()));
  bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(targets.cols()));
  write_payload(out, targets);
  if (!out) throw InputError("failed writing " + path);
}

Matrix read_labels(const std::string& path) {
  std::ifstream in = open_in(path);
  bin::expect_magic(in, "WBLB", path);
  const auto k = bin::read<std::uint32_t>(in, path + " k");
  const auto n = bin::read<std::uint32_t>(in, path + " n");
  const auto size = std::filesystem::file_size(path);
  if (size != 12 + 8ULL * k * n) {
    throw ParseError(path + ": header says " + std::to_string(k) + "x" + std::to_string(n) + " but the file has " +
                     std::to_string(size) + " bytes");
  }
  return read_payload(in, k, n, path);
}

std::string companion_labels_path(const std::string& wbds_path) {
  return std::filesystem::path(wbds_path).replace_extension(".wblb").string();
}

Format detect_format(const std::string& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".csv") return Format::csv;
  if (ext == ".wbds") return Format::wbds;
  throw InputError(path + ": unsupported data format \"" + ext +
                   "\" (only .csv and .wbds are read; convert NumPy/pickle feature exports first)");
}

Ingested ingest(const std::string& path, Format format, Split split, int classes) {
  if (!std::filesystem::exists(path)) throw InputError(path + ": no such file");
  if (format == Format::csv) return ingest_csv(path, split, classes);

  Ingested out{Dataset(read_wbds(path), split, std::filesystem::path(path).filename().string()), std::nullopt};
  const std::string lp = companion_labels_path(path);
  if (std::filesystem::exists(lp)) {
    Matrix t = read_labels(lp);
    if (t.cols() != out.x.sample_count()) {
      throw ParseError(lp + ": " + std::to_string(t.cols()) + " label columns for " +
                       std::to_string(out.x.sample_count()) + " samples");
    }
    const LabelEncoding enc = is_one_hot(t) ? LabelEncoding::one_hot : LabelEncoding::real_valued;
    out.y = LabelSet(std::move(t), enc);
  }
  return out;
}

Ingested ingest(const std::string& path, Split split, int classes) {
  return ingest(path, detect_format(path), split, classes);
}

void export_dataset(const Dataset& x, const LabelSet* y, const std::string& path) {
  if (y) check_paired(x, *y);
  if (detect_format(path) == Format::wbds) {
    write_wbds(x.values(), path);
    if (y) write_labels(y->targets(), companion_labels_path(path));
    return;
  }
  if (y && y->encoding() != LabelEncoding::one_hot) throw InputError("CSV export carries class labels only");
  std::ofstream out = open_out(path);
  std::vector<std::string> fields;
  for (Eigen::Index i = 0; i < x.feature_dim(); ++i) fields.push_back("x" + std::to_string(i));
  if (y) fields.emplace_back("label");
  csv::write_record(out, fields);
  const std::vector<int> cls = y ? y->classes() : std::vector<int>{};
  for (Eigen::Index j = 0; j < x.sample_count(); ++j) {
    fields.clear();
    for (Eigen::Index i = 0; i < x.feature_dim(); ++i) fields.push_back(csv::format_number(x.values()(i, j)));
    if (y) fields.push_back(std::to_string(cls[static_cast<std::size_t>(j)]));
    csv::write_record(out, fields);
  }
}

void write_matrix(const Matrix& m, const std::string& path) {
  if (detect_format(path) == Format::wbds) {
    write_wbds(m, path);
    return;
  }
  std::ofstream out = open_out(path);
  std::vector<std::string> fields;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    fields.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) fields.push_back(csv::format_number(m(i, j)));
    csv::write_record(out, fields);
  }
}

}  // namespace wb::io
