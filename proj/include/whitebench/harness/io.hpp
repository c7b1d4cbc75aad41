#pragma once
// On-disk data: the wbds matrix format with its WBLB label companion, and
// CSV with one sample per row.
//
// wbds:  "WBDS", u16 version = 1, u32 d, u32 n, d*n f64, column-major.
// wblb:  "WBLB", u32 k, u32 n, k*n f64, column-major.
// All integers and floats little-endian.

#include <optional>
#include <string>

#include "whitebench/data_model.hpp"

namespace wb::io {

enum class Format { csv, wbds };

void write_wbds(const Matrix& m, const std::string& path);
Matrix read_wbds(const std::string& path);
void write_labels(const Matrix& targets, const std::string& path);
Matrix read_labels(const std::string& path);

/// foo.wbds -> foo.wblb
std::string companion_labels_path(const std::string& wbds_path);

/// From the extension (.csv, .wbds). Anything else, including NumPy and
/// pickle exports, is rejected with an InputError.
Format detect_format(const std::string& path);

struct Ingested {
  Dataset x;
  std::optional<LabelSet> y;
};

/// CSV: header row of column names, one sample per row, all cells numeric.
/// An optional column named "label" holds integer classes in [0, classes);
/// classes = 0 takes the largest label + 1. wbds: labels come from the
/// companion file when present (one-hot when every column is).
Ingested ingest(const std::string& path, Format format, Split split, int classes = 0);
Ingested ingest(const std::string& path, Split split, int classes = 0);

/// CSV with a header x0..x{d-1} (and "label" when y is given) or wbds plus
/// companion, by extension.
void export_dataset(const Dataset& x, const LabelSet* y, const std::string& path);

/// Plain matrix output: CSV (rows as stored, no header) or wbds.
void write_matrix(const Matrix& m, const std::string& path);

}  // namespace wb::io
