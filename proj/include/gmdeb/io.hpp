#pragma once

// Dataset ingestion and model persistence.

#include "gmdeb/emfit.hpp"
#include "gmdeb/transform.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace gmdeb {

struct Dataset {
  std::vector<std::string> columns;
  Eigen::MatrixXd rows;
  std::vector<BoundSpec> bounds;
  //! Rows discarded because of empty or NA cells.
  int dropped_rows = 0;
};

//! Comma-separated, header required, '.' decimal. Empty, NA and NaN cells
//! drop their row; any other non-numeric cell is a ParseError naming the
//! line and column.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);

//! Parses one `--bounds` flag: `name:none`, `name:lower=L` or
//! `name:interval=L,U`.
std::pair<std::string, BoundSpec> parse_bound_flag(const std::string& flag);

//! Resolves bound flags against the dataset's columns; columns without a
//! flag are unbounded.
std::vector<BoundSpec> resolve_bounds(const std::vector<std::string>& columns,
                                      const std::vector<std::string>& flags);

//! Moves values on or outside their support inward by eps * width
//! (interval) or eps (lower bound). Returns the number of values moved.
int apply_jitter(Eigen::MatrixXd& data, const std::vector<BoundSpec>& bounds, double eps);

inline constexpr int kModelSchemaVersion = 1;

struct ModelFile {
  std::vector<std::string> columns;
  MixtureFit fit;
  FitOptions options;
  std::uint64_t seed = 0;
};

std::string serialize_model(const ModelFile& model);
//! Rejects unknown schema versions and malformed content with ParseError.
ModelFile parse_model_file(const std::string& text);
ModelFile read_model_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace gmdeb
