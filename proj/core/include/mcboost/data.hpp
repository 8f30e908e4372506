#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcboost/linalg.hpp"

namespace mcboost::data {

enum class ColumnKind { Numeric, Categorical };

struct RawTable {
  std::vector<std::string> col_names;
  std::vector<ColumnKind> kinds;
  // row-major cells, raw strings as read
  std::vector<std::vector<std::string>> cells;

  std::size_t n_rows() const { return cells.size(); }
  std::size_t n_cols() const { return col_names.size(); }
};

// Comma-separated, first row headers, UTF-8; double-quoted fields supported.
// A column is numeric when every non-missing cell parses as a number.
// Throws ContractViolation naming the row on ragged input.
RawTable load_csv(const std::string& path);
RawTable parse_csv(const std::string& text, const std::string& origin = "<string>");

struct TargetResult {
  Vector target;
  RawTable features;  // input table with the target column(s) removed
  std::string rule;   // human-readable description of the construction
};

// dataset_id selects the target construction:
//   adult        -> education-num + hours-per-week (both columns removed)
//   german       -> CreditAmount
//   communities  -> ViolentCrimesPerPop
//   california   -> MedHouseVal / median_house_value
//   diabetes     -> target / progression / y
//   col:<name>   -> verbatim column copy
// Column names are matched after lowercasing and stripping non-alphanumerics.
TargetResult make_target(const RawTable& table, const std::string& dataset_id);

struct Dataset {
  Matrix x;
  Vector y;
  std::vector<std::string> feature_names;
  std::string provenance;
};

struct PrepOptions {
  double train_frac = 0.8;
  std::uint64_t seed = 0;
  bool standardize = true;
};

// One-hot encodes categoricals (one column per category observed anywhere in
// the table, lexicographic order) and standardizes numeric columns to zero
// mean / unit variance using statistics of the seeded train portion only.
// Rows with missing cells ("", "?", "NA", "N/A") are dropped first; the drop
// count, encoding layout and split parameters are recorded in provenance.
Dataset preprocess(const RawTable& features, const Vector& target, const PrepOptions& opts);

// Seeded uniform permutation split; train size floor(frac*n) clamped to
// [1, n-1]. The permutation matches the one used by preprocess for the same
// seed, so the standardization statistics depend on the train rows only.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_frac,
                                  std::uint64_t seed);

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed);
std::size_t train_size(std::size_t n, double train_frac);

// Expected encoded dimension per dataset id, for the canonical raw files.
std::optional<std::size_t> expected_encoded_dim(const std::string& dataset_id);

// Writes <basename>.features.csv (header = feature names), <basename>.target.csv
// and <basename>.provenance.json.
void save_dataset(const Dataset& dataset, const std::string& basename);

// Smooth seeded regression instance for synthetic experiments.
Dataset make_synthetic(std::uint64_t seed, std::size_t n, std::size_t d);

// Two-point instance whose constant class projects residuals onto their mean.
struct ToyInstance {
  Matrix x;
  Vector y;
  Vector f0;
};
ToyInstance toy_mean_instance();

}  // namespace mcboost::data
