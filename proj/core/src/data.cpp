#include "mcboost/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace mcboost::data {

namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "na" || cell == "N/A";
}

bool parse_number(const std::string& cell, double& out) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end != '\0') {
    if (!std::isspace(static_cast<unsigned char>(*end))) return false;
    ++end;
  }
  return std::isfinite(out);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// lowercase, alphanumerics only: "Credit amount" and "credit-amount" compare equal
std::string normalize_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) {
    throw ContractViolation("csv line " + std::to_string(lineno) + ": unterminated quote");
  }
  fields.push_back(trim(cur));
  return fields;
}

}  // namespace

RawTable parse_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  RawTable table;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      table.col_names = split_csv_line(line, lineno);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line, lineno);
    if (fields.size() != table.col_names.size()) {
      throw ContractViolation(origin + ": ragged row at line " + std::to_string(lineno) +
                              " (" + std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(table.col_names.size()) + ")");
    }
    table.cells.push_back(std::move(fields));
  }
  if (table.col_names.empty()) {
    throw ContractViolation(origin + ": no header row");
  }
  table.kinds.assign(table.n_cols(), ColumnKind::Numeric);
  for (std::size_t j = 0; j < table.n_cols(); ++j) {
    for (const auto& row : table.cells) {
      double v;
      if (!is_missing(row[j]) && !parse_number(row[j], v)) {
        table.kinds[j] = ColumnKind::Categorical;
        break;
      }
    }
  }
  return table;
}

RawTable load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("load_csv: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

namespace {

std::size_t find_column(const RawTable& table, const std::vector<std::string>& candidates,
                        const std::string& what) {
  for (std::size_t j = 0; j < table.n_cols(); ++j) {
    const std::string norm = normalize_name(table.col_names[j]);
    for (const std::string& cand : candidates) {
      if (norm == cand) return j;
    }
  }
  throw ContractViolation("make_target: required column for " + what +
                          " not found (looked for: " + candidates.front() + ")");
}

RawTable drop_columns(const RawTable& table, const std::set<std::size_t>& dropped) {
  RawTable out;
  for (std::size_t j = 0; j < table.n_cols(); ++j) {
    if (dropped.count(j)) continue;
    out.col_names.push_back(table.col_names[j]);
    out.kinds.push_back(table.kinds[j]);
  }
  out.cells.reserve(table.n_rows());
  for (const auto& row : table.cells) {
    std::vector<std::string> r;
    r.reserve(out.n_cols());
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
      if (!dropped.count(j)) r.push_back(row[j]);
    }
    out.cells.push_back(std::move(r));
  }
  return out;
}

double numeric_cell(const RawTable& table, std::size_t i, std::size_t j,
                    const std::string& what) {
  double v;
  if (!parse_number(table.cells[i][j], v)) {
    throw ContractViolation("make_target: non-numeric " + what + " cell at data row " +
                            std::to_string(i + 1));
  }
  return v;
}

}  // namespace

TargetResult make_target(const RawTable& table, const std::string& dataset_id) {
  TargetResult out;
  if (dataset_id == "adult") {
    const std::size_t edu = find_column(table, {"educationnum"}, "education-num");
    const std::size_t hpw = find_column(table, {"hoursperweek"}, "hours-per-week");
    out.target.reserve(table.n_rows());
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
      if (is_missing(table.cells[i][edu]) || is_missing(table.cells[i][hpw])) {
        out.target.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        out.target.push_back(numeric_cell(table, i, edu, "education-num") +
                             numeric_cell(table, i, hpw, "hours-per-week"));
      }
    }
    out.features = drop_columns(table, {edu, hpw});
    out.rule = "education-num + hours-per-week";
    return out;
  }
  std::vector<std::string> candidates;
  std::string rule;
  if (dataset_id == "german") {
    candidates = {"creditamount"};
    rule = "CreditAmount";
  } else if (dataset_id == "communities") {
    candidates = {"violentcrimesperpop"};
    rule = "ViolentCrimesPerPop";
  } else if (dataset_id == "california") {
    candidates = {"medhouseval", "medianhousevalue"};
    rule = "median house value";
  } else if (dataset_id == "diabetes") {
    candidates = {"target", "progression", "y"};
    rule = "disease progression";
  } else if (dataset_id.rfind("col:", 0) == 0) {
    candidates = {normalize_name(dataset_id.substr(4))};
    rule = "column " + dataset_id.substr(4);
  } else {
    throw ContractViolation("make_target: unknown dataset id '" + dataset_id + "'");
  }
  const std::size_t col = find_column(table, candidates, rule);
  out.target.reserve(table.n_rows());
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    if (is_missing(table.cells[i][col])) {
      out.target.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      out.target.push_back(numeric_cell(table, i, col, rule));
    }
  }
  out.features = drop_columns(table, {col});
  out.rule = rule;
  return out;
}

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  // Fisher-Yates with explicit modulo draws; std::shuffle's draw sequence is
  // not pinned down by the standard.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::size_t train_size(std::size_t n, double train_frac) {
  require(train_frac > 0.0 && train_frac < 1.0, "split: train_frac must be in (0,1)");
  require(n >= 2, "split: need at least 2 rows");
  auto k = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

Dataset preprocess(const RawTable& features, const Vector& target, const PrepOptions& opts) {
  require(features.n_rows() == target.size(), "preprocess: target length mismatch");

  // Drop rows with missing cells or missing target.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < features.n_rows(); ++i) {
    bool ok = std::isfinite(target[i]);
    for (std::size_t j = 0; ok && j < features.n_cols(); ++j) {
      if (is_missing(features.cells[i][j])) ok = false;
    }
    if (ok) keep.push_back(i);
  }
  const std::size_t dropped = features.n_rows() - keep.size();
  const std::size_t n = keep.size();
  require(n >= 2, "preprocess: fewer than 2 complete rows");

  // Encoding layout: numeric columns pass through, categoricals expand to one
  // indicator per category observed anywhere in the table (lexicographic).
  struct EncodedCol {
    std::size_t src;
    bool categorical;
    std::string category;  // categorical only
    std::string name;
  };
  std::vector<EncodedCol> layout;
  for (std::size_t j = 0; j < features.n_cols(); ++j) {
    if (features.kinds[j] == ColumnKind::Numeric) {
      layout.push_back({j, false, "", features.col_names[j]});
    } else {
      std::set<std::string> cats;
      for (std::size_t i : keep) cats.insert(features.cells[i][j]);
      for (const std::string& c : cats) {
        layout.push_back({j, true, c, features.col_names[j] + "=" + c});
      }
    }
  }
  const std::size_t d = layout.size();
  require(d >= 1, "preprocess: no usable feature columns");

  Matrix x(n, d);
  Vector y(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = keep[r];
    y[r] = target[i];
    for (std::size_t c = 0; c < d; ++c) {
      const EncodedCol& col = layout[c];
      if (col.categorical) {
        x(r, c) = features.cells[i][col.src] == col.category ? 1.0 : 0.0;
      } else {
        double v;
        if (!parse_number(features.cells[i][col.src], v)) {
          throw ContractViolation("preprocess: non-numeric cell in numeric column '" +
                                  features.col_names[col.src] + "' at data row " +
                                  std::to_string(i + 1));
        }
        x(r, c) = v;
      }
    }
  }

  std::size_t zero_variance = 0;
  std::ostringstream prov;
  prov << "rows=" << n << " dropped_missing=" << dropped << " encoded_dim=" << d
       << " train_frac=" << opts.train_frac << " seed=" << opts.seed
       << " categories=lexicographic standardize=" << (opts.standardize ? "train-stats" : "off");
  if (opts.standardize) {
    const std::vector<std::size_t> perm = split_permutation(n, opts.seed);
    const std::size_t k = train_size(n, opts.train_frac);
    for (std::size_t c = 0; c < d; ++c) {
      if (layout[c].categorical) continue;  // indicators are left as 0/1
      double mean = 0.0;
      for (std::size_t r = 0; r < k; ++r) mean += x(perm[r], c);
      mean /= static_cast<double>(k);
      double var = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        const double dlt = x(perm[r], c) - mean;
        var += dlt * dlt;
      }
      var /= static_cast<double>(k);
      if (var <= 0.0) {
        ++zero_variance;
        for (std::size_t r = 0; r < n; ++r) x(r, c) = 0.0;
      } else {
        const double inv_sd = 1.0 / std::sqrt(var);
        for (std::size_t r = 0; r < n; ++r) x(r, c) = (x(r, c) - mean) * inv_sd;
      }
    }
    if (zero_variance > 0) {
      prov << " warning=zero-variance-columns:" << zero_variance;
    }
  }

  Dataset ds;
  ds.x = std::move(x);
  ds.y = std::move(y);
  for (const EncodedCol& col : layout) ds.feature_names.push_back(col.name);
  ds.provenance = prov.str();
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_frac,
                                  std::uint64_t seed) {
  const std::size_t n = dataset.y.size();
  const std::vector<std::size_t> perm = split_permutation(n, seed);
  const std::size_t k = train_size(n, train_frac);

  auto take = [&](std::size_t begin, std::size_t count) {
    Dataset out;
    out.feature_names = dataset.feature_names;
    Matrix x(count, dataset.x.cols());
    Vector y(count);
    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t i = perm[begin + r];
      y[r] = dataset.y[i];
      for (std::size_t c = 0; c < dataset.x.cols(); ++c) x(r, c) = dataset.x(i, c);
    }
    out.x = std::move(x);
    out.y = std::move(y);
    out.provenance = dataset.provenance + " | split seed=" + std::to_string(seed) +
                     " frac=" + std::to_string(train_frac) +
                     (begin == 0 ? " part=train" : " part=test");
    return out;
  };
  return {take(0, k), take(k, n - k)};
}

std::optional<std::size_t> expected_encoded_dim(const std::string& dataset_id) {
  if (dataset_id == "california") return 8;
  if (dataset_id == "diabetes") return 10;
  if (dataset_id == "adult") return 101;
  if (dataset_id == "german") return 48;
  if (dataset_id == "communities") return 122;
  return std::nullopt;
}

namespace {

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractViolation("save_dataset: cannot write '" + path + "'");
  out << content;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& basename) {
  std::ostringstream features;
  features.precision(17);
  for (std::size_t j = 0; j < dataset.feature_names.size(); ++j) {
    features << (j ? "," : "") << csv_escape(dataset.feature_names[j]);
  }
  features << "\n";
  for (std::size_t i = 0; i < dataset.x.rows(); ++i) {
    for (std::size_t j = 0; j < dataset.x.cols(); ++j) {
      features << (j ? "," : "") << dataset.x(i, j);
    }
    features << "\n";
  }
  std::ostringstream target;
  target.precision(17);
  target << "target\n";
  for (double v : dataset.y) target << v << "\n";

  std::ostringstream prov;
  prov << "{\n  \"provenance\": \"";
  for (char c : dataset.provenance) {
    if (c == '"' || c == '\\') prov << '\\';
    prov << c;
  }
  prov << "\",\n  \"rows\": " << dataset.y.size()
       << ",\n  \"encoded_dim\": " << dataset.x.cols() << "\n}\n";

  write_text_file(basename + ".features.csv", features.str());
  write_text_file(basename + ".target.csv", target.str());
  write_text_file(basename + ".provenance.json", prov.str());
}

Dataset make_synthetic(std::uint64_t seed, std::size_t n, std::size_t d) {
  require(n >= 4 && d >= 1, "make_synthetic: need n >= 4 and d >= 1");
  std::mt19937_64 rng(mix_seed(seed, 0x5eed));
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = uniform_in(rng, -1.0, 1.0);
  }
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = std::sin(3.0 * x(i, 0));
    if (d >= 2) v += x(i, 1) * x(i, 1);
    if (d >= 3) v += 0.5 * x(i, 2);
    if (d >= 4) v += 0.25 * x(i, 0) * x(i, 3);
    y[i] = v + 0.05 * normal01(rng);
  }
  Dataset ds;
  ds.x = std::move(x);
  ds.y = std::move(y);
  for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  ds.provenance = "synthetic seed=" + std::to_string(seed) + " n=" + std::to_string(n) +
                  " d=" + std::to_string(d);
  return ds;
}

ToyInstance toy_mean_instance() {
  ToyInstance toy;
  toy.x = Matrix(2, 1, std::vector<double>{0.0, 0.0});
  toy.y = {1.0, 3.0};
  toy.f0 = {0.0, 0.0};
  return toy;
}

}  // namespace mcboost::data
