#pragma once

// Dataset representation shared by the whole pipeline: typed schema,
// train/validation/test partitioning, median imputation and reference-cell
// design-matrix encoding. Cohorts are immutable after construction; the
// mutating operations below return modified copies.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "riskscore/common.hpp"
#include "riskscore/csv.hpp"

namespace riskscore::tabular {

enum class VarKind { continuous, categorical };

enum class Partition { train, validation, test };

inline std::string partition_name(Partition p) {
  switch (p) {
    case Partition::train: return "train";
    case Partition::validation: return "validation";
    case Partition::test: return "test";
  }
  return "?";
}

inline Partition parse_partition(const std::string& s) {
  if (s == "train") return Partition::train;
  if (s == "validation") return Partition::validation;
  if (s == "test") return Partition::test;
  throw ConfigError("unknown partition label: " + s);
}

struct VariableSchema {
  std::string name;
  VarKind kind = VarKind::continuous;
  std::vector<std::string> categories;  // categorical only, declared order
  std::string unit;                     // optional free text
};

// Columnar storage. Continuous cells are doubles with NaN marking a missing
// value; categorical cells hold the category index as a double.
struct Cohort {
  std::vector<VariableSchema> schema;
  std::string outcome_name;
  std::vector<std::vector<double>> columns;  // [variable][row]
  std::vector<int> outcome;                  // 0/1
  std::vector<Partition> partition;          // defaults to train before split()

  std::size_t n_rows() const { return outcome.size(); }

  std::size_t var_index(const std::string& name) const {
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (schema[i].name == name) return i;
    }
    throw DataError("unknown variable: " + name);
  }

  std::vector<std::size_t> rows_in(Partition p) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < partition.size(); ++i) {
      if (partition[i] == p) idx.push_back(i);
    }
    return idx;
  }
};

struct DatasetSchema {
  std::vector<VariableSchema> predictors;
  std::string outcome_name;
  char delimiter = ',';
};

namespace detail {

inline void validate_schema(const DatasetSchema& s) {
  std::set<std::string> seen;
  for (const auto& v : s.predictors) {
    if (v.name.empty()) throw DataError("schema: variable with empty name");
    if (!seen.insert(v.name).second) {
      throw DataError("schema: duplicate variable name '" + v.name + "'");
    }
    if (v.kind == VarKind::categorical && v.categories.size() < 2) {
      throw DataError("schema: categorical variable '" + v.name +
                      "' needs at least 2 categories");
    }
    std::set<std::string> cats(v.categories.begin(), v.categories.end());
    if (cats.size() != v.categories.size()) {
      throw DataError("schema: duplicate category in variable '" + v.name + "'");
    }
  }
  if (s.outcome_name.empty()) throw DataError("schema: no outcome column declared");
  if (seen.count(s.outcome_name)) {
    throw DataError("schema: outcome '" + s.outcome_name +
                    "' also declared as predictor");
  }
}

}  // namespace detail

// Schema file: JSON object with a "variables" array; each entry carries
// name, kind (continuous|categorical), role (predictor|outcome), and for
// categorical predictors the ordered category list.
inline DatasetSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("schema parse error in " + path + ": " + e.what());
  }
  DatasetSchema out;
  if (j.contains("delimiter")) {
    std::string d = j.at("delimiter").get<std::string>();
    if (d.size() != 1) throw DataError("schema: delimiter must be one character");
    out.delimiter = d[0];
  }
  if (!j.contains("variables") || !j["variables"].is_array()) {
    throw DataError("schema: missing 'variables' array");
  }
  for (const auto& v : j["variables"]) {
    std::string name = v.at("name").get<std::string>();
    std::string role = v.value("role", std::string("predictor"));
    if (role == "outcome") {
      if (!out.outcome_name.empty()) throw DataError("schema: multiple outcome columns");
      out.outcome_name = name;
      continue;
    }
    if (role != "predictor") {
      throw DataError("schema: unknown role '" + role + "' for '" + name + "'");
    }
    VariableSchema vs;
    vs.name = name;
    std::string kind = v.at("kind").get<std::string>();
    if (kind == "continuous") {
      vs.kind = VarKind::continuous;
    } else if (kind == "categorical") {
      vs.kind = VarKind::categorical;
      for (const auto& c : v.at("categories")) {
        vs.categories.push_back(c.get<std::string>());
      }
    } else {
      throw DataError("schema: unknown kind '" + kind + "' for '" + name + "'");
    }
    vs.unit = v.value("unit", std::string());
    out.predictors.push_back(std::move(vs));
  }
  detail::validate_schema(out);
  return out;
}

inline void save_schema(const DatasetSchema& schema, const std::string& path) {
  nlohmann::json j;
  j["delimiter"] = std::string(1, schema.delimiter);
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : schema.predictors) {
    nlohmann::json e;
    e["name"] = v.name;
    e["kind"] = v.kind == VarKind::continuous ? "continuous" : "categorical";
    e["role"] = "predictor";
    if (v.kind == VarKind::categorical) e["categories"] = v.categories;
    if (!v.unit.empty()) e["unit"] = v.unit;
    vars.push_back(e);
  }
  nlohmann::json outc;
  outc["name"] = schema.outcome_name;
  outc["kind"] = "categorical";
  outc["role"] = "outcome";
  vars.push_back(outc);
  j["variables"] = vars;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write schema file: " + path);
  out << j.dump(2) << '\n';
}

// Loads a delimiter-separated data file against a schema file. Missing
// continuous cells are blank strings; categorical cells must match a
// declared category exactly.
inline Cohort load_cohort(const std::string& data_path, const std::string& schema_path) {
  DatasetSchema schema = load_schema(schema_path);
  csv::Table table = csv::read(data_path, schema.delimiter);

  std::map<std::string, std::size_t> header_pos;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (header_pos.count(table.header[j])) {
      throw DataError("duplicate column '" + table.header[j] + "' in " + data_path);
    }
    header_pos[table.header[j]] = j;
  }
  std::set<std::string> declared;
  for (const auto& v : schema.predictors) declared.insert(v.name);
  declared.insert(schema.outcome_name);
  for (const auto& name : table.header) {
    if (!declared.count(name)) {
      throw DataError("unknown column '" + name + "' in " + data_path +
                      " (not declared in schema)");
    }
  }
  for (const auto& v : schema.predictors) {
    if (!header_pos.count(v.name)) {
      throw DataError("column '" + v.name + "' declared in schema but missing from " +
                      data_path);
    }
  }
  if (!header_pos.count(schema.outcome_name)) {
    throw DataError("outcome column '" + schema.outcome_name + "' missing from " +
                    data_path);
  }

  Cohort cohort;
  cohort.schema = schema.predictors;
  cohort.outcome_name = schema.outcome_name;
  std::size_t n = table.rows.size();
  cohort.columns.assign(schema.predictors.size(), std::vector<double>(n));
  cohort.outcome.resize(n);
  cohort.partition.assign(n, Partition::train);

  std::size_t outcome_col = header_pos[schema.outcome_name];
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    if (row.size() != table.header.size()) {
      throw DataError("row " + std::to_string(i + 2) + " in " + data_path + " has " +
                      std::to_string(row.size()) + " fields, expected " +
                      std::to_string(table.header.size()));
    }
    const std::string& oc = row[outcome_col];
    if (oc == "0") {
      cohort.outcome[i] = 0;
    } else if (oc == "1") {
      cohort.outcome[i] = 1;
    } else {
      throw DataError("non-binary outcome value '" + oc + "' at row " +
                      std::to_string(i + 2) + ", column '" + schema.outcome_name + "'");
    }
    for (std::size_t v = 0; v < schema.predictors.size(); ++v) {
      const auto& vs = schema.predictors[v];
      const std::string& cell = row[header_pos[vs.name]];
      if (vs.kind == VarKind::continuous) {
        if (cell.empty()) {
          cohort.columns[v][i] = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        try {
          std::size_t used = 0;
          double value = std::stod(cell, &used);
          if (used != cell.size()) throw std::invalid_argument(cell);
          cohort.columns[v][i] = value;
        } catch (const std::exception&) {
          throw DataError("cannot parse numeric value '" + cell + "' at row " +
                          std::to_string(i + 2) + ", column '" + vs.name + "'");
        }
      } else {
        if (cell.empty()) {
          throw DataError("missing categorical value at row " + std::to_string(i + 2) +
                          ", column '" + vs.name + "' (categorical missing values are "
                          "not supported)");
        }
        auto it = std::find(vs.categories.begin(), vs.categories.end(), cell);
        if (it == vs.categories.end()) {
          throw DataError("category '" + cell + "' at row " + std::to_string(i + 2) +
                          ", column '" + vs.name + "' is not declared in the schema");
        }
        cohort.columns[v][i] = static_cast<double>(it - vs.categories.begin());
      }
    }
  }
  return cohort;
}

inline void save_cohort(const Cohort& cohort, const std::string& data_path,
                        char delimiter = ',') {
  std::vector<std::string> header;
  for (const auto& v : cohort.schema) header.push_back(v.name);
  header.push_back(cohort.outcome_name);
  std::vector<std::vector<std::string>> rows(cohort.n_rows());
  for (std::size_t i = 0; i < cohort.n_rows(); ++i) {
    auto& row = rows[i];
    row.reserve(header.size());
    for (std::size_t v = 0; v < cohort.schema.size(); ++v) {
      double x = cohort.columns[v][i];
      if (cohort.schema[v].kind == VarKind::continuous) {
        row.push_back(std::isnan(x) ? std::string() : format_double(x));
      } else {
        row.push_back(cohort.schema[v].categories[static_cast<std::size_t>(x)]);
      }
    }
    row.push_back(cohort.outcome[i] ? "1" : "0");
  }
  csv::write(data_path, header, rows, delimiter);
}

// Assigns partition labels by a seeded uniform shuffle. Sizes are
// floor(n * fraction) with remainder rows going to train.
inline Cohort split(const Cohort& cohort, double f_train, double f_val, double f_test,
                    std::uint64_t seed) {
  if (f_train <= 0.0 || f_val <= 0.0 || f_test <= 0.0) {
    throw ConfigError("split fractions must be positive");
  }
  if (std::abs(f_train + f_val + f_test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  std::size_t n = cohort.n_rows();
  std::size_t n_train = static_cast<std::size_t>(std::floor(n * f_train));
  std::size_t n_val = static_cast<std::size_t>(std::floor(n * f_val));
  std::size_t n_test = static_cast<std::size_t>(std::floor(n * f_test));
  n_train += n - (n_train + n_val + n_test);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto rng = engine_for(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);

  Cohort out = cohort;
  for (std::size_t k = 0; k < n; ++k) {
    Partition p = k < n_train                ? Partition::train
                  : k < n_train + n_val      ? Partition::validation
                                             : Partition::test;
    out.partition[order[k]] = p;
  }

  for (Partition p : {Partition::train, Partition::validation, Partition::test}) {
    std::size_t count = 0, positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.partition[i] == p) {
        ++count;
        positives += static_cast<std::size_t>(out.outcome[i]);
      }
    }
    if (count < 2) {
      throw DataError("partition '" + partition_name(p) + "' would receive " +
                      std::to_string(count) + " rows; need at least 2");
    }
    if (positives == 0 || positives == count) {
      throw DataError("partition '" + partition_name(p) +
                      "' would contain a single outcome class");
    }
  }
  return out;
}

// Replaces every missing continuous cell by the median of the non-missing
// values of that variable within the source partition. Idempotent.
inline Cohort impute_median(const Cohort& cohort, Partition source = Partition::train) {
  Cohort out = cohort;
  bool source_seen = false;
  for (auto p : cohort.partition) {
    if (p == source) { source_seen = true; break; }
  }
  if (!source_seen) {
    throw DataError("imputation source partition '" + partition_name(source) +
                    "' is empty");
  }
  for (std::size_t v = 0; v < cohort.schema.size(); ++v) {
    if (cohort.schema[v].kind != VarKind::continuous) continue;
    bool any_missing = false;
    for (double x : cohort.columns[v]) {
      if (std::isnan(x)) { any_missing = true; break; }
    }
    if (!any_missing) continue;
    std::vector<double> pool;
    for (std::size_t i = 0; i < cohort.n_rows(); ++i) {
      if (cohort.partition[i] == source && !std::isnan(cohort.columns[v][i])) {
        pool.push_back(cohort.columns[v][i]);
      }
    }
    if (pool.empty()) {
      throw DataError("variable '" + cohort.schema[v].name +
                      "' is entirely missing in the source partition '" +
                      partition_name(source) + "'");
    }
    double med = median_of(std::move(pool));
    for (std::size_t i = 0; i < cohort.n_rows(); ++i) {
      if (std::isnan(out.columns[v][i])) out.columns[v][i] = med;
    }
  }
  return out;
}

// One design column traced back to its variable; category < 0 marks a
// pass-through continuous column, otherwise it indexes the (non-reference)
// category the indicator encodes.
struct ColumnRef {
  std::size_t variable = 0;  // index into DesignMatrix::variables
  int category = -1;
};

struct DesignMatrix {
  Eigen::MatrixXd x;                       // rows x columns, no intercept column
  std::vector<ColumnRef> column_map;
  std::vector<std::string> column_names;
  std::vector<std::string> variables;      // encoded variable names, given order
  std::vector<std::vector<int>> columns_of;  // per variable: design column indices
  bool add_intercept = true;               // downstream fits include an intercept

  std::size_t n_variables() const { return variables.size(); }
};

struct EncodedData {
  DesignMatrix design;
  Eigen::VectorXd outcome;
  std::vector<std::size_t> row_index;  // cohort row per design row
};

// Reference-cell encoding over one partition: continuous columns pass
// through, a categorical variable with L categories yields L-1 indicators
// with the first declared category as reference. Row order is preserved.
inline EncodedData encode(const Cohort& cohort, Partition partition,
                          const std::vector<std::string>& variables) {
  std::vector<std::size_t> rows = cohort.rows_in(partition);
  std::vector<std::size_t> var_idx;
  var_idx.reserve(variables.size());
  for (const auto& name : variables) var_idx.push_back(cohort.var_index(name));

  EncodedData out;
  out.design.variables = variables;
  out.row_index = rows;

  std::size_t n_cols = 0;
  for (std::size_t v : var_idx) {
    n_cols += cohort.schema[v].kind == VarKind::continuous
                  ? 1
                  : cohort.schema[v].categories.size() - 1;
  }
  out.design.x.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(n_cols));
  out.outcome.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.outcome(static_cast<Eigen::Index>(r)) = cohort.outcome[rows[r]];
  }

  std::size_t col = 0;
  out.design.columns_of.resize(variables.size());
  for (std::size_t k = 0; k < var_idx.size(); ++k) {
    std::size_t v = var_idx[k];
    const auto& vs = cohort.schema[v];
    if (vs.kind == VarKind::continuous) {
      for (std::size_t r = 0; r < rows.size(); ++r) {
        double x = cohort.columns[v][rows[r]];
        if (std::isnan(x)) {
          throw DataError("missing value in variable '" + vs.name +
                          "' at cohort row " + std::to_string(rows[r]) +
                          "; run impute_median first");
        }
        out.design.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = x;
      }
      out.design.column_map.push_back({k, -1});
      out.design.column_names.push_back(vs.name);
      out.design.columns_of[k].push_back(static_cast<int>(col));
      ++col;
    } else {
      for (std::size_t c = 1; c < vs.categories.size(); ++c) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
          double x = cohort.columns[v][rows[r]];
          out.design.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) =
              static_cast<std::size_t>(x) == c ? 1.0 : 0.0;
        }
        out.design.column_map.push_back({k, static_cast<int>(c)});
        out.design.column_names.push_back(vs.name + "=" + vs.categories[c]);
        out.design.columns_of[k].push_back(static_cast<int>(col));
        ++col;
      }
    }
  }
  return out;
}

inline std::vector<std::string> all_variable_names(const Cohort& cohort) {
  std::vector<std::string> names;
  names.reserve(cohort.schema.size());
  for (const auto& v : cohort.schema) names.push_back(v.name);
  return names;
}

}  // namespace riskscore::tabular
