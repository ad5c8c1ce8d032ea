#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "riskscore/tabular.hpp"
#include "test_util.hpp"

using namespace riskscore;
using namespace riskscore::tabular;
using testutil::TempDir;
using testutil::write_text;

namespace {

const char* kSchemaJson = R"({
  "variables": [
    {"name": "age", "kind": "continuous", "role": "predictor", "unit": "years"},
    {"name": "triage", "kind": "categorical", "categories": ["P1", "P2", "P3-P4"],
     "role": "predictor"},
    {"name": "y", "kind": "categorical", "role": "outcome"}
  ]
})";

}  // namespace

TEST_CASE("load_cohort parses a small file") {
  TempDir dir;
  write_text(dir.file("schema.json"), kSchemaJson);
  write_text(dir.file("data.csv"),
             "age,triage,y\n"
             "61,P1,1\n"
             "45,P2,0\n"
             "70,P3-P4,1\n"
             "33,P2,0\n"
             "58,P1,0\n");
  Cohort c = load_cohort(dir.file("data.csv"), dir.file("schema.json"));
  REQUIRE(c.n_rows() == 5);
  REQUIRE(c.schema.size() == 2);
  CHECK(c.columns[0][0] == 61.0);
  CHECK(c.columns[1][2] == 2.0);  // index of P3-P4
  CHECK(c.outcome == std::vector<int>{1, 0, 1, 0, 0});
}

TEST_CASE("load_cohort rejects an unseen category naming row and column") {
  TempDir dir;
  write_text(dir.file("schema.json"), kSchemaJson);
  write_text(dir.file("data.csv"),
             "age,triage,y\n"
             "61,P1,1\n"
             "45,P5,0\n");
  try {
    load_cohort(dir.file("data.csv"), dir.file("schema.json"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("P5") != std::string::npos);
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("triage") != std::string::npos);
  }
}

TEST_CASE("load_cohort flags blank continuous cells as missing") {
  TempDir dir;
  write_text(dir.file("schema.json"), kSchemaJson);
  write_text(dir.file("data.csv"),
             "age,triage,y\n"
             ",P1,1\n"
             "45,P2,0\n");
  Cohort c = load_cohort(dir.file("data.csv"), dir.file("schema.json"));
  CHECK(std::isnan(c.columns[0][0]));
  CHECK(c.columns[0][1] == 45.0);
}

TEST_CASE("load_cohort distinct diagnostics") {
  TempDir dir;
  write_text(dir.file("schema.json"), kSchemaJson);

  SECTION("unknown column") {
    write_text(dir.file("data.csv"), "age,triage,extra,y\n61,P1,0,1\n");
    CHECK_THROWS_WITH(load_cohort(dir.file("data.csv"), dir.file("schema.json")),
                      Catch::Matchers::ContainsSubstring("unknown column 'extra'"));
  }
  SECTION("non-binary outcome") {
    write_text(dir.file("data.csv"), "age,triage,y\n61,P1,2\n");
    CHECK_THROWS_WITH(load_cohort(dir.file("data.csv"), dir.file("schema.json")),
                      Catch::Matchers::ContainsSubstring("non-binary outcome"));
  }
  SECTION("empty file") {
    write_text(dir.file("data.csv"), "");
    CHECK_THROWS_WITH(load_cohort(dir.file("data.csv"), dir.file("schema.json")),
                      Catch::Matchers::ContainsSubstring("empty file"));
  }
  SECTION("missing categorical cell") {
    write_text(dir.file("data.csv"), "age,triage,y\n61,,1\n");
    CHECK_THROWS_AS(load_cohort(dir.file("data.csv"), dir.file("schema.json")),
                    DataError);
  }
}

TEST_CASE("split produces floor-sized partitions with remainder to train") {
  Cohort c = testutil::make_cohort(1000, 11);
  Cohort s = split(c, 0.7, 0.1, 0.2, 7);
  CHECK(s.rows_in(Partition::train).size() == 700);
  CHECK(s.rows_in(Partition::validation).size() == 100);
  CHECK(s.rows_in(Partition::test).size() == 200);

  // remainder: n=1003 -> floors 702/100/200, +1 to train
  Cohort c2 = testutil::make_cohort(1003, 12);
  Cohort s2 = split(c2, 0.7, 0.1, 0.2, 7);
  CHECK(s2.rows_in(Partition::train).size() == 703);
  CHECK(s2.rows_in(Partition::validation).size() == 100);
  CHECK(s2.rows_in(Partition::test).size() == 200);
}

TEST_CASE("split is deterministic and a true partition") {
  Cohort c = testutil::make_cohort(500, 3);
  Cohort a = split(c, 0.7, 0.1, 0.2, 42);
  Cohort b = split(c, 0.7, 0.1, 0.2, 42);
  CHECK(a.partition == b.partition);
  Cohort d = split(c, 0.7, 0.1, 0.2, 43);
  CHECK(a.partition != d.partition);  // overwhelmingly likely

  // every row gets exactly one label (vector semantics guarantee it); check sizes
  CHECK(a.rows_in(Partition::train).size() + a.rows_in(Partition::validation).size() +
            a.rows_in(Partition::test).size() ==
        c.n_rows());
}

TEST_CASE("split rejects tiny partitions and bad fractions") {
  Cohort c = testutil::make_cohort(10, 5);
  CHECK_THROWS_AS(split(c, 0.7, 0.1, 0.2, 1), DataError);
  Cohort big = testutil::make_cohort(100, 5);
  CHECK_THROWS_AS(split(big, 0.7, 0.1, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(split(big, 0.9, -0.1, 0.2, 1), ConfigError);
}

TEST_CASE("impute_median fills from the source partition") {
  Cohort c = testutil::make_cohort(8, 1);
  // variable x1: values 1,2,3 in train plus a missing cell
  c.columns[0] = {1.0, 2.0, 3.0, NAN, 5.0, 6.0, 7.0, 8.0};
  c.partition = {Partition::train, Partition::train, Partition::train,
                 Partition::validation, Partition::validation, Partition::validation,
                 Partition::test, Partition::test};
  Cohort filled = impute_median(c, Partition::train);
  CHECK(filled.columns[0][3] == 2.0);
}

TEST_CASE("impute_median identity when nothing is missing") {
  Cohort c = testutil::make_cohort(20, 2);
  Cohort filled = impute_median(c, Partition::train);
  CHECK(filled.columns == c.columns);
}

TEST_CASE("impute_median even-count median matches sort oracle") {
  Cohort c = testutil::make_cohort(5, 1);
  c.columns[0] = {10.0, 20.0, 30.0, 40.0, NAN};
  c.partition.assign(5, Partition::train);

  // sort-based oracle: mean of the two central order statistics
  std::vector<double> vals = {30.0, 10.0, 40.0, 20.0};
  std::sort(vals.begin(), vals.end());
  double expected = 0.5 * (vals[1] + vals[2]);
  REQUIRE(expected == 25.0);

  Cohort filled = impute_median(c, Partition::train);
  CHECK(filled.columns[0][4] == expected);
}

TEST_CASE("impute_median is idempotent") {
  Cohort c = testutil::make_cohort(50, 9);
  c.columns[0][3] = NAN;
  c.columns[1][7] = NAN;
  Cohort once = impute_median(c, Partition::train);
  Cohort twice = impute_median(once, Partition::train);
  CHECK(once.columns == twice.columns);
}

TEST_CASE("impute_median errors when the source has no values") {
  Cohort c = testutil::make_cohort(4, 1);
  c.columns[0] = {NAN, NAN, 1.0, 2.0};
  c.partition = {Partition::train, Partition::train, Partition::validation,
                 Partition::validation};
  CHECK_THROWS_WITH(impute_median(c, Partition::train),
                    Catch::Matchers::ContainsSubstring("entirely missing"));
}

TEST_CASE("encode expands categoricals into reference-cell indicators") {
  Cohort c = testutil::make_cohort(10, 4);
  EncodedData enc = encode(c, Partition::train, {"grp"});
  REQUIRE(enc.design.x.cols() == 2);  // 3 categories -> 2 indicators
  for (Eigen::Index i = 0; i < enc.design.x.rows(); ++i) {
    double raw = c.columns[2][enc.row_index[i]];
    if (raw == 0.0) {  // reference category: both indicators zero
      CHECK(enc.design.x(i, 0) == 0.0);
      CHECK(enc.design.x(i, 1) == 0.0);
    } else {
      CHECK(enc.design.x(i, static_cast<Eigen::Index>(raw) - 1) == 1.0);
    }
  }
}

TEST_CASE("encode hand-constructed mixed matrix") {
  Cohort c;
  c.schema = {{"a", VarKind::continuous, {}, ""},
              {"b", VarKind::continuous, {}, ""},
              {"flag", VarKind::categorical, {"no", "yes"}, ""}};
  c.outcome_name = "y";
  c.columns = {{1.5, 2.5, 3.5, 4.5}, {0.0, 1.0, 0.0, 1.0}, {0.0, 1.0, 1.0, 0.0}};
  c.outcome = {0, 1, 0, 1};
  c.partition.assign(4, Partition::train);

  EncodedData enc = encode(c, Partition::train, {"a", "b", "flag"});
  Eigen::MatrixXd expected(4, 3);
  expected << 1.5, 0.0, 0.0,
              2.5, 1.0, 1.0,
              3.5, 0.0, 1.0,
              4.5, 1.0, 0.0;
  REQUIRE(enc.design.x.rows() == 4);
  REQUIRE(enc.design.x.cols() == 3);
  CHECK((enc.design.x - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(enc.design.column_names ==
        std::vector<std::string>{"a", "b", "flag=yes"});
}

TEST_CASE("encode column count = continuous + sum(L-1)") {
  Cohort c = testutil::make_cohort(30, 6);
  EncodedData enc = encode(c, Partition::train, {"x1", "x2", "grp"});
  CHECK(enc.design.x.cols() == 2 + (3 - 1));
  CHECK(enc.design.column_map.size() == 4);
}

TEST_CASE("encode rejects missing cells and points at impute_median") {
  Cohort c = testutil::make_cohort(10, 4);
  c.columns[0][2] = NAN;
  CHECK_THROWS_WITH(encode(c, Partition::train, {"x1"}),
                    Catch::Matchers::ContainsSubstring("impute_median"));
}

TEST_CASE("schema round-trips through save_schema/load_schema") {
  TempDir dir;
  DatasetSchema schema;
  schema.predictors = {{"age", VarKind::continuous, {}, "years"},
                       {"grp", VarKind::categorical, {"a", "b"}, ""}};
  schema.outcome_name = "y";
  save_schema(schema, dir.file("schema.json"));
  DatasetSchema loaded = load_schema(dir.file("schema.json"));
  REQUIRE(loaded.predictors.size() == 2);
  CHECK(loaded.predictors[0].name == "age");
  CHECK(loaded.predictors[0].unit == "years");
  CHECK(loaded.predictors[1].categories == std::vector<std::string>{"a", "b"});
  CHECK(loaded.outcome_name == "y");
}

TEST_CASE("cohort round-trips through save_cohort/load_cohort") {
  TempDir dir;
  Cohort c = testutil::make_cohort(25, 8);
  c.columns[0][5] = NAN;
  DatasetSchema schema;
  schema.predictors = c.schema;
  schema.outcome_name = c.outcome_name;
  save_schema(schema, dir.file("schema.json"));
  save_cohort(c, dir.file("data.csv"));
  Cohort back = load_cohort(dir.file("data.csv"), dir.file("schema.json"));
  REQUIRE(back.n_rows() == c.n_rows());
  CHECK(std::isnan(back.columns[0][5]));
  CHECK(back.columns[1] == c.columns[1]);
  CHECK(back.outcome == c.outcome);
}
