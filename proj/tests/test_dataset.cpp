#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "secl/dataset.hpp"
#include "support.hpp"

using namespace secl;
using testsupport::TempDir;

namespace {

const char* kToySchema =
    "height numeric\n"
    "color categorical red green blue\n"
    "label y positive=yes\n";

const char* kToyCsv =
    "height,color,y\n"
    "1.5,red,yes\n"
    "2.0,green,no\n"
    "2.5,blue,yes\n"
    "3.0,red,yes\n";

}  // namespace

TEST_CASE("schema parsing") {
    std::istringstream in(kToySchema);
    const auto schema = Schema::parse(in);
    REQUIRE(schema.features.size() == 2);
    CHECK(schema.features[0].name == "height");
    CHECK(schema.features[0].type == FeatureType::numeric);
    CHECK(schema.features[1].values == std::vector<std::string>{"red", "green", "blue"});
    CHECK(schema.label_name == "y");
    CHECK(schema.positive_value == "yes");

    SECTION("rejects duplicate categorical values") {
        std::istringstream bad("c categorical a a\nlabel y\n");
        CHECK_THROWS_AS(Schema::parse(bad), DataError);
    }
    SECTION("rejects missing label line") {
        std::istringstream bad("x numeric\n");
        CHECK_THROWS_AS(Schema::parse(bad), DataError);
    }
    SECTION("fingerprint tracks content") {
        std::istringstream a(kToySchema), b(kToySchema);
        CHECK(Schema::parse(a).fingerprint() == Schema::parse(b).fingerprint());
        std::istringstream c(
            "height numeric\ncolor categorical red green cyan\nlabel y positive=yes\n");
        CHECK(Schema::parse(c).fingerprint() != schema.fingerprint());
    }
}

TEST_CASE("load_csv basics") {
    TempDir tmp;
    const auto schema_path = tmp.write("toy.schema", kToySchema);
    const auto csv_path = tmp.write("toy.csv", kToyCsv);
    const auto schema = Schema::load(schema_path);
    const auto ds = load_csv(csv_path, schema);

    REQUIRE(ds.n == 4);
    REQUIRE(ds.d() == 2);
    CHECK(ds.value(0, 0) == 1.5);
    CHECK(ds.category(1, 1) == 1);  // green
    CHECK(ds.labels[0] == ClassLabel::positive);
    CHECK(ds.labels[1] == ClassLabel::negative);
    CHECK(ds.label_name(ClassLabel::positive) == "yes");
    CHECK(ds.count(ClassLabel::positive) == 3);

    SECTION("single row, single numeric feature") {
        const auto sp = tmp.write("one.schema", "x numeric\nlabel y\n");
        const auto cp = tmp.write("one.csv", "x,y\n1.0,a\n2.0,b\n");
        const auto one = load_csv(cp, Schema::load(sp));
        CHECK(one.n == 2);
    }
    SECTION("three label values rejected") {
        const auto cp = tmp.write("bad.csv",
                                  "height,color,y\n1,red,yes\n2,red,no\n3,red,maybe\n");
        CHECK_THROWS_AS(load_csv(cp, schema), DataError);
    }
    SECTION("missing file rejected") {
        CHECK_THROWS_AS(load_csv(tmp.path() / "absent.csv", schema), DataError);
    }
    SECTION("unparseable numeric cell rejected") {
        const auto cp = tmp.write("bad2.csv", "height,color,y\noops,red,yes\n2,red,no\n");
        CHECK_THROWS_AS(load_csv(cp, schema), DataError);
    }
    SECTION("missing value rejected") {
        const auto cp = tmp.write("bad3.csv", "height,color,y\n,red,yes\n2,red,no\n");
        CHECK_THROWS_AS(load_csv(cp, schema), DataError);
    }
    SECTION("undeclared categorical value rejected") {
        const auto cp = tmp.write("bad4.csv", "height,color,y\n1,mauve,yes\n2,red,no\n");
        CHECK_THROWS_AS(load_csv(cp, schema), DataError);
    }
    SECTION("majority wins when polarity is not declared") {
        const auto sp = tmp.write("maj.schema", "x numeric\nlabel y\n");
        const auto cp = tmp.write("maj.csv", "x,y\n1,a\n2,a\n3,b\n");
        const auto ds2 = load_csv(cp, Schema::load(sp));
        CHECK(ds2.label_name(ClassLabel::positive) == "a");
        CHECK(ds2.count(ClassLabel::positive) == 2);
    }
}

TEST_CASE("load_csv on pima") {
    const auto schema = Schema::load(testsupport::data_dir() / "pima.schema");
    const auto ds = load_csv(testsupport::data_dir() / "pima.csv", schema);
    CHECK(ds.n == 768);
    CHECK(ds.d() == 8);
    CHECK(ds.count(ClassLabel::positive) == 500);
    CHECK(ds.count(ClassLabel::negative) == 268);
}

TEST_CASE("imbalance_cv") {
    CHECK(imbalance_cv(201, 85) == Catch::Approx(0.41).margin(0.005));
    CHECK(imbalance_cv(4913, 560) == Catch::Approx(0.80).margin(0.005));
    CHECK(imbalance_cv(700, 300) == Catch::Approx(0.40).margin(0.005));
    CHECK(imbalance_cv(500, 268) == Catch::Approx(0.30).margin(0.005));
    CHECK(imbalance_cv(7, 7) == 0.0);

    SECTION("agrees with a direct two-point population CV") {
        SplitMix64 rng(99);
        for (int i = 0; i < 1000; ++i) {
            const auto a = rng.next_below(10000) + 1;
            const auto b = rng.next_below(10000) + 1;
            const double mean = (static_cast<double>(a) + static_cast<double>(b)) / 2.0;
            const double var = (std::pow(static_cast<double>(a) - mean, 2) +
                                std::pow(static_cast<double>(b) - mean, 2)) /
                               2.0;
            const double cv = std::sqrt(var) / mean;
            CHECK(imbalance_cv(a, b) == Catch::Approx(cv).margin(1e-12));
        }
    }
}

TEST_CASE("stratified_split") {
    const auto schema = Schema::load(testsupport::data_dir() / "pima.schema");
    const auto ds = load_csv(testsupport::data_dir() / "pima.csv", schema);

    SECTION("pima partition sizes follow floor/floor/remainder") {
        const auto split = stratified_split(ds, {}, 1);
        CHECK(split.train.size() == 250 + 134);
        CHECK(split.validation.size() == 125 + 67);
        CHECK(split.test.size() == 125 + 67);
        auto count_pos = [&](const std::vector<std::size_t>& part) {
            return std::count_if(part.begin(), part.end(), [&](std::size_t i) {
                return ds.labels[i] == ClassLabel::positive;
            });
        };
        CHECK(count_pos(split.train) == 250);
        CHECK(count_pos(split.validation) == 125);
        CHECK(count_pos(split.test) == 125);
    }

    SECTION("deterministic for a fixed seed") {
        const auto a = stratified_split(ds, {}, 1234);
        const auto b = stratified_split(ds, {}, 1234);
        CHECK(a.train == b.train);
        CHECK(a.validation == b.validation);
        CHECK(a.test == b.test);
        const auto c = stratified_split(ds, {}, 1235);
        CHECK(a.train != c.train);
    }

    SECTION("exact division on a tiny balanced set") {
        const auto tiny = testsupport::make_numeric_dataset(
            {{1}, {2}, {3}, {4}, {5}, {6}, {7}, {8}}, {1, 1, 1, 1, 0, 0, 0, 0});
        const auto split = stratified_split(tiny, {}, 7);
        CHECK(split.train.size() == 4);
        CHECK(split.validation.size() == 2);
        CHECK(split.test.size() == 2);
    }

    SECTION("class with fewer than 4 samples rejected") {
        const auto tiny = testsupport::make_numeric_dataset(
            {{1}, {2}, {3}, {4}, {5}, {6}}, {1, 1, 1, 1, 1, 0});
        CHECK_THROWS_AS(stratified_split(tiny, {}, 7), DataError);
    }

    SECTION("parts are disjoint and exhaustive for random datasets and seeds") {
        SplitMix64 rng(2024);
        for (int trial = 0; trial < 25; ++trial) {
            const std::size_t n = 8 + rng.next_below(200);
            std::vector<std::vector<double>> rows;
            std::vector<int> labels;
            for (std::size_t i = 0; i < n; ++i) {
                rows.push_back({rng.next_unit()});
                labels.push_back(i < 4 ? 1 : (i < 8 ? 0 : static_cast<int>(rng.next_below(2))));
            }
            const auto ds2 = testsupport::make_numeric_dataset(rows, labels);
            const auto split = stratified_split(ds2, {}, rng.next_u64());
            std::set<std::size_t> all;
            for (const auto* part : {&split.train, &split.validation, &split.test})
                for (auto i : *part) CHECK(all.insert(i).second);
            CHECK(all.size() == n);
        }
    }
}

TEST_CASE("encoder") {
    TempDir tmp;
    const auto schema = Schema::load(tmp.write("s", kToySchema));
    const auto ds = load_csv(tmp.write("d", kToyCsv), schema);
    const std::vector<std::size_t> all{0, 1, 2, 3};

    SECTION("z-score uses training statistics") {
        // train mean 10, sd 2 -> cell 14 encodes to 2.0
        const auto ds2 = testsupport::make_numeric_dataset({{8}, {12}, {14}}, {1, 0, 1});
        const auto enc = fit_encoder(ds2, {0, 1});
        const auto m = encode(ds2, {2}, enc);
        CHECK(m.at(0, 0) == Catch::Approx(2.0).margin(1e-12));
    }

    SECTION("one-hot layout covers the schema value set") {
        const auto enc = fit_encoder(ds, all);
        CHECK(enc.width == 1 + 3);
        const auto m = encode(ds, {1}, enc);  // green
        CHECK(m.at(0, 1) == 0.0);
        CHECK(m.at(0, 2) == 1.0);
        CHECK(m.at(0, 3) == 0.0);
    }

    SECTION("extra column appended") {
        const auto enc = fit_encoder(ds, all);
        const std::vector<double> extra{1, 0, 0, 1};
        const auto m = encode(ds, all, enc, &extra);
        CHECK(m.cols() == enc.width + 1);
        CHECK(m.at(0, enc.width) == 1.0);
        CHECK(m.at(1, enc.width) == 0.0);
    }

    SECTION("extra column length mismatch rejected") {
        const auto enc = fit_encoder(ds, all);
        const std::vector<double> extra{1, 0};
        CHECK_THROWS_AS(encode(ds, all, enc, &extra), std::invalid_argument);
    }

    SECTION("constant numeric features encode to zero") {
        const auto ds2 = testsupport::make_numeric_dataset({{5}, {5}, {5}}, {1, 0, 1});
        const auto enc = fit_encoder(ds2, {0, 1, 2});
        const auto m = encode(ds2, {0, 1, 2}, enc);
        CHECK(m.at(0, 0) == 0.0);
        CHECK(m.at(2, 0) == 0.0);
    }

    SECTION("training rows encode to mean 0 sd 1; one-hot decodes back") {
        SplitMix64 rng(5);
        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        for (int i = 0; i < 60; ++i) {
            rows.push_back({rng.next_in(-4, 9), rng.next_in(100, 200)});
            labels.push_back(static_cast<int>(rng.next_below(2)));
        }
        auto ds2 = testsupport::make_numeric_dataset(rows, labels);
        // add a categorical feature by hand
        ds2.schema.features.push_back({"c", FeatureType::categorical, {"u", "v", "w"}});
        std::vector<double> cells;
        for (int i = 0; i < 60; ++i) {
            cells.push_back(ds2.cells[i * 2]);
            cells.push_back(ds2.cells[i * 2 + 1]);
            cells.push_back(static_cast<double>(rng.next_below(3)));
        }
        ds2.cells = cells;

        std::vector<std::size_t> train;
        for (std::size_t i = 0; i < 60; ++i) train.push_back(i);
        const auto enc = fit_encoder(ds2, train);
        const auto m = encode(ds2, train, enc);

        for (std::size_t col = 0; col < 2; ++col) {
            double mean = 0;
            for (std::size_t r = 0; r < m.rows(); ++r) mean += m.at(r, col);
            mean /= static_cast<double>(m.rows());
            double var = 0;
            for (std::size_t r = 0; r < m.rows(); ++r)
                var += (m.at(r, col) - mean) * (m.at(r, col) - mean);
            var /= static_cast<double>(m.rows());
            CHECK(std::abs(mean) < 1e-9);
            CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
        }
        for (std::size_t r = 0; r < m.rows(); ++r) {
            // one-hot block decodes to the original category
            int arg = -1;
            int ones = 0;
            for (int v = 0; v < 3; ++v) {
                if (m.at(r, 2 + v) == 1.0) {
                    arg = v;
                    ++ones;
                }
            }
            CHECK(ones == 1);
            CHECK(arg == ds2.category(r, 2));
        }
    }
}
