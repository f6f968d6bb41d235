#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "secl/matrix.hpp"
#include "secl/rng.hpp"

namespace secl {

/// Raised for malformed input files, schema violations, and other problems
/// with user-supplied data (as opposed to programming errors).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

enum class FeatureType { numeric, categorical };

struct Feature {
    std::string name;
    FeatureType type = FeatureType::numeric;
    std::vector<std::string> values;  // categorical value set, in index order

    int value_index(const std::string& v) const {
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] == v) return static_cast<int>(i);
        return -1;
    }
};

/// Plain-text feature descriptor. One line per feature:
///     <name> numeric
///     <name> categorical <v1> <v2> ...
/// plus a label line:
///     label <name> positive=<value> [negative=<value>]
/// The positive class defaults to the more frequent label when omitted.
/// Categorical values are declared explicitly so integer-coded categories are
/// never misread as numbers.
struct Schema {
    std::vector<Feature> features;
    std::string label_name;
    std::optional<std::string> positive_value;
    std::optional<std::string> negative_value;

    static Schema parse(std::istream& in);
    static Schema load(const std::filesystem::path& path);

    int feature_index(const std::string& name) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i].name == name) return static_cast<int>(i);
        return -1;
    }

    /// Stable hash over feature names, kinds, value sets, label name and
    /// positive value. Persisted in model files to fail fast on mismatched
    /// prediction inputs.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto add = [&h](const std::string& s) {
            h = fnv1a(s.data(), s.size(), h);
            h = fnv1a("\x1f", 1, h);
        };
        for (const auto& f : features) {
            add(f.name);
            add(f.type == FeatureType::numeric ? "numeric" : "categorical");
            for (const auto& v : f.values) add(v);
        }
        add(label_name);
        if (positive_value) add(*positive_value);
        return h;
    }
};

enum class ClassLabel : std::uint8_t { negative = 0, positive = 1 };

inline double label_to01(ClassLabel c) { return c == ClassLabel::positive ? 1.0 : 0.0; }

/// Immutable tabular sample set. Cells are stored as doubles; categorical
/// cells hold the (exactly representable) index into the feature's value set.
/// By the paper-wide convention the positive class is the majority class.
struct Dataset {
    Schema schema;
    std::vector<double> cells;        // row-major, n x d
    std::vector<ClassLabel> labels;   // empty for unlabeled prediction inputs
    std::array<std::string, 2> label_names{"negative", "positive"};

    std::size_t n = 0;

    std::size_t d() const { return schema.features.size(); }
    double value(std::size_t row, std::size_t col) const { return cells[row * d() + col]; }
    int category(std::size_t row, std::size_t col) const {
        return static_cast<int>(value(row, col));
    }
    const std::string& label_name(ClassLabel c) const {
        return label_names[static_cast<std::size_t>(c)];
    }

    std::size_t count(ClassLabel c) const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), c));
    }
};

struct SplitRatios {
    double train = 0.50;
    double validation = 0.25;
    double test = 0.25;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// ---------------------------------------------------------------------------
// Schema parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace detail

inline Schema Schema::parse(std::istream& in) {
    Schema schema;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto toks = detail::split_ws(line);
        if (toks[0] == "label") {
            if (toks.size() < 2)
                throw DataError("schema line " + std::to_string(lineno) + ": label needs a name");
            if (!schema.label_name.empty())
                throw DataError("schema declares more than one label line");
            schema.label_name = toks[1];
            for (std::size_t i = 2; i < toks.size(); ++i) {
                if (toks[i].rfind("positive=", 0) == 0)
                    schema.positive_value = toks[i].substr(9);
                else if (toks[i].rfind("negative=", 0) == 0)
                    schema.negative_value = toks[i].substr(9);
                else
                    throw DataError("schema line " + std::to_string(lineno) +
                                    ": unknown label option '" + toks[i] + "'");
            }
            continue;
        }
        if (toks.size() < 2)
            throw DataError("schema line " + std::to_string(lineno) + ": expected '<name> <kind>'");
        Feature f;
        f.name = toks[0];
        if (toks[1] == "numeric") {
            if (toks.size() != 2)
                throw DataError("schema line " + std::to_string(lineno) +
                                ": numeric feature takes no value list");
            f.type = FeatureType::numeric;
        } else if (toks[1] == "categorical") {
            f.type = FeatureType::categorical;
            f.values.assign(toks.begin() + 2, toks.end());
            if (f.values.empty())
                throw DataError("schema line " + std::to_string(lineno) +
                                ": categorical feature needs at least one value");
            for (std::size_t i = 0; i < f.values.size(); ++i)
                for (std::size_t j = i + 1; j < f.values.size(); ++j)
                    if (f.values[i] == f.values[j])
                        throw DataError("schema line " + std::to_string(lineno) +
                                        ": duplicate categorical value '" + f.values[i] + "'");
        } else {
            throw DataError("schema line " + std::to_string(lineno) + ": unknown kind '" +
                            toks[1] + "'");
        }
        for (const auto& existing : schema.features)
            if (existing.name == f.name)
                throw DataError("schema declares feature '" + f.name + "' twice");
        schema.features.push_back(std::move(f));
    }
    if (schema.features.empty()) throw DataError("schema declares no features");
    if (schema.label_name.empty()) throw DataError("schema declares no label line");
    return schema;
}

inline Schema Schema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file: " + path.string());
    return parse(in);
}

// ---------------------------------------------------------------------------
// CSV loading
// ---------------------------------------------------------------------------

namespace detail {

inline double parse_numeric_cell(const std::string& cell, const std::string& feature,
                                 std::size_t lineno) {
    if (cell.empty())
        throw DataError("line " + std::to_string(lineno) + ": missing value in feature '" +
                        feature + "' (imputation is not supported)");
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + cell.size() || !std::isfinite(v))
        throw DataError("line " + std::to_string(lineno) + ": cannot parse numeric cell '" +
                        cell + "' in feature '" + feature + "'");
    return v;
}

struct CsvTable {
    std::vector<int> feature_to_column;  // per schema feature, column in the file
    int label_column = -1;               // -1 when the file has no label column
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::filesystem::path& path, const Schema& schema,
                         bool require_label) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty data file: " + path.string());
    const auto header = split_csv_line(line);

    CsvTable table;
    table.feature_to_column.assign(schema.features.size(), -1);
    for (std::size_t col = 0; col < header.size(); ++col) {
        if (header[col] == schema.label_name) {
            if (table.label_column >= 0)
                throw DataError("duplicate label column '" + schema.label_name + "'");
            table.label_column = static_cast<int>(col);
            continue;
        }
        const int fi = schema.feature_index(header[col]);
        if (fi < 0)
            throw DataError("header column '" + header[col] + "' is not declared in the schema");
        if (table.feature_to_column[fi] >= 0)
            throw DataError("duplicate feature column '" + header[col] + "'");
        table.feature_to_column[fi] = static_cast<int>(col);
    }
    for (std::size_t f = 0; f < schema.features.size(); ++f)
        if (table.feature_to_column[f] < 0)
            throw DataError("feature '" + schema.features[f].name + "' missing from the header");
    if (require_label && table.label_column < 0)
        throw DataError("label column '" + schema.label_name + "' missing from the header");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        table.rows.push_back(std::move(cells));
    }
    if (table.rows.empty()) throw DataError("data file has no rows: " + path.string());
    return table;
}

inline Dataset build_dataset(const CsvTable& table, const Schema& schema, bool with_labels) {
    Dataset ds;
    ds.schema = schema;
    ds.n = table.rows.size();
    ds.cells.resize(ds.n * schema.features.size());

    for (std::size_t r = 0; r < ds.n; ++r) {
        const auto& row = table.rows[r];
        const std::size_t lineno = r + 2;  // header is line 1
        for (std::size_t f = 0; f < schema.features.size(); ++f) {
            const auto& feat = schema.features[f];
            const std::string& cell = row[table.feature_to_column[f]];
            double v;
            if (feat.type == FeatureType::numeric) {
                v = parse_numeric_cell(cell, feat.name, lineno);
            } else {
                const int idx = feat.value_index(cell);
                if (idx < 0)
                    throw DataError("line " + std::to_string(lineno) + ": value '" + cell +
                                    "' of feature '" + feat.name +
                                    "' is not in the schema value set");
                v = static_cast<double>(idx);
            }
            ds.cells[r * schema.features.size() + f] = v;
        }
    }

    if (!with_labels) return ds;

    // Resolve label polarity: the declared positive value wins, otherwise the
    // more frequent label is positive (ties toward the lexicographically
    // smaller value, for determinism).
    std::map<std::string, std::size_t> counts;
    for (const auto& row : table.rows) ++counts[row[table.label_column]];
    if (counts.size() != 2)
        throw DataError("label column '" + schema.label_name + "' has " +
                        std::to_string(counts.size()) + " distinct values, expected exactly 2");

    std::string positive;
    if (schema.positive_value) {
        positive = *schema.positive_value;
        if (counts.find(positive) == counts.end())
            throw DataError("declared positive label '" + positive + "' does not occur in '" +
                            schema.label_name + "'");
    } else {
        auto it = counts.begin();
        auto jt = std::next(it);
        positive = (jt->second > it->second) ? jt->first : it->first;
    }
    std::string negative;
    for (const auto& [value, _] : counts)
        if (value != positive) negative = value;
    if (schema.negative_value && *schema.negative_value != negative)
        throw DataError("declared negative label '" + *schema.negative_value +
                        "' does not match the data (found '" + negative + "')");

    ds.label_names = {negative, positive};
    ds.labels.reserve(ds.n);
    for (const auto& row : table.rows)
        ds.labels.push_back(row[table.label_column] == positive ? ClassLabel::positive
                                                                : ClassLabel::negative);
    return ds;
}

}  // namespace detail

/// Loads a labeled CSV (header row required, label column required, exactly
/// two label values). Missing values are rejected.
inline Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
    return detail::build_dataset(detail::read_csv(path, schema, true), schema, true);
}

/// Loads a CSV for prediction: the label column may be absent. When present,
/// labels are populated exactly as in load_csv.
inline Dataset load_prediction_csv(const std::filesystem::path& path, const Schema& schema) {
    auto table = detail::read_csv(path, schema, false);
    return detail::build_dataset(table, schema, table.label_column >= 0);
}

// ---------------------------------------------------------------------------
// Imbalance statistic
// ---------------------------------------------------------------------------

/// Coefficient of variation of the two class counts against a balanced
/// expectation: sd = |n+ - n-|/2 around mean n/2, so CV = |n+ - n-| / n.
inline double imbalance_cv(std::size_t n_positive, std::size_t n_negative) {
    const double np = static_cast<double>(n_positive);
    const double nn = static_cast<double>(n_negative);
    if (np + nn == 0.0) throw std::invalid_argument("imbalance_cv: empty dataset");
    return std::abs(np - nn) / (np + nn);
}

inline double imbalance_cv(const Dataset& ds) {
    return imbalance_cv(ds.count(ClassLabel::positive), ds.count(ClassLabel::negative));
}

// ---------------------------------------------------------------------------
// Stratified splitting
// ---------------------------------------------------------------------------

/// Splits rows into train/validation/test, stratified by class. Within each
/// class, rows are shuffled by the seeded generator and partitioned with
/// floor rounding for train and validation; the remainder goes to test.
inline SplitIndices stratified_split(const Dataset& ds, const SplitRatios& ratios,
                                     std::uint64_t seed) {
    if (ratios.train <= 0.0 || ratios.validation < 0.0 || ratios.test < 0.0 ||
        ratios.train + ratios.validation + ratios.test > 1.0 + 1e-9)
        throw std::invalid_argument("stratified_split: invalid ratios");
    if (ds.labels.size() != ds.n)
        throw std::invalid_argument("stratified_split: dataset has no labels");

    SplitIndices out;
    SplitMix64 rng(seed);
    for (ClassLabel c : {ClassLabel::positive, ClassLabel::negative}) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < ds.n; ++i)
            if (ds.labels[i] == c) rows.push_back(i);
        if (rows.size() < 4)
            throw DataError("stratified_split: class '" + ds.label_name(c) + "' has only " +
                            std::to_string(rows.size()) + " samples (need at least 4)");
        shuffle(rows, rng);
        const auto n_train = static_cast<std::size_t>(
            std::floor(ratios.train * static_cast<double>(rows.size())));
        const auto n_val = static_cast<std::size_t>(
            std::floor(ratios.validation * static_cast<double>(rows.size())));
        out.train.insert(out.train.end(), rows.begin(), rows.begin() + n_train);
        out.validation.insert(out.validation.end(), rows.begin() + n_train,
                              rows.begin() + n_train + n_val);
        out.test.insert(out.test.end(), rows.begin() + n_train + n_val, rows.end());
    }
    for (const auto* part : {&out.train, &out.validation, &out.test})
        if (part->empty())
            throw DataError("stratified_split: a partition came out empty; dataset too small");
    return out;
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// Feature scaling state fit on training rows only. Numeric features are
/// z-scored (population sd, floored at 1e-12 so constant columns encode to
/// zero); categorical features expand to one-hot blocks covering the full
/// schema value set. Encoded layout: all numeric columns in feature order,
/// then all one-hot blocks in feature order, then the optional extra column.
struct EncoderState {
    struct PerFeature {
        std::size_t feature = 0;
        FeatureType type = FeatureType::numeric;
        double mean = 0.0;
        double sd = 1.0;
        std::size_t value_count = 0;
    };
    std::vector<PerFeature> features;  // dataset feature order, selected subset
    std::size_t width = 0;             // encoded width without the extra column

    static constexpr double kSdFloor = 1e-12;
};

inline EncoderState fit_encoder(const Dataset& ds, const std::vector<std::size_t>& train_rows,
                                const std::vector<std::size_t>& feature_subset = {}) {
    if (train_rows.empty()) throw std::invalid_argument("fit_encoder: empty training set");

    std::vector<std::size_t> selected = feature_subset;
    if (selected.empty()) {
        selected.resize(ds.d());
        for (std::size_t i = 0; i < selected.size(); ++i) selected[i] = i;
    } else {
        std::sort(selected.begin(), selected.end());
    }

    EncoderState enc;
    std::size_t numeric_cols = 0;
    for (std::size_t f : selected) {
        if (f >= ds.d()) throw std::invalid_argument("fit_encoder: feature index out of range");
        EncoderState::PerFeature pf;
        pf.feature = f;
        pf.type = ds.schema.features[f].type;
        if (pf.type == FeatureType::numeric) {
            double sum = 0.0;
            for (std::size_t r : train_rows) sum += ds.value(r, f);
            pf.mean = sum / static_cast<double>(train_rows.size());
            double ss = 0.0;
            for (std::size_t r : train_rows) {
                const double dlt = ds.value(r, f) - pf.mean;
                ss += dlt * dlt;
            }
            pf.sd = std::max(std::sqrt(ss / static_cast<double>(train_rows.size())),
                             EncoderState::kSdFloor);
            ++numeric_cols;
        } else {
            pf.value_count = ds.schema.features[f].values.size();
        }
        enc.features.push_back(pf);
    }
    enc.width = numeric_cols;
    for (const auto& pf : enc.features)
        if (pf.type == FeatureType::categorical) enc.width += pf.value_count;
    return enc;
}

/// Encodes the given rows to a numeric matrix. extra_column, when present,
/// must have one 0/1 entry per row and is appended as the last column.
inline Matrix encode(const Dataset& ds, const std::vector<std::size_t>& rows,
                     const EncoderState& enc,
                     const std::vector<double>* extra_column = nullptr) {
    if (extra_column && extra_column->size() != rows.size())
        throw std::invalid_argument("encode: extra_column length does not match row count");

    const std::size_t width = enc.width + (extra_column ? 1 : 0);
    Matrix out(rows.size(), width);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        std::size_t col = 0;
        for (const auto& pf : enc.features)
            if (pf.type == FeatureType::numeric)
                out.at(i, col++) = (ds.value(r, pf.feature) - pf.mean) / pf.sd;
        for (const auto& pf : enc.features) {
            if (pf.type != FeatureType::categorical) continue;
            const int idx = ds.category(r, pf.feature);
            if (idx < 0 || static_cast<std::size_t>(idx) >= pf.value_count)
                throw std::invalid_argument("encode: categorical index out of range");
            out.at(i, col + static_cast<std::size_t>(idx)) = 1.0;
            col += pf.value_count;
        }
        if (extra_column) out.at(i, col) = (*extra_column)[i];
    }
    return out;
}

}  // namespace secl
