#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "secl/dataset.hpp"
#include "secl/ensemble.hpp"
#include "secl/metrics.hpp"
#include "secl/rbfn.hpp"
#include "secl/rng.hpp"
#include "secl/tree.hpp"

namespace secl {

/// A named, configured classifier for the benchmark runner: fit on the
/// split's train (and validation, where the method uses one), then return
/// predictions for the test rows.
struct BenchmarkClassifier {
    std::string name;
    std::function<std::vector<ClassLabel>(const Dataset&, const SplitIndices&, std::uint64_t)>
        fit_predict_test;
};

inline BenchmarkClassifier tree_classifier(std::string name, SplitCriterion criterion,
                                           double minsplit_frac = 0.1) {
    return {std::move(name),
            [criterion, minsplit_frac](const Dataset& ds, const SplitIndices& split,
                                       std::uint64_t) {
                const auto minsplit = std::max<std::size_t>(
                    2, static_cast<std::size_t>(std::ceil(
                           minsplit_frac * static_cast<double>(split.train.size()))));
                const auto tree = fit_tree(ds, split.train, criterion, minsplit);
                return predict_tree(tree, ds, split.test);
            }};
}

/// Standalone network over the full encoded feature set (no tree, no extra
/// column); the validation part drives hidden-unit selection.
inline BenchmarkClassifier rbfn_classifier(std::string name, RbfTrainConfig base = {}) {
    return {std::move(name),
            [base](const Dataset& ds, const SplitIndices& split, std::uint64_t seed) {
                const auto encoder = fit_encoder(ds, split.train);
                const Matrix x_train = encode(ds, split.train, encoder);
                const Matrix x_val = encode(ds, split.validation, encoder);
                const Matrix x_test = encode(ds, split.test, encoder);
                auto targets_of = [&ds](const std::vector<std::size_t>& rows) {
                    std::vector<double> y(rows.size());
                    for (std::size_t i = 0; i < rows.size(); ++i)
                        y[i] = label_to01(ds.labels[rows[i]]);
                    return y;
                };
                const auto y_train = targets_of(split.train);
                const auto y_val = targets_of(split.validation);
                RbfTrainConfig cfg = base;
                cfg.seed = seed;
                const auto net = train_rbfn(x_train, y_train, cfg, {{&x_val, &y_val}});
                return predict_rbfn(net, x_test);
            }};
}

inline BenchmarkClassifier superensemble_classifier(std::string name, PipelineConfig base = {}) {
    return {std::move(name),
            [base](const Dataset& ds, const SplitIndices& split, std::uint64_t seed) {
                PipelineConfig cfg = base;
                cfg.seed = seed;
                const auto model = fit_superensemble(ds, split.train, split.validation, cfg);
                return predict_superensemble(model, ds, split.test);
            }};
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct CellResult {
    std::vector<double> aucs;                 // one per repeat
    std::vector<ConfusionMatrix> matrices;    // one per repeat
    double mean = 0.0;
    double sd = 0.0;  // sample sd; 0 by convention for a single repeat
};

/// Rows are classifiers, columns are datasets; built per dataset by
/// run_benchmark and mergeable column-wise.
struct EvalReport {
    std::vector<std::string> classifiers;
    std::vector<std::string> datasets;
    std::vector<std::vector<CellResult>> cells;  // [classifier][dataset]
};

namespace detail {

inline std::pair<double, double> mean_and_sample_sd(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace detail

/// Repeats the split/fit/score protocol `repeats` times. The split of repeat
/// r depends only on (seed, r), and a classifier's fit seed only on
/// (seed, r, classifier name), so adding or reordering classifiers never
/// perturbs anyone else's results.
inline EvalReport run_benchmark(const Dataset& ds, const std::string& dataset_name,
                                const std::vector<BenchmarkClassifier>& classifiers,
                                std::size_t repeats, std::uint64_t seed) {
    if (repeats < 1) throw std::invalid_argument("run_benchmark: repeats must be >= 1");
    if (classifiers.empty()) throw std::invalid_argument("run_benchmark: no classifiers");

    EvalReport report;
    report.datasets.push_back(dataset_name);
    report.cells.resize(classifiers.size());
    for (std::size_t c = 0; c < classifiers.size(); ++c) {
        report.classifiers.push_back(classifiers[c].name);
        report.cells[c].resize(1);
    }

    for (std::size_t r = 1; r <= repeats; ++r) {
        const std::uint64_t repeat_seed = mix_seed(seed, r);
        const auto split = stratified_split(ds, {}, repeat_seed);
        std::vector<ClassLabel> actual;
        for (std::size_t i : split.test) actual.push_back(ds.labels[i]);

        for (std::size_t c = 0; c < classifiers.size(); ++c) {
            const auto& clf = classifiers[c];
            const std::uint64_t fit_seed =
                mix_seed(repeat_seed, fnv1a(clf.name.data(), clf.name.size()));
            const auto preds = clf.fit_predict_test(ds, split, fit_seed);
            const auto cm = confusion(actual, preds);
            report.cells[c][0].aucs.push_back(auc(cm));
            report.cells[c][0].matrices.push_back(cm);
        }
    }
    for (auto& row : report.cells) {
        auto [mean, sd] = detail::mean_and_sample_sd(row[0].aucs);
        row[0].mean = mean;
        row[0].sd = sd;
    }
    return report;
}

/// Joins single-dataset reports into one table. Classifier lists must match.
inline EvalReport merge_reports(const std::vector<EvalReport>& parts) {
    if (parts.empty()) throw std::invalid_argument("merge_reports: nothing to merge");
    EvalReport merged = parts.front();
    for (std::size_t p = 1; p < parts.size(); ++p) {
        const auto& part = parts[p];
        if (part.classifiers != merged.classifiers)
            throw std::invalid_argument("merge_reports: classifier lists differ");
        for (const auto& name : part.datasets) merged.datasets.push_back(name);
        for (std::size_t c = 0; c < merged.cells.size(); ++c)
            for (const auto& cell : part.cells[c]) merged.cells[c].push_back(cell);
    }
    return merged;
}

enum class ReportFormat { table, csv };

inline std::string emit_report(const EvalReport& report, ReportFormat format) {
    if (report.classifiers.empty() || report.datasets.empty())
        throw std::invalid_argument("emit_report: empty report");

    auto cell_text = [](const CellResult& cell) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.3f (%.3f)", cell.mean, cell.sd);
        return std::string(buf);
    };

    std::ostringstream out;
    if (format == ReportFormat::csv) {
        out << "classifier";
        for (const auto& d : report.datasets) out << "," << d;
        out << "\n";
        for (std::size_t c = 0; c < report.classifiers.size(); ++c) {
            out << report.classifiers[c];
            for (std::size_t d = 0; d < report.datasets.size(); ++d)
                out << "," << cell_text(report.cells[c][d]);
            out << "\n";
        }
        return out.str();
    }

    std::size_t name_w = std::string("classifier").size();
    for (const auto& c : report.classifiers) name_w = std::max(name_w, c.size());
    std::vector<std::size_t> col_w(report.datasets.size());
    for (std::size_t d = 0; d < report.datasets.size(); ++d) {
        col_w[d] = report.datasets[d].size();
        for (std::size_t c = 0; c < report.classifiers.size(); ++c)
            col_w[d] = std::max(col_w[d], cell_text(report.cells[c][d]).size());
    }

    out << std::left << std::setw(static_cast<int>(name_w)) << "classifier";
    for (std::size_t d = 0; d < report.datasets.size(); ++d)
        out << "  " << std::right << std::setw(static_cast<int>(col_w[d]))
            << report.datasets[d];
    out << "\n";
    for (std::size_t c = 0; c < report.classifiers.size(); ++c) {
        out << std::left << std::setw(static_cast<int>(name_w)) << report.classifiers[c];
        for (std::size_t d = 0; d < report.datasets.size(); ++d)
            out << "  " << std::right << std::setw(static_cast<int>(col_w[d]))
                << cell_text(report.cells[c][d]);
        out << "\n";
    }
    return out.str();
}

}  // namespace secl
