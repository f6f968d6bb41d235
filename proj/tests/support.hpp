#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// must stay naive and separate from the library implementation paths they
// check.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "secl/secl.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() { return SECL_DATA_DIR; }

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("secl_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

    std::filesystem::path write(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }

private:
    std::filesystem::path path_;
};

/// Builds an all-numeric dataset directly, bypassing CSV.
inline secl::Dataset make_numeric_dataset(const std::vector<std::vector<double>>& rows,
                                          const std::vector<int>& labels01) {
    secl::Dataset ds;
    const std::size_t d = rows.empty() ? 0 : rows.front().size();
    for (std::size_t f = 0; f < d; ++f)
        ds.schema.features.push_back({"x" + std::to_string(f), secl::FeatureType::numeric, {}});
    ds.schema.label_name = "y";
    ds.n = rows.size();
    for (const auto& row : rows)
        ds.cells.insert(ds.cells.end(), row.begin(), row.end());
    for (int y : labels01)
        ds.labels.push_back(y ? secl::ClassLabel::positive : secl::ClassLabel::negative);
    return ds;
}

/// Synthetic 2-feature task with a diagonal class boundary and a 70:30 class
/// mix; linearly separable but axis-parallel trees need depth, so error
/// shrinks visibly with sample size.
inline secl::Dataset separable_dataset(std::size_t n, std::uint64_t seed) {
    secl::SplitMix64 rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t made = 0;
    while (made < n) {
        const double x0 = rng.next_in(-1.0, 1.0);
        const double x1 = rng.next_in(-1.0, 1.0);
        const bool positive = x0 + x1 > -0.4;  // roughly 70% positive
        rows.push_back({x0, x1});
        labels.push_back(positive ? 1 : 0);
        ++made;
    }
    // learners need both classes
    bool has_pos = false, has_neg = false;
    for (int y : labels) (y ? has_pos : has_neg) = true;
    if (!has_pos) labels.front() = 1;
    if (!has_neg) labels.front() = 0;
    return make_numeric_dataset(rows, labels);
}

/// Exhaustive best-split oracle: enumerates the same candidate set the
/// contract describes, scoring each with criterion_score, entirely
/// independently of the library's sweep implementation.
inline std::optional<std::pair<secl::SplitRule, double>> brute_force_best_split(
    const secl::Dataset& ds, const std::vector<std::size_t>& rows,
    secl::SplitCriterion criterion) {
    secl::ClassCounts parent;
    for (auto r : rows) parent.add(ds.labels[r]);

    std::optional<std::pair<secl::SplitRule, double>> best;
    auto offer = [&](const secl::SplitRule& rule) {
        secl::ClassCounts left, right;
        for (auto r : rows) {
            bool goes_left = rule.type == secl::FeatureType::numeric
                                 ? ds.value(r, rule.feature) < rule.threshold
                                 : ds.category(r, rule.feature) == rule.value_index;
            (goes_left ? left : right).add(ds.labels[r]);
        }
        if (left.total() == 0 || right.total() == 0) return;
        const double score = secl::criterion_score(parent, left, right, criterion);
        if (score > 0.0 && (!best || score > best->second)) best = {rule, score};
    };

    for (std::size_t f = 0; f < ds.d(); ++f) {
        if (ds.schema.features[f].type == secl::FeatureType::numeric) {
            std::vector<double> values;
            for (auto r : rows) values.push_back(ds.value(r, f));
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t i = 0; i + 1 < values.size(); ++i) {
                const double mid = values[i] + (values[i + 1] - values[i]) / 2.0;
                if (!(mid > values[i] && mid < values[i + 1])) continue;
                offer({f, secl::FeatureType::numeric, mid, 0});
            }
        } else {
            for (std::size_t v = 0; v < ds.schema.features[f].values.size(); ++v)
                offer({f, secl::FeatureType::categorical, 0.0, static_cast<int>(v)});
        }
    }
    return best;
}

/// Random bounded network/batch fixture for gradient checks.
struct RbfFixture {
    secl::RbfNetwork net;
    secl::Matrix inputs;
    std::vector<double> targets;
};

inline RbfFixture make_rbf_fixture(secl::SplitMix64& rng, std::size_t k, std::size_t dim,
                                   std::size_t n) {
    RbfFixture fx;
    fx.net.k = k;
    fx.net.dim = dim;
    fx.net.centers = secl::Matrix(k, dim);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t t = 0; t < dim; ++t) fx.net.centers.at(j, t) = rng.next_in(-1, 1);
    for (std::size_t j = 0; j < k; ++j) {
        fx.net.widths.push_back(rng.next_in(0.5, 2.0));
        fx.net.weights.push_back(rng.next_in(-1, 1));
    }
    fx.net.bias = rng.next_in(-0.5, 0.5);
    fx.inputs = secl::Matrix(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < dim; ++t) fx.inputs.at(i, t) = rng.next_in(-1, 1);
        fx.targets.push_back(static_cast<double>(rng.next_below(2)));
    }
    return fx;
}

/// Central finite differences of the mean squared error with respect to every
/// network parameter. h per the gradient-check protocol.
struct NumericRbfGradients {
    double bias = 0.0;
    std::vector<double> weights;
    std::vector<double> widths;
    secl::Matrix centers;
};

inline NumericRbfGradients finite_difference_gradients(const secl::RbfNetwork& net,
                                                       const secl::Matrix& inputs,
                                                       const std::vector<double>& targets,
                                                       double h = 1e-5) {
    auto err = [&](const secl::RbfNetwork& candidate) {
        return secl::mse(candidate, inputs, targets);
    };
    auto central = [&](auto&& setter) {
        secl::RbfNetwork up = net, down = net;
        setter(up, h);
        setter(down, -h);
        return (err(up) - err(down)) / (2.0 * h);
    };

    NumericRbfGradients g;
    g.bias = central([](secl::RbfNetwork& n, double d) { n.bias += d; });
    g.centers = secl::Matrix(net.k, net.dim);
    for (std::size_t j = 0; j < net.k; ++j) {
        g.weights.push_back(
            central([j](secl::RbfNetwork& n, double d) { n.weights[j] += d; }));
        g.widths.push_back(
            central([j](secl::RbfNetwork& n, double d) { n.widths[j] += d; }));
        for (std::size_t t = 0; t < net.dim; ++t)
            g.centers.at(j, t) = central(
                [j, t](secl::RbfNetwork& n, double d) { n.centers.at(j, t) += d; });
    }
    return g;
}

inline bool close_gradient(double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    if (diff < 1e-8) return true;
    return diff / std::max(std::abs(analytic), std::abs(numeric)) < 1e-5;
}

/// Two well-separated 2-D blobs; positives around (+2,+2), negatives around
/// (-2,-2).
inline std::pair<secl::Matrix, std::vector<double>> blob_fixture(std::size_t per_class,
                                                                 std::uint64_t seed) {
    secl::SplitMix64 rng(seed);
    secl::Matrix inputs(2 * per_class, 2);
    std::vector<double> targets;
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const bool positive = i < per_class;
        const double cx = positive ? 2.0 : -2.0;
        inputs.at(i, 0) = cx + rng.next_in(-0.5, 0.5);
        inputs.at(i, 1) = cx + rng.next_in(-0.5, 0.5);
        targets.push_back(positive ? 1.0 : 0.0);
    }
    return {inputs, targets};
}

}  // namespace testsupport
