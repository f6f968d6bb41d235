#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "secl/dataset.hpp"

namespace secl {

/// Split scoring rules. Higher score = better split for every variant.
/// `hellinger` is the canonical Hellinger distance between the two classes'
/// partition distributions; `hellinger_as_printed` drops the inner square
/// roots (an L2 distance between the distributions) and is kept selectable
/// for fidelity experiments. `gini` and `entropy` are the usual impurity
/// gains and exist so the skew-sensitivity of confidence-based criteria can
/// be demonstrated against the Hellinger criterion.
enum class SplitCriterion { hellinger, hellinger_as_printed, gini, entropy };

inline const char* criterion_name(SplitCriterion c) {
    switch (c) {
        case SplitCriterion::hellinger: return "hellinger";
        case SplitCriterion::hellinger_as_printed: return "hellinger-as-printed";
        case SplitCriterion::gini: return "gini";
        case SplitCriterion::entropy: return "entropy";
    }
    return "?";
}

inline std::optional<SplitCriterion> parse_criterion(const std::string& name) {
    if (name == "hellinger") return SplitCriterion::hellinger;
    if (name == "hellinger-as-printed" || name == "hellinger_as_printed")
        return SplitCriterion::hellinger_as_printed;
    if (name == "gini") return SplitCriterion::gini;
    if (name == "entropy") return SplitCriterion::entropy;
    return std::nullopt;
}

struct ClassCounts {
    std::size_t pos = 0;
    std::size_t neg = 0;

    std::size_t total() const { return pos + neg; }
    void add(ClassLabel c) { c == ClassLabel::positive ? ++pos : ++neg; }
};

// ---------------------------------------------------------------------------
// Split scores
// ---------------------------------------------------------------------------

/// Hellinger distance between the class-conditional distributions over a
/// binary partition. f+j and f-j are the fractions of the node's positives
/// (negatives) landing in partition j; the score depends only on those
/// fractions, never on the class prior, which is what makes the criterion
/// skew-insensitive.
inline double hellinger_distance(ClassCounts left, ClassCounts right,
                                 SplitCriterion variant = SplitCriterion::hellinger) {
    if (variant != SplitCriterion::hellinger && variant != SplitCriterion::hellinger_as_printed)
        throw std::invalid_argument("hellinger_distance: not a hellinger variant");
    const double pos = static_cast<double>(left.pos + right.pos);
    const double neg = static_cast<double>(left.neg + right.neg);
    if (pos == 0.0 || neg == 0.0)
        throw std::invalid_argument(
            "hellinger_distance: a class is absent at the parent node (treat the node as pure)");

    double sum = 0.0;
    for (const auto& part : {left, right}) {
        const double fp = static_cast<double>(part.pos) / pos;
        const double fn = static_cast<double>(part.neg) / neg;
        const double diff = variant == SplitCriterion::hellinger
                                ? std::sqrt(fp) - std::sqrt(fn)
                                : fp - fn;
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

namespace detail {

inline double entropy_of(ClassCounts c) {
    const double n = static_cast<double>(c.total());
    double h = 0.0;
    for (double cnt : {static_cast<double>(c.pos), static_cast<double>(c.neg)}) {
        if (cnt == 0.0) continue;  // 0*log(0) = 0
        const double p = cnt / n;
        h -= p * std::log2(p);
    }
    return h;
}

inline double gini_of(ClassCounts c) {
    const double n = static_cast<double>(c.total());
    const double pp = static_cast<double>(c.pos) / n;
    const double pn = static_cast<double>(c.neg) / n;
    return 1.0 - pp * pp - pn * pn;
}

}  // namespace detail

/// Scores a binary split under the chosen criterion. Hellinger variants
/// score the children directly; gini and entropy return the impurity gain
/// against the parent.
inline double criterion_score(ClassCounts parent, ClassCounts left, ClassCounts right,
                              SplitCriterion criterion) {
    if (left.total() == 0 || right.total() == 0)
        throw std::invalid_argument("criterion_score: empty child partition");
    if (parent.pos != left.pos + right.pos || parent.neg != left.neg + right.neg)
        throw std::invalid_argument("criterion_score: parent counts != left + right");

    switch (criterion) {
        case SplitCriterion::hellinger:
        case SplitCriterion::hellinger_as_printed:
            return hellinger_distance(left, right, criterion);
        case SplitCriterion::entropy: {
            const double n = static_cast<double>(parent.total());
            return detail::entropy_of(parent) -
                   (static_cast<double>(left.total()) / n) * detail::entropy_of(left) -
                   (static_cast<double>(right.total()) / n) * detail::entropy_of(right);
        }
        case SplitCriterion::gini: {
            const double n = static_cast<double>(parent.total());
            return detail::gini_of(parent) -
                   (static_cast<double>(left.total()) / n) * detail::gini_of(left) -
                   (static_cast<double>(right.total()) / n) * detail::gini_of(right);
        }
    }
    throw std::logic_error("criterion_score: unknown criterion");
}

// ---------------------------------------------------------------------------
// Tree model
// ---------------------------------------------------------------------------

/// Binary routing rule. Numeric: left iff value < threshold, with the
/// threshold strictly between two observed adjacent distinct values.
/// Categorical: left iff value == value_index (one value against the rest);
/// values unseen in training therefore route right.
struct SplitRule {
    std::size_t feature = 0;
    FeatureType type = FeatureType::numeric;
    double threshold = 0.0;  // numeric rules
    int value_index = 0;     // categorical rules
};

struct TreeNode {
    bool leaf = true;
    SplitRule rule;           // internal nodes
    int left = -1;            // child indices into TreeModel::nodes
    int right = -1;
    ClassLabel label = ClassLabel::negative;  // leaves: plurality class
    ClassCounts counts;       // training samples that reached this node
};

/// Unpruned binary decision tree. Growth stops only at the minsplit rule,
/// class purity, or the absence of any scoring split. Nodes are stored in
/// pre-order; node 0 is the root.
struct TreeModel {
    std::vector<TreeNode> nodes;
    SplitCriterion criterion = SplitCriterion::hellinger;
    std::size_t minsplit = 2;
    std::size_t feature_count = 0;
    std::vector<double> importances;  // per feature, sums to 1 when any split exists
};

/// Enumerates every candidate split at a node: midpoints of adjacent distinct
/// sorted values per numeric feature, one-value-vs-rest per categorical
/// feature. Returns the maximum-score rule; ties break toward the lowest
/// feature index, then the lowest threshold / value index. Returns nullopt
/// when no candidate has a positive score.
inline std::optional<std::pair<SplitRule, double>> best_split(
    const Dataset& ds, std::span<const std::size_t> rows, SplitCriterion criterion) {
    ClassCounts parent;
    for (std::size_t r : rows) parent.add(ds.labels[r]);
    if (parent.pos == 0 || parent.neg == 0)
        throw std::invalid_argument("best_split: node does not contain both classes");

    std::optional<std::pair<SplitRule, double>> best;
    auto consider = [&](const SplitRule& rule, ClassCounts left) {
        ClassCounts right{parent.pos - left.pos, parent.neg - left.neg};
        if (left.total() == 0 || right.total() == 0) return;
        const double score = criterion_score(parent, left, right, criterion);
        if (score > 0.0 && (!best || score > best->second)) best = {rule, score};
    };

    std::vector<std::pair<double, ClassLabel>> column;
    for (std::size_t f = 0; f < ds.d(); ++f) {
        const auto& feat = ds.schema.features[f];
        if (feat.type == FeatureType::numeric) {
            column.clear();
            column.reserve(rows.size());
            for (std::size_t r : rows) column.emplace_back(ds.value(r, f), ds.labels[r]);
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            ClassCounts left;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                left.add(column[i].second);
                const double lo = column[i].first;
                const double hi = column[i + 1].first;
                if (lo == hi) continue;
                const double mid = lo + (hi - lo) / 2.0;
                if (!(mid > lo && mid < hi)) continue;  // adjacent representable values
                consider({f, FeatureType::numeric, mid, 0}, left);
            }
        } else {
            std::vector<ClassCounts> per_value(feat.values.size());
            for (std::size_t r : rows) per_value[ds.category(r, f)].add(ds.labels[r]);
            for (std::size_t v = 0; v < per_value.size(); ++v) {
                if (per_value[v].total() == 0) continue;
                consider({f, FeatureType::categorical, 0.0, static_cast<int>(v)}, per_value[v]);
            }
        }
    }
    return best;
}

namespace detail {

inline bool goes_left(const Dataset& ds, std::size_t row, const SplitRule& rule) {
    if (rule.type == FeatureType::numeric) return ds.value(row, rule.feature) < rule.threshold;
    return ds.category(row, rule.feature) == rule.value_index;
}

/// Plurality label; ties go to the negative (minority-coded) class to keep
/// false negatives down.
inline ClassLabel plurality(ClassCounts counts) {
    return counts.pos > counts.neg ? ClassLabel::positive : ClassLabel::negative;
}

struct TreeBuilder {
    const Dataset& ds;
    SplitCriterion criterion;
    std::size_t minsplit;
    std::size_t root_count;
    std::vector<TreeNode> nodes;
    std::vector<double> importance;

    int build(std::vector<std::size_t>& rows) {
        ClassCounts counts;
        for (std::size_t r : rows) counts.add(ds.labels[r]);

        const int index = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[index].counts = counts;

        std::optional<std::pair<SplitRule, double>> split;
        if (rows.size() >= minsplit && counts.pos > 0 && counts.neg > 0)
            split = best_split(ds, rows, criterion);

        if (!split) {
            nodes[index].leaf = true;
            nodes[index].label = plurality(counts);
            return index;
        }

        importance[split->first.feature] +=
            (static_cast<double>(rows.size()) / static_cast<double>(root_count)) *
            split->second;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows)
            (goes_left(ds, r, split->first) ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        nodes[index].leaf = false;
        nodes[index].rule = split->first;
        nodes[index].left = build(left_rows);
        nodes[index].right = build(right_rows);
        return index;
    }
};

}  // namespace detail

/// Grows an unpruned tree on the given rows. A node splits when it has at
/// least `minsplit` samples, both classes present, and a positive-score
/// split; otherwise it becomes a plurality-labeled leaf. Feature importance
/// aggregates (node size / root size) * split score over the whole tree,
/// normalized to sum 1.
inline TreeModel fit_tree(const Dataset& ds, const std::vector<std::size_t>& rows,
                          SplitCriterion criterion, std::size_t minsplit) {
    if (minsplit < 2) throw std::invalid_argument("fit_tree: minsplit must be >= 2");
    if (rows.empty()) throw std::invalid_argument("fit_tree: empty training set");
    ClassCounts counts;
    for (std::size_t r : rows) {
        if (r >= ds.n) throw std::invalid_argument("fit_tree: row index out of range");
        counts.add(ds.labels[r]);
    }
    if (counts.pos == 0 || counts.neg == 0)
        throw std::invalid_argument("fit_tree: training rows contain a single class");

    detail::TreeBuilder builder{ds, criterion, minsplit, rows.size(), {},
                                std::vector<double>(ds.d(), 0.0)};
    std::vector<std::size_t> work = rows;
    builder.build(work);

    TreeModel model;
    model.nodes = std::move(builder.nodes);
    model.criterion = criterion;
    model.minsplit = minsplit;
    model.feature_count = ds.d();
    model.importances = std::move(builder.importance);
    double total = 0.0;
    for (double v : model.importances) total += v;
    if (total > 0.0)
        for (double& v : model.importances) v /= total;
    return model;
}

namespace detail {

inline void check_tree_schema(const TreeModel& model, const Dataset& ds) {
    if (model.feature_count != ds.d())
        throw DataError("predict_tree: dataset has " + std::to_string(ds.d()) +
                        " features, model expects " + std::to_string(model.feature_count));
    for (const auto& node : model.nodes) {
        if (node.leaf) continue;
        if (node.rule.feature >= ds.d() ||
            ds.schema.features[node.rule.feature].type != node.rule.type)
            throw DataError("predict_tree: feature kinds do not match the training schema");
    }
}

}  // namespace detail

inline std::vector<ClassLabel> predict_tree(const TreeModel& model, const Dataset& ds,
                                            const std::vector<std::size_t>& rows) {
    detail::check_tree_schema(model, ds);
    std::vector<ClassLabel> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) {
        const TreeNode* node = &model.nodes[0];
        while (!node->leaf)
            node = &model.nodes[detail::goes_left(ds, r, node->rule) ? node->left : node->right];
        out.push_back(node->label);
    }
    return out;
}

/// Features ordered by importance (descending, ties toward the lower index).
/// Only features that actually split somewhere are returned; top_m truncates
/// the list.
inline std::vector<std::size_t> rank_features(const TreeModel& model,
                                              std::optional<std::size_t> top_m = std::nullopt) {
    std::vector<std::size_t> order;
    for (std::size_t f = 0; f < model.importances.size(); ++f)
        if (model.importances[f] > 0.0) order.push_back(f);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return model.importances[a] > model.importances[b];
    });
    if (top_m && order.size() > *top_m) order.resize(*top_m);
    return order;
}

}  // namespace secl
