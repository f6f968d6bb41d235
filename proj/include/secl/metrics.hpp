#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "secl/dataset.hpp"

namespace secl {

/// Counts per the majority-is-positive convention: rows are actual classes,
/// columns are predictions.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;

    std::size_t actual_positives() const { return tp + fn; }
    std::size_t actual_negatives() const { return fp + tn; }
};

inline ConfusionMatrix confusion(const std::vector<ClassLabel>& actual,
                                 const std::vector<ClassLabel>& predicted) {
    if (actual.empty()) throw std::invalid_argument("confusion: empty input");
    if (actual.size() != predicted.size())
        throw std::invalid_argument("confusion: label vectors differ in length");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const bool a = actual[i] == ClassLabel::positive;
        const bool p = predicted[i] == ClassLabel::positive;
        if (a && p) ++cm.tp;
        else if (a && !p) ++cm.fn;
        else if (!a && p) ++cm.fp;
        else ++cm.tn;
    }
    return cm;
}

inline double sensitivity(const ConfusionMatrix& cm) {
    if (cm.actual_positives() == 0)
        throw std::invalid_argument("sensitivity: no actual positives");
    return static_cast<double>(cm.tp) / static_cast<double>(cm.actual_positives());
}

inline double specificity(const ConfusionMatrix& cm) {
    if (cm.actual_negatives() == 0)
        throw std::invalid_argument("specificity: no actual negatives");
    return static_cast<double>(cm.tn) / static_cast<double>(cm.actual_negatives());
}

/// Single-threshold AUC: (sensitivity + specificity) / 2. This is the
/// balanced accuracy at the model's operating point, not the ROC integral;
/// it is the metric all reports in this project use.
inline double auc(const ConfusionMatrix& cm) {
    return 0.5 * (sensitivity(cm) + specificity(cm));
}

}  // namespace secl
