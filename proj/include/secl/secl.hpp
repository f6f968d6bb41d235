#pragma once

// Umbrella header for the secl library: Hellinger-distance decision trees,
// Gaussian RBF networks, and the superensemble pipeline that combines them
// for binary imbalanced classification.

#include "secl/benchmark.hpp"
#include "secl/dataset.hpp"
#include "secl/ensemble.hpp"
#include "secl/matrix.hpp"
#include "secl/metrics.hpp"
#include "secl/rbfn.hpp"
#include "secl/rng.hpp"
#include "secl/tree.hpp"
