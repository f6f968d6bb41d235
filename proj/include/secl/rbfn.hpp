#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "secl/dataset.hpp"
#include "secl/matrix.hpp"
#include "secl/metrics.hpp"
#include "secl/rng.hpp"

namespace secl {

/// One-hidden-layer network of Gaussian units: f(x) = w0 + sum_j wj phi_j(x).
struct RbfNetwork {
    std::size_t k = 0;    // hidden unit count
    std::size_t dim = 0;  // input dimension
    Matrix centers;       // k x dim
    std::vector<double> widths;   // sigma_j, always >= kSigmaMin
    std::vector<double> weights;  // w_1..w_k
    double bias = 0.0;            // w_0

    static constexpr double kSigmaMin = 1e-6;
};

struct RbfTrainConfig {
    double lr_w = 0.01;
    double lr_c = 0.01;
    double lr_sigma = 0.01;
    std::size_t max_iters = 100;
    double tolerance = 1e-8;
    std::vector<std::size_t> k_grid = {2, 3, 5, 8, 12, 16, 20};
    std::uint64_t seed = 0;
};

inline void validate(const RbfTrainConfig& cfg) {
    if (cfg.lr_w <= 0.0 || cfg.lr_c <= 0.0 || cfg.lr_sigma <= 0.0)
        throw std::invalid_argument("RbfTrainConfig: learning rates must be positive");
    if (cfg.max_iters < 1) throw std::invalid_argument("RbfTrainConfig: max_iters must be >= 1");
    if (cfg.k_grid.empty()) throw std::invalid_argument("RbfTrainConfig: empty k_grid");
    for (std::size_t k : cfg.k_grid)
        if (k < 1) throw std::invalid_argument("RbfTrainConfig: k must be >= 1");
}

inline double gaussian_phi(std::span<const double> x, std::span<const double> c, double sigma) {
    if (sigma < RbfNetwork::kSigmaMin)
        throw std::invalid_argument("gaussian_phi: sigma below minimum width");
    return std::exp(-squared_distance(x, c) / (2.0 * sigma * sigma));
}

inline double forward(const RbfNetwork& net, std::span<const double> x) {
    if (x.size() != net.dim) throw std::invalid_argument("forward: input dimension mismatch");
    double y = net.bias;
    for (std::size_t j = 0; j < net.k; ++j)
        y += net.weights[j] * gaussian_phi(x, net.centers.row(j), net.widths[j]);
    return y;
}

// ---------------------------------------------------------------------------
// K-means center initialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::size_t> distinct_row_representatives(const Matrix& points) {
    std::set<std::vector<double>> seen;
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto row = points.row(i);
        std::vector<double> key(row.begin(), row.end());
        if (seen.insert(std::move(key)).second) reps.push_back(i);
    }
    return reps;
}

}  // namespace detail

/// Lloyd's algorithm with k distinct initial centers drawn without
/// replacement. Runs to an assignment fixpoint or 50 iterations. Empty
/// clusters are re-seeded from the point farthest from its current center.
inline Matrix kmeans_centers(const Matrix& points, std::size_t k, std::uint64_t seed) {
    if (points.rows() == 0) throw std::invalid_argument("kmeans_centers: no points");
    auto reps = detail::distinct_row_representatives(points);
    if (k < 1 || k > reps.size())
        throw std::invalid_argument("kmeans_centers: k exceeds the number of distinct points");

    SplitMix64 rng(seed);
    shuffle(reps, rng);
    Matrix centers(k, points.cols());
    for (std::size_t j = 0; j < k; ++j) {
        auto src = points.row(reps[j]);
        std::copy(src.begin(), src.end(), centers.row(j).begin());
    }

    std::vector<std::size_t> assign(points.rows(), 0);
    std::vector<std::size_t> prev;
    for (int iter = 0; iter < 50; ++iter) {
        for (std::size_t i = 0; i < points.rows(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t j = 0; j < k; ++j) {
                const double d2 = squared_distance(points.row(i), centers.row(j));
                if (d2 < best) {
                    best = d2;
                    arg = j;
                }
            }
            assign[i] = arg;
        }
        if (assign == prev) break;
        prev = assign;

        std::vector<std::size_t> size(k, 0);
        Matrix sums(k, points.cols());
        for (std::size_t i = 0; i < points.rows(); ++i) {
            ++size[assign[i]];
            auto row = points.row(i);
            auto acc = sums.row(assign[i]);
            for (std::size_t c = 0; c < row.size(); ++c) acc[c] += row[c];
        }
        std::vector<bool> reseeded(points.rows(), false);
        for (std::size_t j = 0; j < k; ++j) {
            if (size[j] > 0) {
                auto acc = sums.row(j);
                auto ctr = centers.row(j);
                for (std::size_t c = 0; c < ctr.size(); ++c)
                    ctr[c] = acc[c] / static_cast<double>(size[j]);
            } else {
                // farthest point from its assigned center takes over
                double worst = -1.0;
                std::size_t pick = 0;
                for (std::size_t i = 0; i < points.rows(); ++i) {
                    if (reseeded[i]) continue;
                    const double d2 = squared_distance(points.row(i), centers.row(assign[i]));
                    if (d2 > worst) {
                        worst = d2;
                        pick = i;
                    }
                }
                reseeded[pick] = true;
                auto src = points.row(pick);
                std::copy(src.begin(), src.end(), centers.row(j).begin());
            }
        }
    }
    return centers;
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

struct RbfGradients {
    double bias = 0.0;
    std::vector<double> weights;
    std::vector<double> widths;
    Matrix centers;  // k x dim
};

namespace detail {

/// Mean squared error E = (1/n) sum_i (f(z_i) - y_i)^2 and its partials with
/// respect to every parameter, in one pass. With e_i = f(z_i) - y_i:
///   dE/dw_j    = (2/n) sum_i e_i phi_j(z_i)
///   dE/dw_0    = (2/n) sum_i e_i
///   dE/dc_j    = (2/n) sum_i e_i w_j phi_j(z_i) (z_i - c_j) / sigma_j^2
///   dE/dsig_j  = (2/n) sum_i e_i w_j phi_j(z_i) ||z_i - c_j||^2 / sigma_j^3
inline std::pair<double, RbfGradients> mse_and_gradients(const RbfNetwork& net,
                                                         const Matrix& inputs,
                                                         std::span<const double> targets) {
    const std::size_t n = inputs.rows();
    if (n == 0) throw std::invalid_argument("rbfn gradients: empty batch");
    if (targets.size() != n)
        throw std::invalid_argument("rbfn gradients: inputs/targets length mismatch");
    if (inputs.cols() != net.dim)
        throw std::invalid_argument("rbfn gradients: input dimension mismatch");

    RbfGradients g;
    g.weights.assign(net.k, 0.0);
    g.widths.assign(net.k, 0.0);
    g.centers = Matrix(net.k, net.dim);

    std::vector<double> phi(net.k);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto z = inputs.row(i);
        double f = net.bias;
        for (std::size_t j = 0; j < net.k; ++j) {
            phi[j] = gaussian_phi(z, net.centers.row(j), net.widths[j]);
            f += net.weights[j] * phi[j];
        }
        const double e = f - targets[i];
        sse += e * e;
        g.bias += e;
        for (std::size_t j = 0; j < net.k; ++j) {
            const double sigma = net.widths[j];
            const double common = e * net.weights[j] * phi[j];
            g.weights[j] += e * phi[j];
            auto c = net.centers.row(j);
            auto gc = g.centers.row(j);
            double dist2 = 0.0;
            for (std::size_t t = 0; t < net.dim; ++t) {
                const double diff = z[t] - c[t];
                dist2 += diff * diff;
                gc[t] += common * diff / (sigma * sigma);
            }
            g.widths[j] += common * dist2 / (sigma * sigma * sigma);
        }
    }
    const double scale = 2.0 / static_cast<double>(n);
    g.bias *= scale;
    for (std::size_t j = 0; j < net.k; ++j) {
        g.weights[j] *= scale;
        g.widths[j] *= scale;
        auto gc = g.centers.row(j);
        for (double& v : gc) v *= scale;
    }
    return {sse / static_cast<double>(n), g};
}

}  // namespace detail

inline RbfGradients gradients(const RbfNetwork& net, const Matrix& inputs,
                              std::span<const double> targets) {
    return detail::mse_and_gradients(net, inputs, targets).second;
}

inline double mse(const RbfNetwork& net, const Matrix& inputs, std::span<const double> targets) {
    if (inputs.rows() == 0) throw std::invalid_argument("mse: empty batch");
    if (targets.size() != inputs.rows())
        throw std::invalid_argument("mse: inputs/targets length mismatch");
    double sse = 0.0;
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        const double e = forward(net, inputs.row(i)) - targets[i];
        sse += e * e;
    }
    return sse / static_cast<double>(inputs.rows());
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

inline std::vector<ClassLabel> predict_rbfn(const RbfNetwork& net, const Matrix& inputs);

namespace detail {

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
/// A is dense square and small (hidden unit count + 1).
inline std::vector<double> solve_linear_system(std::vector<std::vector<double>> a,
                                               std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        if (a[col][col] == 0.0) continue;  // ridge term keeps this from mattering
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r][col] / a[col][col];
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t row = n; row-- > 0;) {
        double s = b[row];
        for (std::size_t c = row + 1; c < n; ++c) s -= a[row][c] * x[c];
        x[row] = a[row][row] != 0.0 ? s / a[row][row] : 0.0;
    }
    return x;
}

/// Ridge-regularized least squares fit of the output layer (bias and
/// weights) against the initial hidden activations. Gradient descent on all
/// three parameter groups starts from this solution; random output weights
/// cannot reach a useful operating point within the default iteration budget.
inline void least_squares_output_layer(RbfNetwork& net, const Matrix& inputs,
                                       std::span<const double> targets) {
    const std::size_t m = net.k + 1;
    std::vector<std::vector<double>> gram(m, std::vector<double>(m, 0.0));
    std::vector<double> rhs(m, 0.0);
    std::vector<double> phi(m);
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        phi[0] = 1.0;
        for (std::size_t j = 0; j < net.k; ++j)
            phi[j + 1] = gaussian_phi(inputs.row(i), net.centers.row(j), net.widths[j]);
        for (std::size_t a = 0; a < m; ++a) {
            rhs[a] += phi[a] * targets[i];
            for (std::size_t b = a; b < m; ++b) gram[a][b] += phi[a] * phi[b];
        }
    }
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < a; ++b) gram[a][b] = gram[b][a];
        gram[a][a] += 1e-8;
    }
    const auto w = solve_linear_system(std::move(gram), std::move(rhs));
    net.bias = w[0];
    net.weights.assign(w.begin() + 1, w.end());
}

inline RbfNetwork init_network(const Matrix& inputs, std::span<const double> targets,
                               std::size_t k, std::uint64_t seed) {
    RbfNetwork net;
    net.k = k;
    net.dim = inputs.cols();
    net.centers = kmeans_centers(inputs, k, mix_seed(seed, 1));

    // sigma_j = mean distance from center j to its cluster members; singleton
    // clusters inherit the mean of the non-singleton sigmas.
    std::vector<double> dist_sum(k, 0.0);
    std::vector<std::size_t> size(k, 0);
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double d2 = squared_distance(inputs.row(i), net.centers.row(j));
            if (d2 < best) {
                best = d2;
                arg = j;
            }
        }
        dist_sum[arg] += std::sqrt(best);
        ++size[arg];
    }
    net.widths.assign(k, 0.0);
    double pooled = 0.0;
    std::size_t pooled_count = 0;
    for (std::size_t j = 0; j < k; ++j) {
        if (size[j] >= 2) {
            net.widths[j] = dist_sum[j] / static_cast<double>(size[j]);
            pooled += net.widths[j];
            ++pooled_count;
        }
    }
    double fallback = pooled_count > 0 ? pooled / static_cast<double>(pooled_count) : 0.0;
    if (fallback <= 0.0) {
        // all clusters singleton: mean pairwise center distance
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) {
                sum += std::sqrt(squared_distance(net.centers.row(a), net.centers.row(b)));
                ++cnt;
            }
        fallback = cnt > 0 ? sum / static_cast<double>(cnt) : 1.0;
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (size[j] < 2) net.widths[j] = fallback;
        net.widths[j] = std::max(net.widths[j], RbfNetwork::kSigmaMin);
    }

    least_squares_output_layer(net, inputs, targets);
    return net;
}

inline double train_single(RbfNetwork& net, const Matrix& inputs,
                           std::span<const double> targets, const RbfTrainConfig& cfg) {
    double prev_e = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        auto [e, g] = mse_and_gradients(net, inputs, targets);
        if (std::abs(e - prev_e) < cfg.tolerance) break;
        prev_e = e;

        net.bias -= cfg.lr_w * g.bias;
        for (std::size_t j = 0; j < net.k; ++j) {
            net.weights[j] -= cfg.lr_w * g.weights[j];
            net.widths[j] =
                std::max(net.widths[j] - cfg.lr_sigma * g.widths[j], RbfNetwork::kSigmaMin);
            auto c = net.centers.row(j);
            auto gc = g.centers.row(j);
            for (std::size_t t = 0; t < net.dim; ++t) c[t] -= cfg.lr_c * gc[t];
        }
    }
    return mse(net, inputs, targets);
}

/// Grid entries are capped at ceil(n/10) hidden units and at the number of
/// distinct input points. When the cap removes everything, the smallest
/// feasible fallback keeps toy problems trainable.
inline std::vector<std::size_t> feasible_k_grid(const RbfTrainConfig& cfg, std::size_t n,
                                                std::size_t distinct) {
    const std::size_t cap = std::max<std::size_t>(1, (n + 9) / 10);
    std::vector<std::size_t> ks;
    for (std::size_t k : cfg.k_grid)
        if (k <= cap && k <= distinct) ks.push_back(k);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.empty()) {
        const std::size_t smallest = *std::min_element(cfg.k_grid.begin(), cfg.k_grid.end());
        ks.push_back(std::min(smallest, distinct));
    }
    return ks;
}

}  // namespace detail

/// Trains one network per k-grid entry with full-batch gradient descent and
/// keeps the best. With a validation pair, "best" maximizes validation AUC;
/// without one, it minimizes final training error. Ties go to the smaller k.
inline RbfNetwork train_rbfn(
    const Matrix& inputs, const std::vector<double>& targets, const RbfTrainConfig& cfg,
    std::optional<std::pair<const Matrix*, const std::vector<double>*>> validation =
        std::nullopt) {
    validate(cfg);
    if (inputs.rows() == 0) throw std::invalid_argument("train_rbfn: empty training set");
    if (targets.size() != inputs.rows())
        throw std::invalid_argument("train_rbfn: inputs/targets length mismatch");
    bool has_pos = false, has_neg = false;
    for (double y : targets) (y >= 0.5 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw std::invalid_argument("train_rbfn: targets contain a single class");

    std::vector<ClassLabel> val_actual;
    if (validation) {
        if (validation->first->rows() != validation->second->size())
            throw std::invalid_argument("train_rbfn: validation inputs/targets mismatch");
        for (double y : *validation->second)
            val_actual.push_back(y >= 0.5 ? ClassLabel::positive : ClassLabel::negative);
    }

    const std::size_t distinct = detail::distinct_row_representatives(inputs).size();
    const auto ks = detail::feasible_k_grid(cfg, inputs.rows(), distinct);

    RbfNetwork best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k : ks) {
        RbfNetwork net = detail::init_network(inputs, targets, k, mix_seed(cfg.seed, k));
        const double train_e = detail::train_single(net, inputs, targets, cfg);
        double score;
        if (validation) {
            const auto preds = predict_rbfn(net, *validation->first);
            score = auc(confusion(val_actual, preds));
        } else {
            score = -train_e;
        }
        if (score > best_score) {
            best_score = score;
            best = std::move(net);
        }
    }
    return best;
}

/// Thresholds the network output at 0.5; exactly 0.5 maps to positive.
inline std::vector<ClassLabel> predict_rbfn(const RbfNetwork& net, const Matrix& inputs) {
    std::vector<ClassLabel> out;
    out.reserve(inputs.rows());
    for (std::size_t i = 0; i < inputs.rows(); ++i)
        out.push_back(forward(net, inputs.row(i)) >= 0.5 ? ClassLabel::positive
                                                         : ClassLabel::negative);
    return out;
}

}  // namespace secl
