#pragma once

// Spectral clustering pipeline: method-specific eigenvector selection,
// k-means (k-means++ seeding + Lloyd), and the clustering-error metric.

#include "spm/baselines.hpp"
#include "spm/errors.hpp"
#include "spm/linalg.hpp"
#include "spm/power_mean.hpp"
#include "spm/rng.hpp"
#include "spm/signed_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

namespace spm {

struct KmeansOptions {
    int restarts = 10;
    int max_iters = 300;
    double tol = 1e-9; ///< largest centroid shift that counts as converged
    std::uint64_t seed = 0;
};

struct KmeansResult {
    Labels labels;
    Matrix centroids;                  ///< k×d
    double inertia = 0.0;              ///< sum of squared distances to assigned centroids
    std::vector<double> inertia_trace; ///< best restart, one value per assignment step
    int best_restart = 0;
};

namespace detail {

inline double squared_distance(const Matrix& pts, Index i, const Matrix& cents, Index c) {
    return (pts.row(i) - cents.row(c)).squaredNorm();
}

/// One k-means run; `u` supplies uniforms by counter.
inline KmeansResult kmeans_single(const Matrix& pts, Index k, const KmeansOptions& opts, const KeyedUniform& u) {
    const Index n = pts.rows();
    const Index d = pts.cols();
    std::uint64_t counter = 0;

    // k-means++ seeding.
    Matrix cents(k, d);
    Vector best_d2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
    Index first = std::min<Index>(n - 1, static_cast<Index>(u(counter++) * static_cast<double>(n)));
    cents.row(0) = pts.row(first);
    for (Index c = 1; c < k; ++c) {
        double total = 0.0;
        for (Index i = 0; i < n; ++i) {
            best_d2[i] = std::min(best_d2[i], squared_distance(pts, i, cents, c - 1));
            total += best_d2[i];
        }
        Index pick = n - 1;
        if (total > 0) {
            const double target = u(counter++) * total;
            double acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += best_d2[i];
                if (acc > target && best_d2[i] > 0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = std::min<Index>(n - 1, static_cast<Index>(u(counter++) * static_cast<double>(n)));
        }
        cents.row(c) = pts.row(pick);
    }

    KmeansResult r;
    r.labels.assign(static_cast<std::size_t>(n), 0);
    Vector dist(n);
    for (int it = 0; it < opts.max_iters; ++it) {
        // Assignment (ties to the lowest index).
        double inertia = 0.0;
        bool changed = it == 0;
        for (Index i = 0; i < n; ++i) {
            Index best = 0;
            double bd = squared_distance(pts, i, cents, 0);
            for (Index c = 1; c < k; ++c) {
                const double dc = squared_distance(pts, i, cents, c);
                if (dc < bd) {
                    bd = dc;
                    best = c;
                }
            }
            if (r.labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) changed = true;
            r.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
            dist[i] = bd;
            inertia += bd;
        }
        r.inertia_trace.push_back(inertia);
        r.inertia = inertia;
        if (!changed) break;

        // Update.
        Matrix next = Matrix::Zero(k, d);
        std::vector<Index> count(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            const auto c = r.labels[static_cast<std::size_t>(i)];
            next.row(c) += pts.row(i);
            ++count[static_cast<std::size_t>(c)];
        }
        for (Index c = 0; c < k; ++c) {
            if (count[static_cast<std::size_t>(c)] > 0) {
                next.row(c) /= static_cast<double>(count[static_cast<std::size_t>(c)]);
            } else {
                // Empty cluster: reseed at the point farthest from its centroid.
                Index far = 0;
                for (Index i = 1; i < n; ++i)
                    if (dist[i] > dist[far]) far = i;
                next.row(c) = pts.row(far);
                dist[far] = 0.0;
            }
        }
        const double shift = (next - cents).rowwise().norm().maxCoeff();
        cents = std::move(next);
        if (shift <= opts.tol) {
            // Final assignment against the converged centroids.
            double fin = 0.0;
            for (Index i = 0; i < n; ++i) {
                Index best = 0;
                double bd = squared_distance(pts, i, cents, 0);
                for (Index c = 1; c < k; ++c) {
                    const double dc = squared_distance(pts, i, cents, c);
                    if (dc < bd) {
                        bd = dc;
                        best = c;
                    }
                }
                r.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
                fin += bd;
            }
            r.inertia_trace.push_back(fin);
            r.inertia = fin;
            break;
        }
    }
    r.centroids = std::move(cents);
    return r;
}

} // namespace detail

/// Best-inertia run over `opts.restarts` seeded restarts.
inline KmeansResult kmeans(const Matrix& points, Index k, const KmeansOptions& opts = {}) {
    if (points.cols() == 0) throw ParameterError("kmeans: points have dimension 0");
    if (k < 1) throw ParameterError("kmeans: k must be >= 1");
    if (points.rows() < k) throw ParameterError("kmeans: need at least k points");
    if (opts.restarts < 1 || opts.max_iters < 1) throw ParameterError("kmeans: restarts and max_iters must be >= 1");
    if (!points.allFinite()) throw DomainError("kmeans: non-finite point");
    KmeansResult best;
    bool have = false;
    for (int r = 0; r < opts.restarts; ++r) {
        const KeyedUniform u(hash_combine({opts.seed, static_cast<std::uint64_t>(r)}));
        auto run = detail::kmeans_single(points, k, opts, u);
        if (!have || run.inertia < best.inertia) {
            best = std::move(run);
            best.best_restart = r;
            have = true;
        }
    }
    return best;
}

/// Minimum-cost perfect assignment for a square cost matrix (Hungarian
/// method with potentials, O(n³)). Returns column index per row.
inline std::vector<Index> hungarian(const Matrix& cost) {
    if (cost.rows() != cost.cols()) throw ParameterError("hungarian: cost matrix must be square");
    const Index n = cost.rows();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
    for (Index i = 1; i <= n; ++i) {
        p[0] = i;
        Index j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
        std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const Index i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const Index j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<Index> assign(static_cast<std::size_t>(n), 0);
    for (Index j = 1; j <= n; ++j)
        if (p[static_cast<std::size_t>(j)] > 0) assign[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return assign;
}

/// Smallest fraction of misassigned vertices over all matchings of
/// predicted to true cluster names.
inline double clustering_error(const Labels& pred, const Labels& truth) {
    if (pred.size() != truth.size()) throw ParameterError("clustering_error: length mismatch");
    if (pred.empty()) return 0.0;
    int names = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || truth[i] < 0) throw ParameterError("clustering_error: negative label");
        names = std::max({names, pred[i] + 1, truth[i] + 1});
    }
    Matrix confusion = Matrix::Zero(names, names);
    for (std::size_t i = 0; i < pred.size(); ++i) confusion(pred[i], truth[i]) += 1.0;
    const auto assign = hungarian(-confusion);
    double matched = 0.0;
    for (Index r = 0; r < names; ++r) matched += confusion(r, assign[static_cast<std::size_t>(r)]);
    return 1.0 - matched / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Spectral embedding and clustering

struct Embedding {
    Matrix vectors;        ///< n×k′
    Vector values;         ///< eigenvalues paired with the columns
    Index k_prime = 0;
    double shift = 0.0;    ///< ε used by power-mean methods, 0 otherwise
    bool converged = true; ///< matrix-free path convergence flag
};

struct SpectralOptions {
    KmeansOptions kmeans;
    bool row_normalize = false;
    BlockIterationOptions matrix_free;
};

inline Embedding spectral_embedding(const SignedGraph& g, const MethodSpec& method, Index k,
                                    const SpectralOptions& opts = {}) {
    if (k < 2) throw ParameterError("spectral_embedding: k must be >= 2");
    if (k > g.size()) throw ParameterError("spectral_embedding: k exceeds the number of vertices");
    Embedding emb;
    auto bottom = [&](const SymMatrix& m, Index count) {
        const auto e = eigh(m);
        emb.vectors = e.bottom(count);
        emb.values = e.values.head(count);
        emb.k_prime = count;
    };
    if (const auto* pm = std::get_if<PowerMeanMethod>(&method)) {
        const PowerParam pp = pm->param();
        pp.validate_for_laplacian();
        emb.shift = pp.shift;
        const Index kp = pm->p >= 1 ? k - 1 : k;
        if (pm->matrix_free) {
            auto mf = opts.matrix_free;
            mf.seed = hash_combine({opts.kmeans.seed, 0x6d66ULL});
            auto r = smallest_eigs_matrix_free(g, pp.p, pp.shift, kp, mf);
            emb.vectors = std::move(r.vectors);
            emb.values = std::move(r.values);
            emb.k_prime = kp;
            emb.converged = r.converged;
        } else {
            auto r = smallest_eigs_dense(g, pp, kp);
            emb.vectors = std::move(r.vectors);
            emb.values = std::move(r.values);
            emb.k_prime = kp;
        }
    } else if (std::holds_alternative<SnMethod>(method)) {
        bottom(build_signed_laplacian(g, SignedLaplacianKind::SN), k);
    } else if (std::holds_alternative<BnMethod>(method)) {
        bottom(build_signed_laplacian(g, SignedLaplacianKind::BN), k);
    } else if (std::holds_alternative<AmMethod>(method)) {
        bottom(build_am(g), k);
    } else if (const auto* gm = std::get_if<GmMethod>(&method)) {
        bottom(build_gm(g, gm->eps_gm), k);
    } else if (const auto* bh = std::get_if<BetheMethod>(&method)) {
        const auto e = eigh(build_bethe(g, bh->alpha));
        Index negatives = 0;
        while (negatives < e.size() && e.values[negatives] < 0) ++negatives;
        if (negatives < k - 1)
            throw NoClusterSignalError("Bethe Hessian has " + std::to_string(negatives) +
                                       " negative eigenvalues, fewer than k-1 = " + std::to_string(k - 1));
        emb.vectors = e.bottom(k - 1);
        emb.values = e.values.head(k - 1);
        emb.k_prime = k - 1;
    }
    return emb;
}

/// k-means on the rows of an embedding.
inline KmeansResult cluster_embedding(const Matrix& vectors, Index k, const KmeansOptions& opts, bool row_normalize = false) {
    Matrix pts = vectors;
    if (row_normalize) {
        for (Index i = 0; i < pts.rows(); ++i) {
            const double nr = pts.row(i).norm();
            if (nr > 0) pts.row(i) /= nr;
        }
    }
    return kmeans(pts, k, opts);
}

struct ClusterResult {
    Labels labels;
    Embedding embedding;
    double inertia = 0.0;
};

/// Eigenvectors per the method's rule, then k-means on their rows.
inline ClusterResult spectral_cluster(const SignedGraph& g, const MethodSpec& method, Index k,
                                      const SpectralOptions& opts = {}) {
    ClusterResult r;
    r.embedding = spectral_embedding(g, method, k, opts);
    auto km = cluster_embedding(r.embedding.vectors, k, opts.kmeans, opts.row_normalize);
    r.labels = std::move(km.labels);
    r.inertia = km.inertia;
    return r;
}

} // namespace spm
