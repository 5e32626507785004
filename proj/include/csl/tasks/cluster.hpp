#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "csl/error.hpp"
#include "csl/numerics/linalg.hpp"
#include "csl/numerics/matrix.hpp"
#include "csl/numerics/rng.hpp"
#include "csl/projection.hpp"

namespace csl {

struct OmpParams {
    std::size_t k_max = 5;
    double residual_tol = 1e-6;
};

/**
 * Self-expressive coefficients by orthogonal matching pursuit.
 *
 * Points are the rows of `points` (M x N) and are normalized internally.
 * For point j the dictionary is every other normalized point; each step
 * adds the atom with the largest |<atom, residual>|, refits by least squares
 * over the support, and stops at k_max atoms, at residual_tol * ||x_j||, or
 * when no remaining atom correlates with the residual. Row j of the result
 * expresses x_j in terms of the *unnormalized* points: x_j ~ sum_i C(j, i) x_i.
 *
 * `residual_trace`, when given, receives each point's residual norms (of
 * the normalized point), starting with 1.
 */
inline Matrix ssc_omp(const Matrix& points, const OmpParams& params,
                      std::vector<std::vector<double>>* residual_trace = nullptr) {
    const std::size_t m = points.rows();
    const std::size_t n = points.cols();
    require(m >= 2, ErrorCode::InvalidArgument, "ssc_omp needs at least two points");
    require(params.k_max >= 1, ErrorCode::InvalidArgument, "k_max must be >= 1");
    require(params.residual_tol >= 0.0, ErrorCode::InvalidArgument, "residual_tol must be >= 0");

    Matrix unit(m, n);
    Vector norms(m);
    for (std::size_t i = 0; i < m; ++i) {
        norms[i] = norm2(points.row(i));
        require(norms[i] > 0.0, ErrorCode::DegenerateAtom, "point " + std::to_string(i) + " has zero norm");
        for (std::size_t c = 0; c < n; ++c) unit(i, c) = points(i, c) / norms[i];
    }
    if (residual_trace) residual_trace->assign(m, {});

    Matrix coef(m, m);
    const std::size_t k_max = std::min(params.k_max, std::min(m - 1, n));
    std::vector<Vector> q;        // orthonormal basis of the selected atoms
    std::vector<std::size_t> support;
    Matrix r_factor(k_max, k_max);  // atoms = Q R
    Vector correlations(m);
    std::vector<char> used(m);
    for (std::size_t j = 0; j < m; ++j) {
        auto target = unit.row(j);
        Vector residual(target.begin(), target.end());
        Vector qty;  // Q^T target
        q.clear();
        support.clear();
        std::fill(used.begin(), used.end(), 0);
        used[j] = 1;
        double rnorm = 1.0;
        if (residual_trace) (*residual_trace)[j].push_back(rnorm);

        while (support.size() < k_max && rnorm > params.residual_tol) {
            std::size_t best = m;
            double best_abs = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (used[i]) continue;
                const double c = std::abs(dot(unit.row(i), residual));
                if (c > best_abs) {
                    best_abs = c;
                    best = i;
                }
            }
            if (best == m || best_abs <= 1e-12) break;

            const std::size_t s = support.size();
            Vector atom(unit.row(best).begin(), unit.row(best).end());
            for (std::size_t k = 0; k < s; ++k) r_factor(k, s) = 0.0;
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t k = 0; k < s; ++k) {
                    const double h = dot(q[k], atom);
                    r_factor(k, s) += h;
                    for (std::size_t c = 0; c < n; ++c) atom[c] -= h * q[k][c];
                }
            const double rho = norm2(atom);
            used[best] = 1;
            if (rho <= 1e-10) continue;  // numerically inside the current span
            for (double& a : atom) a /= rho;
            r_factor(s, s) = rho;
            q.push_back(std::move(atom));
            support.push_back(best);
            qty.push_back(dot(q.back(), target));
            for (std::size_t c = 0; c < n; ++c) residual[c] -= qty.back() * q.back()[c];
            rnorm = norm2(residual);
            if (residual_trace) (*residual_trace)[j].push_back(rnorm);
        }

        // Back-substitute R beta = Q^T target, then rescale to the raw points.
        const std::size_t s = support.size();
        Vector beta(s);
        for (std::size_t k = s; k-- > 0;) {
            double v = qty[k];
            for (std::size_t l = k + 1; l < s; ++l) v -= r_factor(k, l) * beta[l];
            beta[k] = v / r_factor(k, k);
        }
        for (std::size_t k = 0; k < s; ++k) coef(j, support[k]) = beta[k] * norms[j] / norms[support[k]];
    }
    return coef;
}

struct KMeansResult {
    std::vector<int> labels;
    double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding; best inertia over `restarts`.
inline KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed, std::size_t restarts = 10,
                           std::size_t max_iter = 100) {
    const std::size_t m = x.rows();
    const std::size_t dim = x.cols();
    require(k >= 1 && k <= m, ErrorCode::BadClusterCount, "k must be in [1, M]");
    auto sqdist = [&](std::size_t i, const Vector& c) {
        double s = 0.0;
        for (std::size_t t = 0; t < dim; ++t) {
            const double diff = x(i, t) - c[t];
            s += diff * diff;
        }
        return s;
    };

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t run = 0; run < restarts; ++run) {
        Rng rng(derive_seed(seed, run));
        std::vector<Vector> centers;
        auto first = x.row(static_cast<std::size_t>(rng.uniform_index(m)));
        centers.emplace_back(first.begin(), first.end());
        Vector d2(m);
        for (std::size_t i = 0; i < m; ++i) d2[i] = sqdist(i, centers[0]);
        while (centers.size() < k) {
            const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
            std::size_t pick = 0;
            if (total > 0.0) {
                double r = rng.uniform() * total;
                pick = m - 1;
                for (std::size_t i = 0; i < m; ++i) {
                    r -= d2[i];
                    if (r < 0.0 && d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
                while (d2[pick] <= 0.0 && pick > 0) --pick;
            } else {
                pick = static_cast<std::size_t>(rng.uniform_index(m));
            }
            auto row = x.row(pick);
            centers.emplace_back(row.begin(), row.end());
            for (std::size_t i = 0; i < m; ++i) d2[i] = std::min(d2[i], sqdist(i, centers.back()));
        }

        std::vector<int> labels(m, -1);
        double inertia = 0.0;
        for (std::size_t it = 0; it < max_iter; ++it) {
            bool changed = false;
            inertia = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                int arg = 0;
                double bd = sqdist(i, centers[0]);
                for (std::size_t c = 1; c < k; ++c) {
                    const double dc = sqdist(i, centers[c]);
                    if (dc < bd) {
                        bd = dc;
                        arg = static_cast<int>(c);
                    }
                }
                inertia += bd;
                if (labels[i] != arg) {
                    labels[i] = arg;
                    changed = true;
                }
            }
            if (!changed) break;
            std::vector<Vector> sums(k, Vector(dim, 0.0));
            std::vector<std::size_t> counts(k, 0);
            for (std::size_t i = 0; i < m; ++i) {
                ++counts[labels[i]];
                for (std::size_t t = 0; t < dim; ++t) sums[labels[i]][t] += x(i, t);
            }
            for (std::size_t c = 0; c < k; ++c)
                if (counts[c] > 0)
                    for (std::size_t t = 0; t < dim; ++t) centers[c][t] = sums[c][t] / static_cast<double>(counts[c]);
        }
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
        }
    }
    return best;
}

/**
 * Normalized spectral clustering: eigenvectors of the L smallest eigenvalues
 * of I - Deg^{-1/2} W Deg^{-1/2}, rows normalized, then k-means.
 * Zero-degree vertices get degree 1e-12.
 */
inline std::vector<int> spectral_cluster(const Matrix& w, std::size_t clusters, std::uint64_t seed) {
    const std::size_t m = w.rows();
    require(w.rows() == w.cols(), ErrorCode::BadDims, "affinity must be square");
    require(clusters >= 1 && clusters <= m, ErrorCode::BadClusterCount,
            "cluster count " + std::to_string(clusters) + " outside [1, " + std::to_string(m) + "]");
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            require(w(i, j) >= 0.0, ErrorCode::InvalidArgument, "affinity entries must be nonnegative");

    Vector inv_sqrt_deg(m);
    for (std::size_t i = 0; i < m; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < m; ++j) deg += w(i, j);
        if (deg <= 0.0) deg = 1e-12;
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    Matrix lap(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            lap(i, j) = (i == j ? 1.0 : 0.0) - inv_sqrt_deg[i] * w(i, j) * inv_sqrt_deg[j];
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) lap(i, j) = lap(j, i) = 0.5 * (lap(i, j) + lap(j, i));

    const EigResult eig = sym_eig(lap);
    Matrix embed(m, clusters);
    for (std::size_t c = 0; c < clusters; ++c)
        for (std::size_t i = 0; i < m; ++i) embed(i, c) = eig.eigenvectors(i, m - 1 - c);
    for (std::size_t i = 0; i < m; ++i) {
        const double r = norm2(embed.row(i));
        if (r > 0.0)
            for (double& v : embed.row(i)) v /= r;
    }
    return kmeans(embed, clusters, seed).labels;
}

struct ClusteringErrorResult {
    double rate = 0.0;
    bool approximate = false;  // greedy matching was used (more than 8 labels)
};

/// Fraction of points misclassified under the best one-to-one relabeling.
inline ClusteringErrorResult clustering_error(const std::vector<int>& predicted, const std::vector<int>& truth) {
    require(predicted.size() == truth.size(), ErrorCode::LengthMismatch, "label vectors differ in length");
    if (predicted.empty()) return {};
    std::map<int, std::size_t> pmap, tmap;
    for (int l : predicted) pmap.emplace(l, pmap.size());
    for (int l : truth) tmap.emplace(l, tmap.size());
    const std::size_t k = std::max(pmap.size(), tmap.size());
    std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < predicted.size(); ++i) ++counts[pmap[predicted[i]]][tmap[truth[i]]];

    std::size_t best_match = 0;
    bool approximate = false;
    if (k <= 8) {
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        do {
            std::size_t matched = 0;
            for (std::size_t p = 0; p < k; ++p) matched += counts[p][perm[p]];
            best_match = std::max(best_match, matched);
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        approximate = true;
        std::vector<char> prow(k, 0), tcol(k, 0);
        for (std::size_t step = 0; step < k; ++step) {
            std::size_t bp = 0, bt = 0, bc = 0;
            bool found = false;
            for (std::size_t p = 0; p < k; ++p)
                for (std::size_t t = 0; t < k; ++t)
                    if (!prow[p] && !tcol[t] && (!found || counts[p][t] > bc)) {
                        bp = p, bt = t, bc = counts[p][t];
                        found = true;
                    }
            prow[bp] = tcol[bt] = 1;
            best_match += bc;
        }
    }
    return {1.0 - static_cast<double>(best_match) / static_cast<double>(predicted.size()), approximate};
}

struct PhaseTiming {
    double project_ms = 0.0;
    double coefficients_ms = 0.0;
    double spectral_ms = 0.0;
};

struct ClusteringResult {
    std::vector<int> labels;
    Matrix coefficients;
    Matrix affinity;
    std::optional<ClusteringErrorResult> error;
    PhaseTiming timing;
};

/// [project ->] SSC-OMP -> W = |C| + |C|^T -> spectral clustering [-> error vs truth].
inline ClusteringResult cluster(const Matrix& points, std::size_t clusters, const JlProjector* projector,
                                const OmpParams& omp, std::uint64_t seed,
                                const std::vector<int>* truth = nullptr) {
    using Clock = std::chrono::steady_clock;
    auto ms_since = [](Clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    };
    if (truth) require(truth->size() == points.rows(), ErrorCode::LengthMismatch, "one true label per point");
    ClusteringResult out;
    auto t0 = Clock::now();
    const Matrix data = projector ? projector->apply_to_rows(points) : points;
    out.timing.project_ms = projector ? ms_since(t0) : 0.0;

    t0 = Clock::now();
    out.coefficients = ssc_omp(data, omp);
    out.timing.coefficients_ms = ms_since(t0);

    t0 = Clock::now();
    const std::size_t m = points.rows();
    out.affinity = Matrix(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out.affinity(i, j) = std::abs(out.coefficients(i, j)) + std::abs(out.coefficients(j, i));
    out.labels = spectral_cluster(out.affinity, clusters, seed);
    out.timing.spectral_ms = ms_since(t0);

    if (truth) out.error = clustering_error(out.labels, *truth);
    return out;
}

}  // namespace csl
