#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "hthmix/em.hpp"
#include "hthmix/errors.hpp"

namespace hth {

namespace {

constexpr int kMaxLloyd = 300;
constexpr int kMaxReseeds = 10;

std::vector<Eigen::Index> distinct_rows(Eigen::Index n, int k, std::mt19937_64& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

KmeansResult lloyd(const Eigen::MatrixXd& data, int G, std::mt19937_64& rng) {
    const Eigen::Index n = data.rows(), p = data.cols();
    KmeansResult res;
    res.centers.resize(G, p);
    const auto seeds = distinct_rows(n, G, rng);
    for (int g = 0; g < G; ++g) res.centers.row(g) = data.row(seeds[static_cast<std::size_t>(g)]);
    res.labels.assign(static_cast<std::size_t>(n), -1);
    int reseeds = 0;
    std::uniform_int_distribution<Eigen::Index> any_row(0, n - 1);
    for (int it = 0; it < kMaxLloyd; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int g = 0; g < G; ++g) {
                const double dist = (data.row(i) - res.centers.row(g)).squaredNorm();
                if (dist < best_d) {
                    best_d = dist;
                    best = g;
                }
            }
            if (res.labels[static_cast<std::size_t>(i)] != best) {
                res.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(G, p);
        std::vector<int> counts(static_cast<std::size_t>(G), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int g = res.labels[static_cast<std::size_t>(i)];
            sums.row(g) += data.row(i);
            ++counts[static_cast<std::size_t>(g)];
        }
        bool empty = false;
        for (int g = 0; g < G; ++g) {
            if (counts[static_cast<std::size_t>(g)] == 0) {
                if (++reseeds > kMaxReseeds) throw NumericalError("kmeans: empty cluster persisted after re-seeding");
                res.centers.row(g) = data.row(any_row(rng));
                empty = true;
            } else {
                res.centers.row(g) = sums.row(g) / counts[static_cast<std::size_t>(g)];
            }
        }
        if (!changed && !empty) break;
    }
    res.within_ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        res.within_ss += (data.row(i) - res.centers.row(res.labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return res;
}

}  // namespace

KmeansResult kmeans(const Eigen::MatrixXd& data, int G, std::uint64_t seed, int restarts) {
    if (G < 1 || data.rows() < G) throw std::invalid_argument("kmeans: need at least G observations");
    std::mt19937_64 rng(seed);
    KmeansResult best;
    best.within_ss = std::numeric_limits<double>::infinity();
    std::string last_error;
    for (int r = 0; r < restarts; ++r) {
        try {
            KmeansResult cur = lloyd(data, G, rng);
            if (cur.within_ss < best.within_ss) best = std::move(cur);
        } catch (const NumericalError& e) {
            last_error = e.what();
        }
    }
    if (best.labels.empty()) throw NumericalError("kmeans: every restart failed: " + last_error);
    return best;
}

MixtureModel kmeans_init(const Eigen::MatrixXd& data, int G, int q, std::uint64_t seed) {
    const Eigen::Index n = data.rows(), p = data.cols();
    if (G < 1 || q < 1 || q > p) throw std::invalid_argument("kmeans_init: require G >= 1 and 1 <= q <= p");
    if (n <= static_cast<Eigen::Index>(G) * (p + 1)) throw std::invalid_argument("kmeans_init: require n > G (p + 1)");
    if (!data.allFinite()) throw std::invalid_argument("kmeans_init: data contain non-finite values");

    const KmeansResult km = kmeans(data, G, seed);
    std::mt19937_64 rng(seed ^ 0xa5a5a5a5a5a5a5a5ULL);
    std::normal_distribution<double> normal;

    MixtureModel model;
    model.p = static_cast<int>(p);
    model.q = q;
    model.G = G;
    model.weights.resize(G);
    for (int g = 0; g < G; ++g) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (km.labels[static_cast<std::size_t>(i)] == g) rows.push_back(i);
        }
        const auto ng = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd block(ng, p);
        for (Eigen::Index k = 0; k < ng; ++k) block.row(k) = data.row(rows[static_cast<std::size_t>(k)]);
        HthParams comp;
        comp.mu = block.colwise().mean().transpose();
        const Eigen::MatrixXd centered = block.rowwise() - comp.mu.transpose();
        comp.sigma = centered.transpose() * centered / static_cast<double>(ng);
        Eigen::LLT<Eigen::MatrixXd> llt(comp.sigma);
        const double tr = comp.sigma.trace();
        if (llt.info() != Eigen::Success || !(tr > 0.0) ||
            comp.sigma.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() < 1e-10 * tr) {
            throw NumericalError("kmeans_init: degenerate cluster covariance");
        }
        comp.lambda_mat.resize(p, q);
        for (Eigen::Index j = 0; j < q; ++j) {
            for (Eigen::Index i = 0; i < p; ++i) comp.lambda_mat(i, j) = normal(rng);
        }
        comp.index = 1.0;
        comp.omega = 1.0;
        model.weights(g) = static_cast<double>(ng) / static_cast<double>(n);
        model.components.push_back(std::move(comp));
    }
    model.canonicalize();
    return model;
}

}  // namespace hth
