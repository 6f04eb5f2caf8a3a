#include "hthmix/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hthmix/errors.hpp"
#include "hthmix/trunc_moments.hpp"

namespace hth {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093453;
constexpr double kOmegaMin = 0.01;
constexpr double kOmegaMax = 200.0;
constexpr double kIndexMax = 50.0;
constexpr double kNegligibleWeight = 1e-10;
constexpr double kScreenNats = 60.0;

double log_sum_exp(const double* v, int n) {
    double mx = kNegInf;
    for (int k = 0; k < n; ++k) mx = std::max(mx, v[k]);
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += std::exp(v[k] - mx);
    return mx + std::log(s);
}

// ln of int_0^inf w^(nu-1) exp(-(psi w + chi / w) / 2) dw.
double log_gig_norm(double psi, double chi, double nu) {
    return std::numbers::ln2 + 0.5 * nu * std::log(chi / psi) + log_bessel_k(nu, std::sqrt(psi * chi));
}

// Components whose density bound 2^q h_p(x) lies far below the best exact
// mixture term get zero responsibility without evaluating the skew factor.
void fill_point(const Eigen::MatrixXd& data, Eigen::Index i, const std::vector<HthDerived>& comps,
                const Eigen::VectorXd& weights, double anneal_d, std::vector<PointExpectations>& slot,
                const QuadratureSpec& quad, const MvnSpec& mvn) {
    const Eigen::VectorXd x = data.row(i).transpose();
    const std::size_t G = comps.size();
    std::vector<double> bound(G);
    std::vector<std::size_t> order(G);
    for (std::size_t g = 0; g < G; ++g) {
        const HthDerived& c = comps[g];
        bound[g] = std::log(weights(static_cast<Eigen::Index>(g))) + static_cast<double>(c.q) * std::numbers::ln2 +
                   sym_hyperbolic_log_kernel(c.mahalanobis(x), c.log_det_omega, c.p, c.index, c.omega);
        order[g] = g;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t u, std::size_t v) { return bound[u] > bound[v]; });
    const double margin = kScreenNats / anneal_d;
    double best = kNegInf;
    for (std::size_t g : order) {
        auto& pe = slot[static_cast<std::size_t>(i) * G + g];
        if (bound[g] < best - margin) {
            const auto q = comps[g].q;
            pe = PointExpectations{kNegInf, 1.0, 1.0, 0.0, Eigen::VectorXd::Zero(q), Eigen::MatrixXd::Zero(q, q), false};
            continue;
        }
        pe = point_expectations(x, comps[g], quad, mvn);
        best = std::max(best, std::log(weights(static_cast<Eigen::Index>(g))) + pe.log_density);
    }
}

void finish_cache(const std::vector<PointExpectations>& slot, const MixtureModel& model, double anneal_d,
                  Eigen::Index n, EStepCache& cache) {
    const int G = model.G;
    cache.G = G;
    cache.z.resize(n, G);
    cache.a.resize(n, G);
    cache.b.resize(n, G);
    cache.c.resize(n, G);
    cache.log_density.resize(n, G);
    cache.d.resize(static_cast<std::size_t>(n * G));
    cache.E.resize(static_cast<std::size_t>(n * G));
    cache.loglik = 0.0;
    cache.degenerate = 0;
    std::vector<double> lp(static_cast<std::size_t>(G)), la(static_cast<std::size_t>(G));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int g = 0; g < G; ++g) {
            const auto& pe = slot[static_cast<std::size_t>(i * G + g)];
            cache.a(i, g) = pe.a;
            cache.b(i, g) = pe.b;
            cache.c(i, g) = pe.c;
            cache.log_density(i, g) = pe.log_density;
            cache.d[static_cast<std::size_t>(i * G + g)] = pe.d;
            cache.E[static_cast<std::size_t>(i * G + g)] = pe.E;
            lp[static_cast<std::size_t>(g)] = std::log(model.weights(g)) + pe.log_density;
            la[static_cast<std::size_t>(g)] = anneal_d * lp[static_cast<std::size_t>(g)];
        }
        const double total = log_sum_exp(lp.data(), G);
        const double norm = log_sum_exp(la.data(), G);
        if (!std::isfinite(total) || !std::isfinite(norm)) {
            std::ostringstream msg;
            msg << "e_step: responsibilities underflow for observation " << (i + 1);
            throw NumericalError(msg.str());
        }
        cache.loglik += total;
        for (int g = 0; g < G; ++g) {
            cache.z(i, g) = std::exp(la[static_cast<std::size_t>(g)] - norm);
            if (slot[static_cast<std::size_t>(i * G + g)].degenerate && cache.z(i, g) > kNegligibleWeight) {
                ++cache.degenerate;
            }
        }
    }
}

void check_estep_args(const Eigen::MatrixXd& data, const MixtureModel& model, double anneal_d) {
    model.validate();
    if (data.cols() != model.p) throw std::invalid_argument("e_step: data dimension does not match the model");
    if (!(anneal_d > 0.0) || anneal_d > 1.0) throw std::invalid_argument("e_step: anneal_d must lie in (0, 1]");
}

std::vector<HthDerived> derive_all(const MixtureModel& model) {
    std::vector<HthDerived> out;
    out.reserve(model.components.size());
    for (const auto& c : model.components) out.emplace_back(c);
    return out;
}

// t(omega, lambda) from the M-step; only terms depending on (omega, lambda).
double t_objective(double omega, double lambda, double abar, double bbar, double cbar) {
    return -log_bessel_k(lambda, omega) + (lambda - 1.0) * cbar - 0.5 * omega * (abar + bbar);
}

double t_domega(double omega, double lambda, double abar, double bbar) {
    return -dlog_bessel_k_darg(lambda, omega) - 0.5 * (abar + bbar);
}

double update_omega(double omega, double lambda, double abar, double bbar, double cbar) {
    const double g1 = t_domega(omega, lambda, abar, bbar);
    const double h = 1e-4 * omega;
    const double g2 = (t_domega(omega + h, lambda, abar, bbar) - t_domega(omega - h, lambda, abar, bbar)) / (2.0 * h);
    double cand = g2 < 0.0 ? omega - g1 / g2 : std::numeric_limits<double>::quiet_NaN();
    if (!(cand > kOmegaMin && cand < kOmegaMax)) {
        // Bisection on the derivative over the admissible range.
        double lo = kOmegaMin, hi = kOmegaMax;
        if (t_domega(lo, lambda, abar, bbar) <= 0.0) {
            cand = lo;
        } else if (t_domega(hi, lambda, abar, bbar) >= 0.0) {
            cand = hi;
        } else {
            for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (t_domega(mid, lambda, abar, bbar) > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cand = 0.5 * (lo + hi);
        }
    }
    const double base = t_objective(omega, lambda, abar, bbar, cbar);
    for (int k = 0; k < 40; ++k) {
        if (t_objective(cand, lambda, abar, bbar, cbar) >= base) return cand;
        cand = 0.5 * (cand + omega);
    }
    return omega;
}

double update_index(double omega, double lambda, double abar, double bbar, double cbar) {
    const double deriv = dlog_bessel_k_dorder(lambda, omega);
    double cand;
    if (std::abs(deriv) > 1e-8) {
        cand = cbar * lambda / deriv;
    } else {
        // Near lambda = 0 the fixed point stalls; take a Newton step instead.
        const double h = 1e-4;
        const double curv = (dlog_bessel_k_dorder(lambda + h, omega) - dlog_bessel_k_dorder(lambda - h, omega)) / (2.0 * h);
        cand = curv > 0.0 ? lambda + (cbar - deriv) / curv : lambda;
    }
    if (!std::isfinite(cand)) cand = lambda;
    cand = std::clamp(cand, -kIndexMax, kIndexMax);
    const double base = t_objective(omega, lambda, abar, bbar, cbar);
    for (int k = 0; k < 40; ++k) {
        if (t_objective(omega, cand, abar, bbar, cbar) >= base) return cand;
        cand = 0.5 * (cand + lambda);
    }
    return lambda;
}

}  // namespace

void MixtureModel::validate() const {
    if (G < 1 || static_cast<int>(components.size()) != G || weights.size() != G) {
        throw std::invalid_argument("MixtureModel: component count mismatch");
    }
    for (int g = 0; g < G; ++g) {
        if (!(weights(g) > 0.0)) throw std::invalid_argument("MixtureModel: weights must be positive");
        if (components[static_cast<std::size_t>(g)].p() != p || components[static_cast<std::size_t>(g)].q() != q) {
            throw std::invalid_argument("MixtureModel: component dimensions disagree with (p, q)");
        }
    }
    if (std::abs(weights.sum() - 1.0) > 1e-8) throw std::invalid_argument("MixtureModel: weights must sum to one");
}

void MixtureModel::canonicalize() {
    for (auto& c : components) c.canonicalize();
    std::vector<int> order(static_cast<std::size_t>(G));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (weights(a) != weights(b)) return weights(a) > weights(b);
        return components[static_cast<std::size_t>(a)].mu(0) < components[static_cast<std::size_t>(b)].mu(0);
    });
    std::vector<HthParams> sorted;
    Eigen::VectorXd w(G);
    for (int k = 0; k < G; ++k) {
        sorted.push_back(components[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
        w(k) = weights(order[static_cast<std::size_t>(k)]);
    }
    components = std::move(sorted);
    weights = w;
}

std::vector<double> FitConfig::default_schedule() {
    std::vector<double> s(20);
    for (int k = 0; k < 20; ++k) s[static_cast<std::size_t>(k)] = 0.05 + 0.95 * k / 19.0;
    s.back() = 1.0;
    return s;
}

void FitConfig::validate() const {
    if (max_iter < 1) throw std::invalid_argument("FitConfig: max_iter must be >= 1");
    if (!(loglik_rel_tol > 0.0)) throw std::invalid_argument("FitConfig: loglik_rel_tol must be positive");
    if (n_starts < 1) throw std::invalid_argument("FitConfig: n_starts must be >= 1");
    for (std::size_t k = 0; k < anneal_schedule.size(); ++k) {
        const double v = anneal_schedule[k];
        if (!(v > 0.0) || v > 1.0) throw std::invalid_argument("FitConfig: schedule values must lie in (0, 1]");
        if (k > 0 && v < anneal_schedule[k - 1]) throw std::invalid_argument("FitConfig: schedule must be nondecreasing");
    }
    if (!anneal_schedule.empty() && anneal_schedule.back() != 1.0) {
        throw std::invalid_argument("FitConfig: schedule must end at 1");
    }
    quad.validate();
    mvn.validate();
}

PointExpectations point_expectations(const Eigen::VectorXd& x, const HthDerived& comp, const QuadratureSpec& quad,
                                     const MvnSpec& mvn) {
    const double delta = comp.mahalanobis(x);
    const Eigen::VectorXd r = comp.skew_arg(x);
    const Eigen::Index q = comp.q;
    const double nu = comp.index - 0.5 * static_cast<double>(comp.p);
    const double psi = comp.omega;
    const double chi = comp.omega + delta;

    double worst = 0.0;
    for (Eigen::Index k = 0; k < q; ++k) worst = std::max(worst, -r(k) / std::sqrt(comp.delta(k, k)));
    const KernelAnchor anchor = gig_anchor(psi, chi + worst * worst, nu);
    Eigen::VectorXd arg(q);
    auto kernel = [&](double w, double* mult) {
        const double lw = std::log(w);
        mult[0] = 1.0;
        mult[1] = w;
        mult[2] = 1.0 / w;
        mult[3] = lw;
        const double s = 1.0 / std::sqrt(w);
        for (Eigen::Index k = 0; k < q; ++k) arg(k) = r(k) * s;
        return (nu - 1.0) * lw - 0.5 * (psi * w + chi / w) + log_mvn_cdf(arg, comp.delta, mvn);
    };
    const KernelIntegral ki = integrate_kernel(kernel, 4, anchor.mode, anchor.width, quad);

    PointExpectations out;
    const double v0 = ki.value[0];
    const double log_i0 = ki.log_of(0);
    out.log_density = static_cast<double>(q) * std::numbers::ln2 - 0.5 * static_cast<double>(comp.p) * kLogTwoPi -
                      0.5 * comp.log_det_omega - std::numbers::ln2 - comp.log_bessel_index + log_i0;
    out.a = ki.value[1] / v0;
    out.b = ki.value[2] / v0;
    out.c = ki.value[3] / v0;

    // U | x is truncated hyperbolic; its orthant masses at the two indices
    // needed below come straight from the integrals above.
    const double scale = std::sqrt(1.0 + delta / comp.omega);
    ThParams th;
    th.mu = r;
    th.sigma = scale * comp.delta;
    th.index = nu - 1.0;
    th.omega = std::sqrt(psi * chi);
    th.lower = Eigen::VectorXd::Zero(q);
    const OrthantPair known{ki.log_of(2) - log_gig_norm(psi, chi, nu - 1.0), log_i0 - log_gig_norm(psi, chi, nu)};
    out.degenerate = false;
    try {
        const ThMoments m = th_moments(th, quad, mvn, known);
        out.d = out.b * m.mean;
        out.E = out.b * m.second;
    } catch (const DegenerateTruncation&) {
        out.degenerate = true;
        out.d = Eigen::VectorXd::Zero(q);
        out.E = Eigen::MatrixXd::Zero(q, q);
    }
    return out;
}

EStepCache e_step_serial(const Eigen::MatrixXd& data, const MixtureModel& model, double anneal_d,
                         const QuadratureSpec& quad, const MvnSpec& mvn) {
    check_estep_args(data, model, anneal_d);
    const auto comps = derive_all(model);
    const Eigen::Index n = data.rows();
    EStepCache cache;
    std::vector<PointExpectations> slot(static_cast<std::size_t>(n * model.G));
    for (Eigen::Index i = 0; i < n; ++i) fill_point(data, i, comps, model.weights, anneal_d, slot, quad, mvn);
    finish_cache(slot, model, anneal_d, n, cache);
    return cache;
}

EStepCache e_step(const Eigen::MatrixXd& data, const MixtureModel& model, double anneal_d,
                  const QuadratureSpec& quad, const MvnSpec& mvn, int threads) {
#ifdef _OPENMP
    if (threads == 1) return e_step_serial(data, model, anneal_d, quad, mvn);
    check_estep_args(data, model, anneal_d);
    const auto comps = derive_all(model);
    const Eigen::Index n = data.rows();
    EStepCache cache;
    std::vector<PointExpectations> slot(static_cast<std::size_t>(n * model.G));
    std::string error;
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(nthreads)
    for (Eigen::Index i = 0; i < n; ++i) {
        try {
            fill_point(data, i, comps, model.weights, anneal_d, slot, quad, mvn);
        } catch (const std::exception& e) {
#pragma omp critical(hth_estep_error)
            if (error.empty()) error = e.what();
        }
    }
    if (!error.empty()) throw NumericalError("e_step: " + error);
    // Reductions run serially in observation order, so the result does not
    // depend on the thread count.
    finish_cache(slot, model, anneal_d, n, cache);
    return cache;
#else
    (void)threads;
    return e_step_serial(data, model, anneal_d, quad, mvn);
#endif
}

MixtureModel m_step(const Eigen::MatrixXd& data, const EStepCache& cache, const MixtureModel& model,
                    std::vector<std::string>* warnings) {
    model.validate();
    const Eigen::Index n = data.rows(), p = data.cols();
    const int G = model.G;
    const int q = model.q;
    MixtureModel next = model;
    for (int g = 0; g < G; ++g) {
        HthParams& comp = next.components[static_cast<std::size_t>(g)];
        const Eigen::VectorXd zg = cache.z.col(g);
        const double ng = zg.sum();
        if (!(ng > static_cast<double>(p))) {
            throw NumericalError("m_step: component " + std::to_string(g + 1) + " has collapsed");
        }
        next.weights(g) = ng / static_cast<double>(n);

        double szb = 0.0;
        Eigen::VectorXd szbx = Eigen::VectorXd::Zero(p);
        Eigen::VectorXd szd = Eigen::VectorXd::Zero(q);
        Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(q, q);
        double abar = 0.0, bbar = 0.0, cbar = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double z = zg(i);
            const double b = cache.b(i, g);
            szb += z * b;
            szbx += z * b * data.row(i).transpose();
            szd += z * cache.d_at(i, g);
            m1 += z * cache.E_at(i, g);
            abar += z * cache.a(i, g);
            bbar += z * b;
            cbar += z * cache.c(i, g);
        }
        abar /= ng;
        bbar /= ng;
        cbar /= ng;

        comp.mu = (szbx - comp.lambda_mat * szd) / szb;

        Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(q, p);
        for (Eigen::Index i = 0; i < n; ++i) {
            m2 += zg(i) * cache.d_at(i, g) * (data.row(i) - comp.mu.transpose());
        }
        m1 = 0.5 * (m1 + m1.transpose());
        Eigen::LLT<Eigen::MatrixXd> llt(m1);
        if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
            const std::string w = "m_step: singular M1 for component " + std::to_string(g + 1) + "; ridge added";
            if (warnings && std::find(warnings->begin(), warnings->end(), w) == warnings->end()) warnings->push_back(w);
            llt.compute(m1 + 1e-8 * Eigen::MatrixXd::Identity(q, q));
        }
        comp.lambda_mat = llt.solve(m2).transpose();

        comp.omega = update_omega(comp.omega, comp.index, abar, bbar, cbar);
        comp.index = update_index(comp.omega, comp.index, abar, bbar, cbar);

        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd dev = data.row(i).transpose() - comp.mu;
            s += zg(i) * cache.b(i, g) * dev * dev.transpose();
        }
        const Eigen::MatrixXd& lam = comp.lambda_mat;
        s += lam * m1 * lam.transpose() - m2.transpose() * lam.transpose() - lam * m2;
        s /= ng;
        comp.sigma = 0.5 * (s + s.transpose());
        Eigen::LLT<Eigen::MatrixXd> sl(comp.sigma);
        if (sl.info() != Eigen::Success || sl.rcond() < 1e-12) {
            throw NumericalError("m_step: scale matrix of component " + std::to_string(g + 1) + " is degenerate");
        }
    }
    next.weights /= next.weights.sum();
    next.canonicalize();
    return next;
}

double observed_loglik(const Eigen::MatrixXd& data, const MixtureModel& model, const QuadratureSpec& quad,
                       const MvnSpec& mvn) {
    model.validate();
    if (data.cols() != model.p) throw std::invalid_argument("observed_loglik: dimension mismatch");
    const auto comps = derive_all(model);
    std::vector<double> lp(static_cast<std::size_t>(model.G));
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const Eigen::VectorXd x = data.row(i).transpose();
        for (int g = 0; g < model.G; ++g) {
            lp[static_cast<std::size_t>(g)] =
                std::log(model.weights(g)) + hth_logpdf(x, comps[static_cast<std::size_t>(g)], quad, mvn);
        }
        total += log_sum_exp(lp.data(), model.G);
    }
    return total;
}

int count_free_params(int G, int p, int q) {
    if (G < 1 || p < 1 || q < 1 || q > p) throw std::invalid_argument("count_free_params: invalid dimensions");
    return (G - 1) + G * (p + p * (p + 1) / 2 + p * q + 2);
}

double bic(double loglik, int rho, long n) {
    if (n < 1) throw std::invalid_argument("bic: n must be >= 1");
    return 2.0 * loglik - static_cast<double>(rho) * std::log(static_cast<double>(n));
}

FitResult ecm_run(const Eigen::MatrixXd& data, MixtureModel model, const FitConfig& config) {
    config.validate();
    FitResult res;
    const auto& sched = config.anneal_schedule;
    double prev = std::numeric_limits<double>::quiet_NaN();
    bool prev_full = false;
    EStepCache cache;
    int degenerate_iters = 0, degenerate_max = 0, degenerate_first = 0;
    for (int it = 0; it < config.max_iter; ++it) {
        const double d = it < static_cast<int>(sched.size()) ? sched[static_cast<std::size_t>(it)] : 1.0;
        cache = e_step(data, model, d, config.quad, config.mvn, config.threads);
        res.loglik_trace.push_back(cache.loglik);
        res.anneal_trace.push_back(d);
        res.n_iter = it + 1;
        if (cache.degenerate > 0) {
            if (degenerate_iters++ == 0) degenerate_first = it + 1;
            degenerate_max = std::max(degenerate_max, cache.degenerate);
        }
        const bool full = d == 1.0;
        if (full && prev_full) {
            const double change = std::abs(cache.loglik - prev) / (1.0 + std::abs(cache.loglik));
            if (change < config.loglik_rel_tol) {
                res.converged = true;
                break;
            }
        }
        prev = cache.loglik;
        prev_full = full;
        if (it + 1 == config.max_iter) break;
        model = m_step(data, cache, model, &res.warnings);
    }
    if (degenerate_iters > 0) {
        res.warnings.push_back("skew expectations fell back to zero in " + std::to_string(degenerate_iters) +
                               " iterations from iteration " + std::to_string(degenerate_first) + " (at most " +
                               std::to_string(degenerate_max) + " weighted observations)");
    }
    // Labels and likelihood belong to the final parameters.
    if (res.anneal_trace.back() != 1.0) {
        cache = e_step(data, model, 1.0, config.quad, config.mvn, config.threads);
    }
    res.model = model;
    res.loglik = cache.loglik;
    res.labels.resize(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        Eigen::Index best = 0;
        cache.z.row(i).maxCoeff(&best);
        res.labels[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
    }
    res.bic = bic(res.loglik, count_free_params(model.G, model.p, model.q), static_cast<long>(data.rows()));
    return res;
}

FitResult ecm_fit(const Eigen::MatrixXd& data, int G, int q, const FitConfig& config) {
    config.validate();
    if (G < 1 || q < 1 || q > data.cols()) throw std::invalid_argument("ecm_fit: require G >= 1 and 1 <= q <= p");
    FitResult best;
    bool have = false;
    std::vector<std::string> failures;
    for (int s = 0; s < config.n_starts; ++s) {
        const std::uint64_t seed = config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(s);
        try {
            FitResult r = ecm_run(data, kmeans_init(data, G, q, seed), config);
            r.start = s;
            if (!std::isfinite(r.loglik)) throw NumericalError("non-finite log-likelihood");
            if (!have || r.loglik > best.loglik) {
                best = std::move(r);
                have = true;
            }
        } catch (const std::exception& e) {
            failures.push_back("start " + std::to_string(s + 1) + ": " + e.what());
        }
    }
    if (!have) {
        std::string msg = "ecm_fit: all starts failed";
        for (const auto& f : failures) msg += "; " + f;
        throw NumericalError(msg);
    }
    for (const auto& f : failures) best.warnings.push_back(f);
    return best;
}

}  // namespace hth
