#include "ndno/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace ndno::ot {

Mat pairwise_cost(const PointMat& a, const PointMat& b) {
    if (a.rows() == 0 || b.rows() == 0)
        throw ValidationError("pairwise_cost: empty point set");
    Mat c(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        c.row(i) = (b.rowwise() - a.row(i)).rowwise().squaredNorm().transpose();
    return c;
}

namespace {

// rowwise log-sum-exp of m + row broadcast of add (length cols)
Vec lse_rows(const Mat& m, const Vec& add) {
    Vec out(m.rows());
    Eigen::ArrayXd row(m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        row = m.row(i).transpose().array() + add.array();
        const double mx = row.maxCoeff();
        out[i] = mx + std::log((row - mx).exp().sum());
    }
    return out;
}

}  // namespace

TransportResult sinkhorn(const Mat& cost, const SinkhornOptions& opts) {
    const Eigen::Index n = cost.rows(), m = cost.cols();
    if (n == 0 || m == 0) throw ValidationError("sinkhorn: empty cost matrix");
    if (!cost.allFinite()) throw NumericError("sinkhorn: non-finite cost matrix");

    const double mean_cost = cost.mean();
    double eps_target =
        opts.epsilon > 0.0 ? opts.epsilon : opts.eps_scale * std::max(mean_cost, 1e-300);
    if (!(eps_target > 0.0)) eps_target = 1e-12;

    const double log_mu = -std::log(static_cast<double>(n));
    const double log_nu = -std::log(static_cast<double>(m));
    const double mu = std::exp(log_mu);
    const Mat cost_t = cost.transpose();

    // Log-domain iterations with epsilon scaling: anneal from mean-cost scale
    // down to the target, warm-starting the potentials at each level. Plain
    // iterations stall for eps << mean cost.
    Vec f = Vec::Zero(n), g = Vec::Zero(m);
    double eps = std::max(eps_target, mean_cost);
    int iters = 0;
    bool converged = false;
    while (iters < opts.max_iters) {
        const bool last_level = eps <= eps_target * (1.0 + 1e-12);
        const double level_tol = last_level ? opts.tol : std::max(opts.tol, 1e-3);
        const int level_cap = last_level ? opts.max_iters : std::min(opts.max_iters, 60);
        const Mat neg_c_eps = (-cost / eps).eval();
        const Mat neg_c_eps_t = (-cost_t / eps).eval();

        int level_iters = 0;
        for (; iters < opts.max_iters && level_iters < level_cap; ++iters, ++level_iters) {
            // row sums with the current potentials come free from the lse pass
            // the f update needs anyway: row_i = exp(f_i/eps + log_mu + lse_i)
            Vec lse_g = lse_rows(neg_c_eps, g / eps);
            lse_g.array() += log_nu;
            double viol = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                viol += std::abs(std::exp(f[i] / eps + log_mu + lse_g[i]) - mu);
            if (!std::isfinite(viol))
                throw NumericError("sinkhorn: non-finite marginal violation");
            if (viol < level_tol) break;
            // f update makes the row marginals exact, then g the columns
            f = -eps * lse_g;
            g = -eps * (lse_rows(neg_c_eps_t, f / eps).array() + log_mu).matrix();
        }
        if (last_level) {
            converged = level_iters < level_cap && iters < opts.max_iters;
            break;
        }
        eps = std::max(eps_target, 0.5 * eps);
    }
    // the plan below is reconstructed at the eps the potentials correspond to;
    // this only differs from the target when the budget ran out mid-anneal

    TransportResult r;
    r.epsilon = eps;
    r.iters_used = iters;
    r.converged = converged;
    r.plan.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            r.plan(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / eps + log_mu + log_nu);
    if (!r.plan.allFinite()) throw NumericError("sinkhorn: non-finite transport plan");
    r.cost_value = (r.plan.array() * cost.array()).sum();
    return r;
}

TransportResult sinkhorn_distance(const PointMat& a, const PointMat& b,
                                  const SinkhornOptions& opts) {
    return sinkhorn(pairwise_cost(a, b), opts);
}

double assignment_cost(const Mat& cost) {
    // Jonker-Volgenant style shortest augmenting path, O(n^3).
    const Eigen::Index n = cost.rows();
    if (cost.cols() != n) throw ValidationError("assignment_cost: matrix must be square");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<Eigen::Index> match(static_cast<std::size_t>(n) + 1, n);  // col -> row
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        std::vector<Eigen::Index> way(static_cast<std::size_t>(n) + 1, n);
        Eigen::Index j0 = n;  // virtual column holding row i
        match[static_cast<std::size_t>(n)] = i;
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const Eigen::Index i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            Eigen::Index j1 = n;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (Eigen::Index j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != n);
        // augment along the alternating path
        while (j0 != n) {
            const Eigen::Index j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        }
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) total += cost(match[static_cast<std::size_t>(j)], j);
    return total;
}

double exact_ot_bruteforce(const PointMat& a, const PointMat& b) {
    if (a.rows() != b.rows())
        throw ValidationError("exact_ot_bruteforce: clouds must have equal size");
    if (a.rows() > 10) throw ValidationError("exact_ot_bruteforce: size must be <= 10");
    const Mat c = pairwise_cost(a, b);
    return assignment_cost(c) / static_cast<double>(a.rows());
}

double exact_ot_enumeration(const PointMat& a, const PointMat& b) {
    if (a.rows() != b.rows())
        throw ValidationError("exact_ot_enumeration: clouds must have equal size");
    if (a.rows() > 8) throw ValidationError("exact_ot_enumeration: size must be <= 8");
    const Mat c = pairwise_cost(a, b);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(a.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i) s += c(i, perm[static_cast<std::size_t>(i)]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(a.rows());
}

}  // namespace ndno::ot
