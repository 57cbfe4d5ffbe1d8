#include "gradgeom/theory.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "gradgeom/numerics.hpp"

namespace gradgeom {

Vec default_sic_u_grid() { return {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}; }

namespace {

void check_norm_sum(const std::vector<Vec>& vectors) {
    if (vectors.empty()) throw std::invalid_argument("sic_tail_check: needs at least one vector");
    const double n = static_cast<double>(vectors.size());
    double s = 0.0;
    for (const Vec& v : vectors) s += norm2_squared(v);
    if (s > n * (1.0 + 1e-12)) throw std::invalid_argument("sic_tail_check: sum of squared norms exceeds n");
}

TailCheckReport finish_report(Vec zs, int n, bool exhaustive, const Vec& u_grid) {
    TailCheckReport rep;
    rep.u_grid = u_grid;
    rep.n = n;
    rep.trials = static_cast<long>(zs.size());
    rep.exhaustive = exhaustive;

    const double count = static_cast<double>(zs.size());
    double mu = 0.0;
    for (double z : zs) mu += z;
    mu /= count;
    rep.mu_hat = mu;

    double var = 0.0;
    for (double z : zs) var += (z - mu) * (z - mu);
    var = count > 1 ? var / (count - 1.0) : 0.0;
    const double mu_se = exhaustive ? 0.0 : std::sqrt(var / count);
    rep.mu_ok = mu <= 1.0 + 1e-12 + 3.0 * mu_se;

    rep.tail_ok = true;
    for (double u : u_grid) {
        long hits = 0;
        for (double z : zs)
            if (std::fabs(z - mu) >= u) ++hits;
        const double freq = static_cast<double>(hits) / count;
        const double bound = 2.0 * std::exp(-0.5 * u * u);
        rep.empirical_tail.push_back(freq);
        rep.bound.push_back(bound);
        const double se = exhaustive ? 0.0 : std::sqrt(std::max(freq * (1.0 - freq), 0.0) / count);
        if (freq > bound + 3.0 * se) rep.tail_ok = false;
    }
    return rep;
}

}  // namespace

TailCheckReport sic_tail_check_exhaustive(const std::vector<Vec>& vectors, const Vec& u_grid) {
    check_norm_sum(vectors);
    const int n = static_cast<int>(vectors.size());
    if (n > 16) throw std::invalid_argument("sic_tail_check_exhaustive: n must be <= 16");
    const size_t p = vectors.front().size();
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

    // Gray-code walk: one sign flip per step keeps the running sum O(p).
    Vec s(p, 0.0);
    std::vector<int> eps(static_cast<size_t>(n), 1);
    for (const Vec& v : vectors) axpy(1.0, v, s);
    const long patterns = 1L << n;
    Vec zs(static_cast<size_t>(patterns));
    zs[0] = inv_sqrt_n * norm2(s);
    for (long m = 1; m < patterns; ++m) {
        const int flip = std::countr_zero(static_cast<unsigned long>(m));
        const double delta = -2.0 * eps[static_cast<size_t>(flip)];
        axpy(delta, vectors[static_cast<size_t>(flip)], s);
        eps[static_cast<size_t>(flip)] = -eps[static_cast<size_t>(flip)];
        zs[static_cast<size_t>(m)] = inv_sqrt_n * norm2(s);
    }
    return finish_report(std::move(zs), n, true, u_grid);
}

TailCheckReport sic_tail_check_mc(const std::vector<Vec>& vectors, long trials, RngStream& rng, const Vec& u_grid) {
    check_norm_sum(vectors);
    if (trials < 2) throw std::invalid_argument("sic_tail_check_mc: trials must be >= 2");
    const int n = static_cast<int>(vectors.size());
    const size_t p = vectors.front().size();
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    Vec zs(static_cast<size_t>(trials));
    Vec s(p);
    for (long t = 0; t < trials; ++t) {
        RngStream sub = rng.substream(static_cast<std::uint64_t>(t));
        s.assign(p, 0.0);
        for (const Vec& v : vectors) axpy(static_cast<double>(sub.rademacher()), v, s);
        zs[static_cast<size_t>(t)] = inv_sqrt_n * norm2(s);
    }
    return finish_report(std::move(zs), n, false, u_grid);
}

TailCheckReport sic_tail_check(const std::vector<Vec>& vectors, long mc_trials, RngStream& rng, const Vec& u_grid) {
    if (vectors.size() <= 16) return sic_tail_check_exhaustive(vectors, u_grid);
    return sic_tail_check_mc(vectors, mc_trials, rng, u_grid);
}

TailCheckReport sic_from_gradients(const GradientSetSpec& spec, const NetworkParams& theta_a,
                                   const NetworkParams& theta_b, long mc_trials, RngStream& rng) {
    spec.validate();
    if (!spec.ball.contains(theta_a) || !spec.ball.contains(theta_b))
        throw std::invalid_argument("sic_from_gradients: parameters outside the spectral ball");
    const int n = spec.n();
    std::vector<Vec> deltas(static_cast<size_t>(n));
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        LossGradient ga = loss_and_gradient(spec.cfg, theta_a, spec.inputs[static_cast<size_t>(i)],
                                            spec.targets[static_cast<size_t>(i)]);
        LossGradient gb = loss_and_gradient(spec.cfg, theta_b, spec.inputs[static_cast<size_t>(i)],
                                            spec.targets[static_cast<size_t>(i)]);
        Vec d = std::move(ga.grad);
        axpy(-1.0, gb.grad, d);
        sum_sq += norm2_squared(d);
        deltas[static_cast<size_t>(i)] = std::move(d);
    }
    const double dbar = std::sqrt(sum_sq / static_cast<double>(n));
    if (!(dbar > 1e-14))
        throw std::runtime_error("sic_from_gradients: the two parameter points have identical gradients");
    for (Vec& d : deltas)
        for (double& x : d) x /= dbar;
    return sic_tail_check(deltas, mc_trials, rng);
}

BoundReport ffn_width_bound(const NetworkConfig& cfg, double rho, double rho1, double featurizer_width) {
    cfg.validate();
    BoundReport rep;
    rep.featurizer_term = featurizer_width;
    double prod = 1.0, sum = 0.0;
    for (int l = 1; l <= cfg.depth; ++l) {
        const double b = cfg.beta(l, rho);
        if (!(b > 0.0)) throw std::invalid_argument("ffn_width_bound: beta_l must be positive");
        prod *= b;
        sum += 1.0 / (b * std::sqrt(static_cast<double>(cfg.width(l))));
    }
    rep.second_term = (1.0 + rho1) * std::sqrt(static_cast<double>(cfg.width(cfg.depth))) * prod * sum;
    rep.bound_value = rep.featurizer_term + rep.second_term;
    return rep;
}

BoundReport resnet_width_bound(const NetworkConfig& cfg, double rho, double rho1, double featurizer_width) {
    cfg.validate();
    BoundReport rep;
    rep.featurizer_term = featurizer_width;
    const double L = static_cast<double>(cfg.depth);
    double prod = 1.0, sum = 0.0;
    for (int l = 1; l <= cfg.depth; ++l) {
        const double f = 1.0 + cfg.beta(l, rho) / L;
        prod *= f;
        sum += 1.0 / (f * std::sqrt(static_cast<double>(cfg.width(l))));
    }
    rep.second_term = ((1.0 + rho1) / L) * std::sqrt(static_cast<double>(cfg.width(cfg.depth))) * prod * sum;
    rep.bound_value = rep.featurizer_term + rep.second_term;
    rep.e_beta_envelope = (1.0 + rho1) * std::exp(cfg.beta(1, rho));  // equal widths by construction
    return rep;
}

double generalization_bound_eval(double empirical_grad_norm, double width, long n, double delta, double cbar1,
                                 double alpha) {
    if (n < 1) throw std::invalid_argument("generalization_bound_eval: n must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("generalization_bound_eval: delta must be in (0,1)");
    if (width < 0.0) throw std::invalid_argument("generalization_bound_eval: width must be >= 0");
    if (!(alpha >= 1.0 && alpha <= 2.0)) throw std::invalid_argument("generalization_bound_eval: alpha must be in [1,2]");
    const double log_term = std::log(1.0 / delta) / static_cast<double>(n);
    const double nerc_term = 4.0 * width / std::sqrt(static_cast<double>(n)) + log_term;
    return 2.0 * cbar1 * (std::pow(empirical_grad_norm, alpha) + 2.0 * std::pow(nerc_term, alpha)) +
           std::pow(log_term, 0.5 * alpha);
}

WidthVsBoundResult width_vs_bound_check(const GradientSetSpec& spec, RngStream& rng, int outer,
                                        const InnerBudget& budget) {
    spec.validate();
    if (spec.n() != 1) throw std::invalid_argument("width_vs_bound_check: single-sample scope");
    WidthVsBoundResult res;
    NetworkGradientFamily family(spec);
    RngStream lggw_rng = rng.substream("lggw");
    RngStream feat_rng = rng.substream("featurizer");
    res.lggw = lggw_estimate(family, lggw_rng, outer, budget);
    res.featurizer_width = featurizer_width_estimate(spec, feat_rng, outer, budget);
    res.bound = spec.cfg.arch == Arch::ffn
                    ? ffn_width_bound(spec.cfg, spec.ball.rho, spec.ball.rho1, res.featurizer_width.value)
                    : resnet_width_bound(spec.cfg, spec.ball.rho, spec.ball.rho1, res.featurizer_width.value);
    // c* is the smallest constant with estimate <= c* * bound; a
    // statistically-zero estimate (the rho = 0 case) needs none at all
    const double tiny = 1e-12;
    if (res.lggw.value <= 3.0 * res.lggw.std_error + tiny) {
        res.c_star = 0.0;
    } else if (res.bound.bound_value <= tiny) {
        res.c_star = std::numeric_limits<double>::infinity();
    } else {
        res.c_star = res.lggw.value / res.bound.bound_value;
    }
    return res;
}

}  // namespace gradgeom
