#include "gradgeom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gradgeom/numerics.hpp"

namespace gradgeom {

void GradientSetSpec::validate() const {
    cfg.validate();
    ball.center.validate_shapes(cfg);
    if (inputs.empty()) throw std::invalid_argument("gradient set: needs at least one sample");
    if (inputs.size() != targets.size()) throw std::invalid_argument("gradient set: inputs/targets length mismatch");
    for (const Vec& x : inputs) {
        if (static_cast<int>(x.size()) != cfg.input_dim)
            throw std::invalid_argument("gradient set: input dimension mismatch");
        if (std::fabs(norm2(x) - 1.0) > 1e-10) throw std::invalid_argument("gradient set: inputs must be unit norm");
    }
    if (ball.rho < 0.0 || ball.rho1 < 0.0) throw std::invalid_argument("gradient set: radii must be >= 0");
}

StackedGradient stacked_gradient(const GradientSetSpec& spec, const NetworkParams& params) {
    spec.validate();
    if (!spec.ball.contains(params)) throw std::invalid_argument("stacked_gradient: params outside the spectral ball");
    StackedGradient out;
    out.n = spec.n();
    out.p = spec.cfg.param_dim();
    out.entries.reserve(static_cast<size_t>(out.n) * static_cast<size_t>(out.p));
    const double scale = 1.0 / std::sqrt(static_cast<double>(out.n));
    for (int i = 0; i < out.n; ++i) {
        LossGradient lg = loss_and_gradient(spec.cfg, params, spec.inputs[static_cast<size_t>(i)],
                                            spec.targets[static_cast<size_t>(i)]);
        for (double g : lg.grad) out.entries.push_back(scale * g);
    }
    return out;
}

NetworkGradientFamily::NetworkGradientFamily(GradientSetSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    p_ = spec_.cfg.param_dim();
}

void NetworkGradientFamily::gradients(std::span<const double> theta, std::vector<Vec>& out) const {
    const NetworkParams params = NetworkParams::unflatten(spec_.cfg, theta);
    out.resize(static_cast<size_t>(spec_.n()));
    for (int i = 0; i < spec_.n(); ++i) {
        LossGradient lg = loss_and_gradient(spec_.cfg, params, spec_.inputs[static_cast<size_t>(i)],
                                            spec_.targets[static_cast<size_t>(i)]);
        out[static_cast<size_t>(i)] = std::move(lg.grad);
    }
}

Vec NetworkGradientFamily::center() const { return spec_.ball.center.flatten(); }

Vec NetworkGradientFamily::random_point(RngStream& rng) const {
    NetworkParams p = spec_.ball.center;
    for (Matrix& w : p.weights) {
        // random deviation, then an exact spectral clip keeps it inside
        for (double& x : w.data) x += spec_.ball.rho * rng.gaussian() / std::sqrt(static_cast<double>(w.cols));
    }
    if (!p.last_layer.empty() && spec_.ball.rho1 > 0.0) {
        const Vec dir = rng.unit_sphere_vector(static_cast<int>(p.last_layer.size()));
        axpy(spec_.ball.rho1 * rng.uniform01(), dir, p.last_layer);
    }
    p = project_to_ball(p, spec_.ball);
    return p.flatten();
}

void NetworkGradientFamily::project(Vec& theta) const {
    NetworkParams p = NetworkParams::unflatten(spec_.cfg, theta);
    p = project_to_ball(p, spec_.ball);
    theta = p.flatten();
}

LinearModelFamily::LinearModelFamily(Vec center, double rho, std::vector<Vec> xs, Vec ys)
    : center_(std::move(center)), rho_(rho), xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.empty() || xs_.size() != ys_.size()) throw std::invalid_argument("linear family: bad samples");
    for (const Vec& x : xs_)
        if (x.size() != center_.size()) throw std::invalid_argument("linear family: dimension mismatch");
    if (rho_ < 0.0) throw std::invalid_argument("linear family: rho must be >= 0");
}

void LinearModelFamily::gradients(std::span<const double> theta, std::vector<Vec>& out) const {
    out.resize(xs_.size());
    for (size_t i = 0; i < xs_.size(); ++i) {
        const double r = dot(theta, xs_[i]) - ys_[i];
        out[i].assign(theta.size(), 0.0);
        axpy(r, xs_[i], out[i]);
    }
}

Vec LinearModelFamily::random_point(RngStream& rng) const {
    Vec p = center_;
    for (double& x : p) x += rho_ * (2.0 * rng.uniform01() - 1.0);
    return p;
}

void LinearModelFamily::project(Vec& theta) const {
    for (size_t i = 0; i < theta.size(); ++i)
        theta[i] = std::clamp(theta[i], center_[i] - rho_, center_[i] + rho_);
}

FixedGradientFamily::FixedGradientFamily(std::vector<Vec> grads) : grads_(std::move(grads)) {
    if (grads_.empty()) throw std::invalid_argument("fixed family: needs at least one gradient");
    p_ = static_cast<long>(grads_.front().size());
    for (const Vec& g : grads_)
        if (static_cast<long>(g.size()) != p_) throw std::invalid_argument("fixed family: dimension mismatch");
}

void FixedGradientFamily::gradients(std::span<const double>, std::vector<Vec>& out) const { out = grads_; }

namespace {

// Objective F over theta plus a finite-difference ascent direction.
// The LGGW functional and the NERC norm share this driver; only the value
// and direction lambdas differ.
struct AscentProblem {
    const GradientFamily* family;
    // value at theta, given freshly evaluated per-sample gradients
    virtual double value(const std::vector<Vec>& grads) const = 0;
    // per-sample directional weights: direction_i in parameter space along
    // which the FD of gradient i is taken, and its contraction weight
    virtual void fd_terms(const std::vector<Vec>& grads, std::vector<Vec>& dirs, Vec& weights) const = 0;
    virtual ~AscentProblem() = default;
};

double eval_value(const AscentProblem& prob, std::span<const double> theta, std::vector<Vec>& scratch) {
    prob.family->gradients(theta, scratch);
    return prob.value(scratch);
}

// d/dtheta of the objective by central differences of the per-sample
// gradient maps along the problem's directions (a Hessian-vector product
// without second-order reverse mode).
Vec fd_gradient(const AscentProblem& prob, std::span<const double> theta, const std::vector<Vec>& grads_at_theta) {
    std::vector<Vec> dirs;
    Vec weights;
    prob.fd_terms(grads_at_theta, dirs, weights);
    const long p = prob.family->param_dim();
    Vec acc(static_cast<size_t>(p), 0.0);
    const double h = 1e-4;
    Vec tp(theta.begin(), theta.end()), tm(theta.begin(), theta.end());
    std::vector<Vec> gp, gm;
    for (size_t i = 0; i < dirs.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const double dn = norm2(dirs[i]);
        if (dn == 0.0) continue;
        for (size_t j = 0; j < tp.size(); ++j) {
            const double step = h * dirs[i][j] / dn;
            tp[j] = theta[j] + step;
            tm[j] = theta[j] - step;
        }
        prob.family->gradients(tp, gp);
        prob.family->gradients(tm, gm);
        const double w = weights[i] * dn / (2.0 * h);
        for (size_t j = 0; j < acc.size(); ++j) acc[j] += w * (gp[i][j] - gm[i][j]);
        std::copy(theta.begin(), theta.end(), tp.begin());
        std::copy(theta.begin(), theta.end(), tm.begin());
    }
    return acc;
}

double ascend(const AscentProblem& prob, Vec theta, const InnerBudget& budget) {
    const GradientFamily& fam = *prob.family;
    const double scale = fam.ball_scale();
    std::vector<Vec> grads;
    double best = eval_value(prob, theta, grads);
    if (scale <= 0.0) return best;  // singleton set, nothing to ascend
    double step = budget.step_factor * scale;
    const double min_step = 1e-4 * scale;
    for (int s = 0; s < budget.steps && step > min_step; ++s) {
        const Vec dir = fd_gradient(prob, theta, grads);
        const double dn = norm2(dir);
        if (dn < 1e-14) break;
        Vec trial = theta;
        for (size_t j = 0; j < trial.size(); ++j) trial[j] += step * dir[j] / dn;
        fam.project(trial);
        std::vector<Vec> trial_grads;
        const double val = eval_value(prob, trial, trial_grads);
        if (val > best) {
            best = val;
            theta = std::move(trial);
            grads = std::move(trial_grads);
        } else {
            step *= 0.5;  // halve on non-improvement
        }
    }
    return best;
}

// One outer draw: max over ascent starts (center + random) and a pure
// random-search baseline; returns the max and whether ascent won.
struct InnerResult {
    double value;
    bool ascent_won;
};

InnerResult maximize_inner(const AscentProblem& prob, const InnerBudget& budget, RngStream& rng) {
    const GradientFamily& fam = *prob.family;
    std::vector<Vec> scratch;
    double ascent_best = ascend(prob, fam.center(), budget);
    for (int r = 1; r < budget.restarts; ++r) {
        RngStream sub = rng.substream(static_cast<std::uint64_t>(r));
        ascent_best = std::max(ascent_best, ascend(prob, fam.random_point(sub), budget));
    }
    double random_best = -std::numeric_limits<double>::infinity();
    RngStream search = rng.substream("random-search");
    for (int r = 0; r < budget.restarts; ++r) {
        RngStream sub = search.substream(static_cast<std::uint64_t>(r));
        random_best = std::max(random_best, eval_value(prob, fam.random_point(sub), scratch));
    }
    return {std::max(ascent_best, random_best), ascent_best > random_best};
}

struct LggwProblem final : AscentProblem {
    std::vector<Vec> g_blocks;  // g split into n per-sample blocks
    double inv_sqrt_n = 1.0;

    double value(const std::vector<Vec>& grads) const override {
        double s = 0.0;
        for (size_t i = 0; i < grads.size(); ++i) s += dot(grads[i], g_blocks[i]);
        return inv_sqrt_n * s;
    }
    void fd_terms(const std::vector<Vec>&, std::vector<Vec>& dirs, Vec& weights) const override {
        dirs = g_blocks;
        weights.assign(g_blocks.size(), inv_sqrt_n);
    }
};

struct NercProblem final : AscentProblem {
    std::vector<int> signs;

    double value(const std::vector<Vec>& grads) const override {
        Vec s(grads.front().size(), 0.0);
        for (size_t i = 0; i < grads.size(); ++i) axpy(static_cast<double>(signs[i]), grads[i], s);
        return norm2(s);
    }
    void fd_terms(const std::vector<Vec>& grads, std::vector<Vec>& dirs, Vec& weights) const override {
        Vec s(grads.front().size(), 0.0);
        for (size_t i = 0; i < grads.size(); ++i) axpy(static_cast<double>(signs[i]), grads[i], s);
        const double sn = norm2(s);
        dirs.assign(grads.size(), Vec());
        weights.assign(grads.size(), 0.0);
        if (sn == 0.0) return;  // norm not differentiable at 0; restarts cover this
        for (double& x : s) x /= sn;
        for (size_t i = 0; i < grads.size(); ++i) {
            dirs[i] = s;
            weights[i] = static_cast<double>(signs[i]);
        }
    }
};

WidthEstimate summarize(const Vec& values, long ascent_wins, bool exact_outer) {
    WidthEstimate e;
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    e.value = sum / n;
    if (!exact_outer && values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.value) * (v - e.value);
        e.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    e.outer_samples = static_cast<long>(values.size());
    InnerDiagnostics diag;
    diag.ascent_wins = ascent_wins;
    diag.outer = static_cast<long>(values.size());
    e.inner = diag;
    return e;
}

}  // namespace

WidthEstimate lggw_estimate(const GradientFamily& family, RngStream& rng, int outer, const InnerBudget& budget) {
    if (outer < 2) throw std::invalid_argument("lggw_estimate: outer must be >= 2");
    if (budget.restarts < 1) throw std::invalid_argument("lggw_estimate: restarts must be >= 1");
    const int n = family.sample_count();
    const long p = family.param_dim();
    RngStream gauss = rng.substream("gaussian-outer");
    RngStream inner = rng.substream("inner-restarts");
    Vec values(static_cast<size_t>(outer));
    long wins = 0;
    for (int j = 0; j < outer; ++j) {
        RngStream gsub = gauss.substream(static_cast<std::uint64_t>(j));
        LggwProblem prob;
        prob.family = &family;
        prob.inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
        prob.g_blocks.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) prob.g_blocks[static_cast<size_t>(i)] = gsub.gaussian_vector(static_cast<int>(p));
        RngStream isub = inner.substream(static_cast<std::uint64_t>(j));
        const InnerResult r = maximize_inner(prob, budget, isub);
        values[static_cast<size_t>(j)] = r.value;
        wins += r.ascent_won ? 1 : 0;
    }
    return summarize(values, wins, false);
}

WidthEstimate nerc_estimate(const GradientFamily& family, RngStream& rng, int outer, const InnerBudget& budget,
                            RademacherOuter mode) {
    if (budget.restarts < 1) throw std::invalid_argument("nerc_estimate: restarts must be >= 1");
    const int n = family.sample_count();
    RngStream rad = rng.substream("rademacher");
    RngStream inner = rng.substream("inner-restarts");
    Vec values;
    long wins = 0;
    if (mode == RademacherOuter::exhaustive) {
        if (n > 16) throw std::invalid_argument("nerc_estimate: exhaustive mode requires n <= 16");
        const long patterns = 1L << n;
        values.resize(static_cast<size_t>(patterns));
        for (long m = 0; m < patterns; ++m) {
            NercProblem prob;
            prob.family = &family;
            prob.signs.resize(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) prob.signs[static_cast<size_t>(i)] = (m >> i) & 1 ? 1 : -1;
            RngStream isub = inner.substream(static_cast<std::uint64_t>(m));
            const InnerResult r = maximize_inner(prob, budget, isub);
            values[static_cast<size_t>(m)] = r.value;
            wins += r.ascent_won ? 1 : 0;
        }
        WidthEstimate e = summarize(values, wins, true);
        e.value /= static_cast<double>(n);
        return e;
    }
    if (outer < 2) throw std::invalid_argument("nerc_estimate: outer must be >= 2");
    values.resize(static_cast<size_t>(outer));
    for (int j = 0; j < outer; ++j) {
        RngStream rsub = rad.substream(static_cast<std::uint64_t>(j));
        NercProblem prob;
        prob.family = &family;
        prob.signs = rsub.rademacher_vector(n);
        RngStream isub = inner.substream(static_cast<std::uint64_t>(j));
        const InnerResult r = maximize_inner(prob, budget, isub);
        values[static_cast<size_t>(j)] = r.value;
        wins += r.ascent_won ? 1 : 0;
    }
    WidthEstimate e = summarize(values, wins, false);
    e.value /= static_cast<double>(n);
    e.std_error /= static_cast<double>(n);
    return e;
}

Vec sorted_gradient_profile(const GradientSetSpec& spec, const NetworkParams& params) {
    spec.validate();
    if (!spec.ball.contains(params))
        throw std::invalid_argument("sorted_gradient_profile: params outside the spectral ball");
    const long p = spec.cfg.param_dim();
    Vec mean(static_cast<size_t>(p), 0.0);
    for (int i = 0; i < spec.n(); ++i) {
        LossGradient lg = loss_and_gradient(spec.cfg, params, spec.inputs[static_cast<size_t>(i)],
                                            spec.targets[static_cast<size_t>(i)]);
        axpy(1.0 / spec.n(), lg.grad, mean);
    }
    for (double& x : mean) x = std::fabs(x);
    std::sort(mean.begin(), mean.end());
    return mean;
}

SparsityReport featurizer_sparsity(const GradientSetSpec& spec, const NetworkParams& params, double l0_threshold) {
    spec.validate();
    if (l0_threshold < 0.0) throw std::invalid_argument("featurizer_sparsity: threshold must be >= 0");
    if (!spec.ball.contains(params))
        throw std::invalid_argument("featurizer_sparsity: params outside the spectral ball");
    SparsityReport rep;
    for (int i = 0; i < spec.n(); ++i) {
        const ForwardCache cache = forward(spec.cfg, params, spec.inputs[static_cast<size_t>(i)]);
        const Vec h = featurizer(cache);
        long l0 = 0;
        double l1 = 0.0;
        for (double t : h) {
            if (std::fabs(t) > l0_threshold) ++l0;
            l1 += std::fabs(t);
        }
        rep.l0.push_back(l0);
        rep.l1.push_back(l1);
        rep.l0_max = std::max(rep.l0_max, l0);
        rep.l1_max = std::max(rep.l1_max, l1);
    }
    const double n = static_cast<double>(spec.n());
    for (long v : rep.l0) rep.l0_mean += static_cast<double>(v) / n;
    for (double v : rep.l1) rep.l1_mean += v / n;
    return rep;
}

WidthEstimate featurizer_width_estimate(const GradientSetSpec& spec, RngStream& rng, int outer,
                                        const InnerBudget& budget) {
    spec.validate();
    if (spec.n() != 1) throw std::invalid_argument("featurizer_width_estimate: single-sample sets only");
    if (outer < 2) throw std::invalid_argument("featurizer_width_estimate: outer must be >= 2");
    const Vec& x = spec.inputs.front();
    const int mL = spec.cfg.width(spec.cfg.depth);

    // weight-only ball: ascend on the W blocks, v is not involved
    SpectralBall wball = spec.ball;
    wball.rho1 = 0.0;

    RngStream gauss = rng.substream("gaussian-outer");
    RngStream inner = rng.substream("inner-restarts");
    Vec values(static_cast<size_t>(outer));
    long wins = 0;
    const double scale = spec.ball.rho;
    for (int j = 0; j < outer; ++j) {
        RngStream gsub = gauss.substream(static_cast<std::uint64_t>(j));
        const Vec g = gsub.gaussian_vector(mL);
        RngStream isub = inner.substream(static_cast<std::uint64_t>(j));

        auto objective = [&](const NetworkParams& p) {
            const ForwardCache cache = forward(spec.cfg, p, x);
            return dot(featurizer(cache), g);
        };
        auto ascend_from = [&](NetworkParams p) {
            double best = objective(p);
            if (scale <= 0.0) return best;
            double step = budget.step_factor * scale;
            const double min_step = 1e-4 * scale;
            for (int s = 0; s < budget.steps && step > min_step; ++s) {
                const ForwardCache cache = forward(spec.cfg, p, x);
                Vec wgrad = weight_gradient_of_featurizer_functional(spec.cfg, p, cache, g);
                const double gn = norm2(wgrad);
                if (gn < 1e-14) break;
                NetworkParams trial = p;
                size_t off = 0;
                for (Matrix& w : trial.weights) {
                    for (double& t : w.data) t += step * wgrad[off++] / gn;
                }
                trial = project_to_ball(trial, wball);
                const double val = objective(trial);
                if (val > best) {
                    best = val;
                    p = std::move(trial);
                } else {
                    step *= 0.5;
                }
            }
            return best;
        };
        auto random_ball_point = [&](RngStream& r) {
            NetworkParams p = wball.center;
            for (Matrix& w : p.weights)
                for (double& t : w.data) t += scale * r.gaussian() / std::sqrt(static_cast<double>(w.cols));
            return project_to_ball(p, wball);
        };

        double ascent_best = ascend_from(wball.center);
        for (int r = 1; r < budget.restarts; ++r) {
            RngStream sub = isub.substream(static_cast<std::uint64_t>(r));
            ascent_best = std::max(ascent_best, ascend_from(random_ball_point(sub)));
        }
        double random_best = -std::numeric_limits<double>::infinity();
        RngStream search = isub.substream("random-search");
        for (int r = 0; r < budget.restarts; ++r) {
            RngStream sub = search.substream(static_cast<std::uint64_t>(r));
            random_best = std::max(random_best, objective(random_ball_point(sub)));
        }
        values[static_cast<size_t>(j)] = std::max(ascent_best, random_best);
        wins += ascent_best > random_best ? 1 : 0;
    }
    return summarize(values, wins, false);
}

double max_gradient_norm_sweep(const GradientFamily& family, long points, RngStream& rng) {
    if (points < 1) throw std::invalid_argument("max_gradient_norm_sweep: points must be >= 1");
    std::vector<Vec> grads;
    double best = 0.0;
    for (long i = 0; i < points; ++i) {
        RngStream sub = rng.substream(static_cast<std::uint64_t>(i));
        const Vec theta = family.random_point(sub);
        family.gradients(theta, grads);
        for (const Vec& g : grads) best = std::max(best, norm2(g));
    }
    return best;
}

}  // namespace gradgeom
