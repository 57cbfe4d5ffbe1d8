#include "gradgeom/optlab.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace gradgeom {

int TeacherDistribution::student_dim() const {
    switch (kind) {
        case Kind::quadratic1d: return 1;
        case Kind::linear: return static_cast<int>(linear_weights.size());
        case Kind::network: return static_cast<int>(net_cfg.param_dim());
    }
    return 0;
}

Sample TeacherDistribution::draw(RngStream& rng) const {
    Sample s;
    switch (kind) {
        case Kind::quadratic1d:
            s.y = quad_mean + noise_std * rng.gaussian();
            break;
        case Kind::linear: {
            s.x = rng.gaussian_vector(static_cast<int>(linear_weights.size()));
            s.y = dot(linear_weights, s.x) + noise_std * rng.gaussian();
            break;
        }
        case Kind::network: {
            s.x = rng.unit_sphere_vector(net_cfg.input_dim);
            const ForwardCache cache = forward(net_cfg, net_params, s.x);
            s.y = cache.output + noise_std * rng.gaussian();
            break;
        }
    }
    return s;
}

std::vector<Sample> TeacherDistribution::draw_many(RngStream& rng, long count) const {
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(count));
    for (long i = 0; i < count; ++i) out.push_back(draw(rng));
    return out;
}

StudentModel StudentModel::for_teacher(const TeacherDistribution& dist) {
    StudentModel m;
    m.kind = dist.kind;
    m.dim = dist.student_dim();
    if (dist.kind == TeacherDistribution::Kind::network) m.net_cfg = dist.net_cfg;
    return m;
}

double StudentModel::sample_loss(std::span<const double> theta, const Sample& s) const {
    switch (kind) {
        case TeacherDistribution::Kind::quadratic1d: {
            const double r = theta[0] - s.y;
            return 0.5 * r * r;
        }
        case TeacherDistribution::Kind::linear: {
            const double r = dot(theta, s.x) - s.y;
            return 0.5 * r * r;
        }
        case TeacherDistribution::Kind::network: {
            const NetworkParams p = NetworkParams::unflatten(net_cfg, theta);
            const ForwardCache cache = forward(net_cfg, p, s.x);
            const double r = cache.output - s.y;
            return 0.5 * r * r;
        }
    }
    return 0.0;
}

void StudentModel::add_sample_grad(std::span<const double> theta, const Sample& s, double weight, Vec& acc) const {
    switch (kind) {
        case TeacherDistribution::Kind::quadratic1d:
            acc[0] += weight * (theta[0] - s.y);
            return;
        case TeacherDistribution::Kind::linear: {
            const double r = dot(theta, s.x) - s.y;
            axpy(weight * r, s.x, acc);
            return;
        }
        case TeacherDistribution::Kind::network: {
            const NetworkParams p = NetworkParams::unflatten(net_cfg, theta);
            const LossGradient lg = loss_and_gradient(net_cfg, p, s.x, s.y);
            axpy(weight, lg.grad, acc);
            return;
        }
    }
}

Vec StudentModel::mean_gradient(std::span<const double> theta, const std::vector<Sample>& samples) const {
    Vec g(theta.size(), 0.0);
    const double w = 1.0 / static_cast<double>(samples.size());
    for (const Sample& s : samples) add_sample_grad(theta, s, w, g);
    return g;
}

double StudentModel::mean_loss(std::span<const double> theta, const std::vector<Sample>& samples) const {
    double acc = 0.0;
    for (const Sample& s : samples) acc += sample_loss(theta, s);
    return acc / static_cast<double>(samples.size());
}

PopulationOracle PopulationOracle::analytic() { return {Mode::analytic, 0}; }

PopulationOracle PopulationOracle::fresh_mc(long m) {
    if (m < 2) throw std::invalid_argument("PopulationOracle: fresh_mc needs M >= 2");
    return {Mode::fresh_mc, m};
}

PopulationEval population_gradient(const TeacherDistribution& dist, const StudentModel& model,
                                   std::span<const double> theta, const PopulationOracle& oracle, RngStream& rng) {
    PopulationEval out;
    if (oracle.mode == PopulationOracle::Mode::analytic) {
        if (!dist.has_analytic_population())
            throw std::invalid_argument("population_gradient: no analytic oracle for network teachers");
        if (dist.kind == TeacherDistribution::Kind::quadratic1d) {
            out.gradient = {theta[0] - dist.quad_mean};
            const double d = theta[0] - dist.quad_mean;
            out.loss = 0.5 * d * d + 0.5 * dist.noise_std * dist.noise_std;
        } else {
            // E[x x^T] = I for standard normal inputs, so grad = theta - w*
            out.gradient.assign(theta.begin(), theta.end());
            axpy(-1.0, dist.linear_weights, out.gradient);
            out.loss = 0.5 * norm2_squared(out.gradient) + 0.5 * dist.noise_std * dist.noise_std;
        }
        return out;
    }

    const long m = oracle.fresh_samples;
    out.gradient.assign(theta.size(), 0.0);
    Vec sum_sq(theta.size(), 0.0);
    Vec g(theta.size());
    double loss_acc = 0.0;
    for (long i = 0; i < m; ++i) {
        const Sample s = dist.draw(rng);
        g.assign(theta.size(), 0.0);
        model.add_sample_grad(theta, s, 1.0, g);
        for (size_t j = 0; j < g.size(); ++j) {
            out.gradient[j] += g[j];
            sum_sq[j] += g[j] * g[j];
        }
        loss_acc += model.sample_loss(theta, s);
    }
    double var_tot = 0.0;
    for (size_t j = 0; j < out.gradient.size(); ++j) {
        out.gradient[j] /= static_cast<double>(m);
        const double var = (sum_sq[j] - m * out.gradient[j] * out.gradient[j]) / static_cast<double>(m - 1);
        var_tot += std::max(var, 0.0);
    }
    out.grad_std_error = std::sqrt(var_tot / static_cast<double>(m));
    out.loss = loss_acc / static_cast<double>(m);
    return out;
}

namespace {

std::uint64_t hash_theta(const Vec& theta) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (double x : theta) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

}  // namespace

GdTrace gd_with_reuse(const TeacherDistribution& dist, const StudentModel& model, const Vec& theta0, double eta,
                      int T, long n, RngStream& rng, const PopulationOracle& oracle) {
    if (!(eta >= 0.0)) throw std::invalid_argument("gd_with_reuse: eta must be >= 0");
    if (T < 0 || n < 1) throw std::invalid_argument("gd_with_reuse: need T >= 0 and n >= 1");
    RngStream data_rng = rng.substream("data");
    RngStream oracle_rng = rng.substream("population-oracle");
    const std::vector<Sample> samples = dist.draw_many(data_rng, n);  // drawn once, reused at every step

    const double lstar = dist.optimal_population_loss();
    const int snap_every = std::max(1, (T + 99) / 100);

    GdTrace trace;
    Vec theta = theta0;
    double initial_loss = -1.0;
    for (int t = 0; t <= T; ++t) {
        GdStep step;
        step.t = t;
        step.loss = model.mean_loss(theta, samples);
        if (t == 0) initial_loss = step.loss;
        if (step.loss > 1e6 * std::max(initial_loss, 1e-12))
            throw std::runtime_error("gd_with_reuse: divergence guard tripped at step " + std::to_string(t) +
                                     " (loss " + std::to_string(step.loss) + ")");
        const Vec emp_grad = model.mean_gradient(theta, samples);
        RngStream osub = oracle_rng.substream(static_cast<std::uint64_t>(t));
        const PopulationEval pop = population_gradient(dist, model, theta, oracle, osub);

        step.emp_grad_norm = norm2(emp_grad);
        step.pop_grad_norm = norm2(pop.gradient);
        Vec diff = emp_grad;
        axpy(-1.0, pop.gradient, diff);
        step.delta = norm2(diff);
        step.ratio_defined = step.pop_grad_norm > 1e-10;
        if (step.ratio_defined) {
            const double excess = pop.loss - lstar;
            step.ratio_a1 = excess / step.pop_grad_norm;
            step.ratio_a2 = excess / (step.pop_grad_norm * step.pop_grad_norm);
        }
        step.theta_hash = hash_theta(theta);
        if (t % snap_every == 0) step.theta_snapshot = theta;
        trace.delta_by_step.push_back(step.delta);
        trace.max_delta = std::max(trace.max_delta, step.delta);
        trace.steps.push_back(std::move(step));

        if (t < T) axpy(-eta, emp_grad, theta);
    }
    trace.final_theta = std::move(theta);
    return trace;
}

RatioSequence gd_ratio_trace(const GdTrace& trace, int alpha) {
    if (alpha != 1 && alpha != 2) throw std::invalid_argument("gd_ratio_trace: alpha must be 1 or 2");
    RatioSequence seq;
    for (const GdStep& s : trace.steps) {
        if (!s.ratio_defined) continue;
        const double v = alpha == 1 ? s.ratio_a1 : s.ratio_a2;
        seq.values.push_back(v);
        seq.steps.push_back(s.t);
        seq.max_value = std::max(seq.max_value, v);
    }
    if (seq.values.empty()) throw std::runtime_error("gd_ratio_trace: every step had a near-zero population gradient");
    return seq;
}

ReuseScalingResult reuse_scaling_experiment(const TeacherDistribution& dist, const StudentModel& model, double eta,
                                            int T, const std::vector<long>& n_grid, int trials, RngStream& rng,
                                            const PopulationOracle& oracle) {
    if (n_grid.size() < 4) throw std::invalid_argument("reuse_scaling_experiment: n grid needs >= 4 points");
    if (n_grid.back() < 16 * n_grid.front())
        throw std::invalid_argument("reuse_scaling_experiment: n grid must span at least 16x");
    if (trials < 1) throw std::invalid_argument("reuse_scaling_experiment: trials must be >= 1");

    ReuseScalingResult res;
    res.n_grid = n_grid;
    RngStream theta_rng = rng.substream("theta0");
    Vec log_n, log_delta;
    for (size_t gi = 0; gi < n_grid.size(); ++gi) {
        double sum = 0.0, sumsq = 0.0;
        for (int tr = 0; tr < trials; ++tr) {
            RngStream run = rng.substream("n-sweep").substream(gi * 1000 + static_cast<std::uint64_t>(tr));
            RngStream tsub = theta_rng.substream(gi * 1000 + static_cast<std::uint64_t>(tr));
            Vec theta0 = tsub.gaussian_vector(model.dim);
            const GdTrace trace = gd_with_reuse(dist, model, theta0, eta, T, n_grid[gi], run, oracle);
            sum += trace.max_delta;
            sumsq += trace.max_delta * trace.max_delta;
        }
        const double mean = sum / trials;
        const double var = trials > 1 ? std::max(0.0, (sumsq - trials * mean * mean) / (trials - 1)) : 0.0;
        res.max_delta_mean.push_back(mean);
        res.max_delta_se.push_back(std::sqrt(var / trials));
        log_n.push_back(std::log(static_cast<double>(n_grid[gi])));
        log_delta.push_back(std::log(mean));
    }
    res.slope_log_n = ls_slope(log_n, log_delta);

    // T sweep at the mid-grid n: prefix maxima of one long trace per trial.
    const long n_fixed = n_grid[n_grid.size() / 2];
    const int t_max = 1024;
    for (long t = 16; t <= t_max; t *= 2) res.t_grid.push_back(t);
    res.max_delta_by_t.assign(res.t_grid.size(), 0.0);
    for (int tr = 0; tr < trials; ++tr) {
        RngStream run = rng.substream("t-sweep").substream(static_cast<std::uint64_t>(tr));
        RngStream tsub = theta_rng.substream("t-sweep").substream(static_cast<std::uint64_t>(tr));
        Vec theta0 = tsub.gaussian_vector(model.dim);
        const GdTrace trace = gd_with_reuse(dist, model, theta0, eta, t_max, n_fixed, run, oracle);
        double running = 0.0;
        size_t gi = 0;
        for (int t = 0; t <= t_max && gi < res.t_grid.size(); ++t) {
            running = std::max(running, trace.delta_by_step[static_cast<size_t>(t)]);
            if (t == res.t_grid[gi]) res.max_delta_by_t[gi++] += running / trials;
        }
    }
    Vec log_t, log_dt;
    for (size_t i = 0; i < res.t_grid.size(); ++i) {
        log_t.push_back(std::log(static_cast<double>(res.t_grid[i])));
        log_dt.push_back(std::log(res.max_delta_by_t[i]));
    }
    res.exponent_log_t = ls_slope(log_t, log_dt);
    return res;
}

double estimate_gradient_lipschitz(const TeacherDistribution& dist, const StudentModel& model, const Vec& theta0,
                                   double probe_radius, int pairs, RngStream& rng, const PopulationOracle& oracle) {
    if (pairs < 1) throw std::invalid_argument("estimate_gradient_lipschitz: pairs must be >= 1");
    double best = 0.0;
    for (int i = 0; i < pairs; ++i) {
        RngStream sub = rng.substream(static_cast<std::uint64_t>(i));
        Vec a = theta0, b = theta0;
        axpy(probe_radius * sub.uniform01(), sub.unit_sphere_vector(model.dim), a);
        axpy(probe_radius * sub.uniform01(), sub.unit_sphere_vector(model.dim), b);
        Vec d = a;
        axpy(-1.0, b, d);
        const double dist_ab = norm2(d);
        if (dist_ab < 1e-12) continue;
        RngStream ra = sub.substream("a"), rb = sub.substream("b");
        const PopulationEval pa = population_gradient(dist, model, a, oracle, ra);
        const PopulationEval pb = population_gradient(dist, model, b, oracle, rb);
        Vec gd = pa.gradient;
        axpy(-1.0, pb.gradient, gd);
        best = std::max(best, norm2(gd) / dist_ab);
    }
    if (best <= 0.0) throw std::runtime_error("estimate_gradient_lipschitz: all probes degenerate");
    return best;
}

ConvergenceResult population_convergence_experiment(const TeacherDistribution& dist, const StudentModel& model,
                                                    const Vec& theta0, int T, long n, RngStream& rng,
                                                    const PopulationOracle& oracle) {
    if (T < 1) throw std::invalid_argument("population_convergence_experiment: T must be >= 1");
    ConvergenceResult res;
    RngStream probe_rng = rng.substream("tau-probe");
    res.tau_hat = estimate_gradient_lipschitz(dist, model, theta0, 0.5, 16, probe_rng, oracle);
    res.eta = 1.0 / (4.0 * res.tau_hat);
    RngStream run = rng.substream("run");
    const GdTrace trace = gd_with_reuse(dist, model, theta0, res.eta, T, n, run, oracle);
    double acc = 0.0;
    for (int t = 1; t <= T; ++t) {
        const double g = trace.steps[static_cast<size_t>(t)].pop_grad_norm;
        res.pop_grad_sq_by_step.push_back(g * g);
        acc += g * g;
    }
    res.metric = acc / static_cast<double>(T);
    return res;
}

}  // namespace gradgeom
