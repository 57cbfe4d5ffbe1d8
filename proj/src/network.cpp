#include "gradgeom/network.hpp"

#include <cmath>
#include <stdexcept>

#include "gradgeom/numerics.hpp"

namespace gradgeom {

void NetworkConfig::validate() const {
    if (depth < 1) throw std::invalid_argument("network: depth must be >= 1");
    if (static_cast<int>(widths.size()) != depth)
        throw std::invalid_argument("network: widths list must have one entry per layer");
    for (int m : widths)
        if (m < 1) throw std::invalid_argument("network: widths must be >= 1");
    if (input_dim < 1) throw std::invalid_argument("network: input_dim must be >= 1");
    if (!(sigma1 > 0.0)) throw std::invalid_argument("network: sigma1 must be positive");
    if (arch == Arch::resnet) {
        for (int m : widths)
            if (m != widths.front())
                throw std::invalid_argument("network: resnet requires equal widths for the skip connection");
        if (input_dim > widths.front())
            throw std::invalid_argument("network: resnet input_dim must not exceed the layer width");
    } else {
        if (widths.front() < input_dim)
            throw std::invalid_argument("network: ffn first width must be >= input_dim");
    }
}

int NetworkConfig::layer_input_dim(int l) const {
    if (l == 1) return arch == Arch::resnet ? width(1) : input_dim;  // resnet input is zero-padded
    return width(l - 1);
}

long NetworkConfig::param_dim() const {
    long p = 0;
    for (int l = 1; l <= depth; ++l) p += static_cast<long>(width(l)) * layer_input_dim(l);
    return p + width(depth);
}

double NetworkConfig::layer_init_std(int l) const {
    const double ml = static_cast<double>(width(l));
    if (l == 1) return sigma1 / (2.0 * (1.0 + std::sqrt(std::log(ml) / (2.0 * ml))));
    const double mprev = static_cast<double>(width(l - 1));
    return sigma1 / (1.0 + std::sqrt(mprev / ml) + std::sqrt(2.0 * std::log(ml) / ml));
}

double NetworkConfig::beta_product(int upto, double rho) const {
    double p = 1.0;
    for (int k = 1; k <= upto; ++k) p *= beta(k, rho);
    return p;
}

void NetworkParams::validate_shapes(const NetworkConfig& cfg) const {
    if (static_cast<int>(weights.size()) != cfg.depth)
        throw std::invalid_argument("params: layer count mismatch");
    for (int l = 1; l <= cfg.depth; ++l) {
        const Matrix& w = weights[static_cast<size_t>(l) - 1];
        if (w.rows != cfg.width(l) || w.cols != cfg.layer_input_dim(l))
            throw std::invalid_argument("params: weight shape mismatch at layer " + std::to_string(l));
    }
    if (static_cast<int>(last_layer.size()) != cfg.width(cfg.depth))
        throw std::invalid_argument("params: last-layer vector length mismatch");
}

long NetworkParams::param_dim() const {
    long p = static_cast<long>(last_layer.size());
    for (const Matrix& w : weights) p += static_cast<long>(w.rows) * w.cols;
    return p;
}

Vec NetworkParams::flatten() const {
    Vec theta;
    theta.reserve(static_cast<size_t>(param_dim()));
    for (const Matrix& w : weights) theta.insert(theta.end(), w.data.begin(), w.data.end());
    theta.insert(theta.end(), last_layer.begin(), last_layer.end());
    return theta;
}

NetworkParams NetworkParams::unflatten(const NetworkConfig& cfg, std::span<const double> theta) {
    if (static_cast<long>(theta.size()) != cfg.param_dim())
        throw std::invalid_argument("unflatten: parameter length mismatch");
    NetworkParams p;
    size_t off = 0;
    for (int l = 1; l <= cfg.depth; ++l) {
        Matrix w(cfg.width(l), cfg.layer_input_dim(l));
        std::copy(theta.begin() + off, theta.begin() + off + w.data.size(), w.data.begin());
        off += w.data.size();
        p.weights.push_back(std::move(w));
    }
    p.last_layer.assign(theta.begin() + off, theta.end());
    return p;
}

nlohmann::ordered_json NetworkParams::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const Matrix& w : weights) {
        nlohmann::ordered_json lw;
        lw["rows"] = w.rows;
        lw["cols"] = w.cols;
        lw["entries"] = w.data;  // row-major
        layers.push_back(lw);
    }
    j["weights"] = layers;
    j["last_layer"] = last_layer;
    return j;
}

NetworkParams NetworkParams::from_json(const nlohmann::json& j) {
    NetworkParams p;
    for (const auto& lw : j.at("weights")) {
        Matrix w(lw.at("rows").get<int>(), lw.at("cols").get<int>());
        const Vec entries = lw.at("entries").get<Vec>();
        if (entries.size() != w.data.size()) throw std::invalid_argument("params: entry count mismatch");
        w.data = entries;
        w.validate();
        p.weights.push_back(std::move(w));
    }
    p.last_layer = j.at("last_layer").get<Vec>();
    return p;
}

bool SpectralBall::contains(const NetworkParams& p, double slack) const {
    if (p.weights.size() != center.weights.size()) return false;
    for (size_t l = 0; l < p.weights.size(); ++l) {
        if (!p.weights[l].same_shape(center.weights[l])) return false;
        if (spectral_norm(p.weights[l] - center.weights[l]) > rho + slack * (1.0 + rho)) return false;
    }
    Vec dv = p.last_layer;
    axpy(-1.0, center.last_layer, dv);
    return norm2(dv) <= rho1 + slack * (1.0 + rho1);
}

double activation_value(Activation a, double x) {
    return a == Activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

double activation_derivative(Activation a, double x) {
    if (a == Activation::relu) return x > 0.0 ? 1.0 : 0.0;
    const double t = std::tanh(x);
    return 1.0 - t * t;
}

NetworkParams init_network(const NetworkConfig& cfg, RngStream& rng) {
    cfg.validate();
    NetworkParams p;
    for (int l = 1; l <= cfg.depth; ++l) {
        Matrix w(cfg.width(l), cfg.layer_input_dim(l));
        const double sd = cfg.layer_init_std(l);
        for (double& x : w.data) x = sd * rng.gaussian();
        p.weights.push_back(std::move(w));
    }
    p.last_layer = rng.unit_sphere_vector(cfg.width(cfg.depth));
    return p;
}

ForwardCache forward(const NetworkConfig& cfg, const NetworkParams& params, std::span<const double> x,
                     bool relaxed_input) {
    params.validate_shapes(cfg);
    if (static_cast<int>(x.size()) != cfg.input_dim) throw std::invalid_argument("forward: input dimension mismatch");
    if (!relaxed_input && std::fabs(norm2(x) - 1.0) > 1e-10)
        throw std::invalid_argument("forward: input must be unit norm");

    ForwardCache cache;
    Vec alpha0(x.begin(), x.end());
    if (cfg.arch == Arch::resnet) alpha0.resize(cfg.width(1), 0.0);  // zero-pad to the layer width
    cache.activations.push_back(std::move(alpha0));

    Vec pre;
    for (int l = 1; l <= cfg.depth; ++l) {
        const Matrix& w = params.weights[static_cast<size_t>(l) - 1];
        matvec(w, cache.activations.back(), pre);
        const double scale = cfg.arch == Arch::resnet
                                 ? 1.0 / (static_cast<double>(cfg.depth) * std::sqrt(static_cast<double>(cfg.width(l))))
                                 : 1.0 / std::sqrt(static_cast<double>(cfg.width(l)));
        for (double& t : pre) t *= scale;
        Vec next(pre.size());
        for (size_t i = 0; i < pre.size(); ++i) next[i] = activation_value(cfg.activation, pre[i]);
        if (cfg.arch == Arch::resnet) {
            const Vec& prev = cache.activations.back();
            for (size_t i = 0; i < next.size(); ++i) next[i] += prev[i];
        }
        cache.preactivations.push_back(pre);
        cache.activations.push_back(std::move(next));
    }
    cache.output = dot(params.last_layer, cache.activations.back());
    return cache;
}

Vec featurizer(const ForwardCache& cache) { return cache.activations.back(); }

Vec weight_gradient_of_featurizer_functional(const NetworkConfig& cfg, const NetworkParams& params,
                                             const ForwardCache& cache, std::span<const double> cot) {
    if (static_cast<int>(cot.size()) != cfg.width(cfg.depth))
        throw std::invalid_argument("featurizer functional: cotangent length mismatch");
    Vec grad(static_cast<size_t>(cfg.param_dim() - cfg.width(cfg.depth)), 0.0);

    // reverse accumulation; delta = d<cot, alpha^L> / d alpha^(l)
    Vec delta(cot.begin(), cot.end());
    size_t block_end = grad.size();
    Vec dtilde, back;
    for (int l = cfg.depth; l >= 1; --l) {
        const Matrix& w = params.weights[static_cast<size_t>(l) - 1];
        const Vec& pre = cache.preactivations[static_cast<size_t>(l) - 1];
        const Vec& prev = cache.activations[static_cast<size_t>(l) - 1];
        const double scale = cfg.arch == Arch::resnet
                                 ? 1.0 / (static_cast<double>(cfg.depth) * std::sqrt(static_cast<double>(cfg.width(l))))
                                 : 1.0 / std::sqrt(static_cast<double>(cfg.width(l)));
        dtilde.assign(delta.size(), 0.0);
        for (size_t i = 0; i < delta.size(); ++i)
            dtilde[i] = delta[i] * activation_derivative(cfg.activation, pre[i]);

        // dF/dW^(l) = scale * dtilde * prev^T, written into its block
        const size_t block = static_cast<size_t>(w.rows) * w.cols;
        block_end -= block;
        for (int i = 0; i < w.rows; ++i) {
            const double di = scale * dtilde[static_cast<size_t>(i)];
            if (di == 0.0) continue;
            double* out = grad.data() + block_end + static_cast<size_t>(i) * w.cols;
            for (int j = 0; j < w.cols; ++j) out[j] = di * prev[static_cast<size_t>(j)];
        }

        if (l > 1) {
            matvec_transposed(w, dtilde, back);
            for (double& t : back) t *= scale;
            if (cfg.arch == Arch::resnet)
                for (size_t i = 0; i < back.size(); ++i) back[i] += delta[i];  // skip path
            delta = back;
        }
    }
    return grad;
}

LossGradient loss_and_gradient(const NetworkConfig& cfg, const NetworkParams& params, std::span<const double> x,
                               double y, bool relaxed_input) {
    const ForwardCache cache = forward(cfg, params, x, relaxed_input);
    const double residual = cache.output - y;  // d loss / d f
    LossGradient out;
    out.loss = 0.5 * residual * residual;

    Vec cot(params.last_layer.size());
    for (size_t i = 0; i < cot.size(); ++i) cot[i] = residual * params.last_layer[i];
    out.grad = weight_gradient_of_featurizer_functional(cfg, params, cache, cot);
    out.grad.reserve(out.grad.size() + params.last_layer.size());
    const Vec& alphaL = cache.activations.back();
    for (double a : alphaL) out.grad.push_back(residual * a);
    return out;
}

NetworkParams project_to_ball(const NetworkParams& params, const SpectralBall& ball) {
    if (params.weights.size() != ball.center.weights.size())
        throw std::invalid_argument("project_to_ball: shape mismatch");
    NetworkParams out = params;
    for (size_t l = 0; l < params.weights.size(); ++l) {
        if (!params.weights[l].same_shape(ball.center.weights[l]))
            throw std::invalid_argument("project_to_ball: shape mismatch");
        Matrix dev = params.weights[l] - ball.center.weights[l];
        const double top = spectral_norm(dev);
        if (top <= ball.rho) continue;
        SvdResult svd = jacobi_svd(dev);
        Matrix clipped(dev.rows, dev.cols);
        Vec ucol(dev.rows), vcol(dev.cols);
        for (size_t k = 0; k < svd.sigma.size(); ++k) {
            const double s = std::min(svd.sigma[k], ball.rho);
            if (s == 0.0) continue;
            for (int i = 0; i < dev.rows; ++i) ucol[static_cast<size_t>(i)] = svd.u.at(i, static_cast<int>(k));
            for (int j = 0; j < dev.cols; ++j) vcol[static_cast<size_t>(j)] = svd.v.at(j, static_cast<int>(k));
            add_outer(clipped, s, ucol, vcol);
        }
        out.weights[l] = ball.center.weights[l] + clipped;
    }
    Vec dv = params.last_layer;
    axpy(-1.0, ball.center.last_layer, dv);
    const double dn = norm2(dv);
    if (dn > ball.rho1) {
        const double f = ball.rho1 / dn;
        out.last_layer = ball.center.last_layer;
        axpy(f, dv, out.last_layer);
    }
    return out;
}

namespace {

double binomial_threshold(double stated, int trials) {
    const double se = std::sqrt(std::max(stated * (1.0 - stated), 0.0) / static_cast<double>(trials));
    return stated - 3.0 * se;
}

}  // namespace

bool FrequencyCheck::all_pass() const {
    for (size_t i = 0; i < frequency.size(); ++i)
        if (frequency[i] < threshold[i]) return false;
    return true;
}

FrequencyCheck init_spectral_check(const NetworkConfig& cfg, double rho, int trials, RngStream& rng) {
    cfg.validate();
    if (trials < 100) throw std::invalid_argument("init_spectral_check: trials must be >= 100");
    std::vector<long> hits(static_cast<size_t>(cfg.depth), 0);
    for (int t = 0; t < trials; ++t) {
        RngStream sub = rng.substream(static_cast<std::uint64_t>(t));
        const NetworkParams p0 = init_network(cfg, sub);
        for (int l = 1; l <= cfg.depth; ++l) {
            const Matrix& w0 = p0.weights[static_cast<size_t>(l) - 1];
            // The worst ball-boundary perturbation is rho times the top
            // singular pair, and || W0 + rho u1 v1^T || = sigma_max(W0) + rho
            // exactly (same singular vectors, top value shifted).
            const double perturbed = top_singular_value_lanczos(w0) + rho;
            const double bound = cfg.beta(l, rho) * std::sqrt(static_cast<double>(cfg.width(l)));
            if (perturbed <= bound * (1.0 + 1e-12)) ++hits[static_cast<size_t>(l) - 1];
        }
    }
    FrequencyCheck out;
    for (int l = 1; l <= cfg.depth; ++l) {
        out.frequency.push_back(static_cast<double>(hits[static_cast<size_t>(l) - 1]) / trials);
        out.threshold.push_back(binomial_threshold(1.0 - 2.0 / cfg.width(l), trials));
    }
    return out;
}

double param_jacobian_norm(const NetworkConfig& cfg, const ForwardCache& cache, int l) {
    const Vec& pre = cache.preactivations[static_cast<size_t>(l) - 1];
    const Vec& prev = cache.activations[static_cast<size_t>(l) - 1];
    double max_phi = 0.0;
    for (double t : pre) max_phi = std::max(max_phi, std::fabs(activation_derivative(cfg.activation, t)));
    const double scale = cfg.arch == Arch::resnet
                             ? 1.0 / (static_cast<double>(cfg.depth) * std::sqrt(static_cast<double>(cfg.width(l))))
                             : 1.0 / std::sqrt(static_cast<double>(cfg.width(l)));
    return scale * max_phi * norm2(prev);
}

Matrix layer_jacobian(const NetworkConfig& cfg, const NetworkParams& params, const ForwardCache& cache, int l) {
    const Matrix& w = params.weights[static_cast<size_t>(l) - 1];
    const Vec& pre = cache.preactivations[static_cast<size_t>(l) - 1];
    const double scale = cfg.arch == Arch::resnet
                             ? 1.0 / (static_cast<double>(cfg.depth) * std::sqrt(static_cast<double>(cfg.width(l))))
                             : 1.0 / std::sqrt(static_cast<double>(cfg.width(l)));
    Matrix j(w.rows, w.cols);
    for (int i = 0; i < w.rows; ++i) {
        const double d = scale * activation_derivative(cfg.activation, pre[static_cast<size_t>(i)]);
        for (int c = 0; c < w.cols; ++c) j.at(i, c) = d * w.at(i, c);
    }
    if (cfg.arch == Arch::resnet)
        for (int i = 0; i < j.rows; ++i) j.at(i, i) += 1.0;
    return j;
}

LayerBoundReport layer_bound_checks(const NetworkConfig& cfg, double rho, double rho1, int trials, RngStream& rng) {
    cfg.validate();
    if (trials < 100) throw std::invalid_argument("layer_bound_checks: trials must be >= 100");
    const int L = cfg.depth;
    std::vector<long> hit_out(static_cast<size_t>(L), 0);
    std::vector<long> hit_jac(static_cast<size_t>(L), 0);  // index l-1, used for l >= 2
    std::vector<long> hit_par(static_cast<size_t>(L), 0);

    for (int t = 0; t < trials; ++t) {
        RngStream sub = rng.substream(static_cast<std::uint64_t>(t));
        RngStream init_rng = sub.substream("init");
        RngStream dir_rng = sub.substream("boundary");
        RngStream input_rng = sub.substream("input");

        NetworkParams p = init_network(cfg, init_rng);
        for (int l = 1; l <= L; ++l) {
            Matrix& w = p.weights[static_cast<size_t>(l) - 1];
            const Vec u = dir_rng.unit_sphere_vector(w.rows);
            const Vec v = dir_rng.unit_sphere_vector(w.cols);
            add_outer(w, rho, u, v);  // spectral deviation exactly rho, random direction
        }
        const Vec dv = dir_rng.unit_sphere_vector(cfg.width(L));
        axpy(rho1, dv, p.last_layer);

        const Vec x = input_rng.unit_sphere_vector(cfg.input_dim);
        const ForwardCache cache = forward(cfg, p, x);

        for (int l = 1; l <= L; ++l) {
            double out_bound = 1.0, jac_bound = 0.0, par_bound = 0.0;
            if (cfg.arch == Arch::ffn) {
                out_bound = cfg.beta_product(l, rho);
                jac_bound = cfg.beta(l, rho);
                par_bound = cfg.beta_product(l - 1, rho) / std::sqrt(static_cast<double>(cfg.width(l)));
            } else {
                for (int k = 1; k <= l; ++k) out_bound *= 1.0 + cfg.beta(k, rho) / L;
                jac_bound = 1.0 + cfg.beta(l, rho) / L;
                double prodp = 1.0;
                for (int k = 1; k < l; ++k) prodp *= 1.0 + cfg.beta(k, rho) / L;
                par_bound = prodp / (static_cast<double>(L) * std::sqrt(static_cast<double>(cfg.width(l))));
            }
            const double tol = 1.0 + 1e-12;
            if (norm2(cache.activations[static_cast<size_t>(l)]) <= out_bound * tol)
                ++hit_out[static_cast<size_t>(l) - 1];
            if (l >= 2 && top_singular_value_lanczos(layer_jacobian(cfg, p, cache, l)) <= jac_bound * tol)
                ++hit_jac[static_cast<size_t>(l) - 1];
            if (param_jacobian_norm(cfg, cache, l) <= par_bound * tol) ++hit_par[static_cast<size_t>(l) - 1];
        }
    }

    LayerBoundReport rep;
    for (int l = 1; l <= L; ++l) {
        double sum_inv = 0.0;
        for (int k = 1; k <= l; ++k) sum_inv += 2.0 / cfg.width(k);
        rep.layer_output.frequency.push_back(static_cast<double>(hit_out[static_cast<size_t>(l) - 1]) / trials);
        rep.layer_output.threshold.push_back(binomial_threshold(std::max(0.0, 1.0 - sum_inv), trials));
        if (l >= 2) {
            rep.jacobian.frequency.push_back(static_cast<double>(hit_jac[static_cast<size_t>(l) - 1]) / trials);
            rep.jacobian.threshold.push_back(binomial_threshold(1.0 - 2.0 / cfg.width(l), trials));
        }
        double sum_prev = 0.0;
        for (int k = 1; k < l; ++k) sum_prev += 2.0 / cfg.width(k);
        rep.param_gradient.frequency.push_back(static_cast<double>(hit_par[static_cast<size_t>(l) - 1]) / trials);
        rep.param_gradient.threshold.push_back(binomial_threshold(std::max(0.0, 1.0 - sum_prev), trials));
    }
    return rep;
}

bool LayerBoundReport::all_pass() const {
    return layer_output.all_pass() && jacobian.all_pass() && param_gradient.all_pass();
}

}  // namespace gradgeom
