#include <cmath>

#include "doctest.h"
#include "gradgeom/network.hpp"
#include "gradgeom/numerics.hpp"
#include "oracles.hpp"

using namespace gradgeom;

namespace {

NetworkConfig small_cfg(Arch arch, Activation act, int depth, std::vector<int> widths, int d, double sigma1) {
    NetworkConfig cfg;
    cfg.arch = arch;
    cfg.activation = act;
    cfg.depth = depth;
    cfg.widths = std::move(widths);
    cfg.input_dim = d;
    cfg.sigma1 = sigma1;
    cfg.validate();
    return cfg;
}

NetworkParams random_ball_point(const NetworkConfig& cfg, const NetworkParams& center, double rho, double rho1,
                                RngStream& rng) {
    NetworkParams p = center;
    for (Matrix& w : p.weights)
        for (double& x : w.data) x += rho * rng.gaussian() / std::sqrt(static_cast<double>(w.cols));
    if (rho1 > 0.0) axpy(rho1 * rng.uniform01(), rng.unit_sphere_vector(static_cast<int>(p.last_layer.size())),
                         p.last_layer);
    SpectralBall ball{center, rho, rho1};
    return project_to_ball(p, ball);
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_THROWS_AS(small_cfg(Arch::ffn, Activation::tanh, 2, {4}, 2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(small_cfg(Arch::ffn, Activation::tanh, 1, {2}, 4, 1.0), std::invalid_argument);   // m1 < d
    CHECK_THROWS_AS(small_cfg(Arch::resnet, Activation::tanh, 2, {4, 6}, 2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(small_cfg(Arch::ffn, Activation::tanh, 1, {4}, 2, 0.0), std::invalid_argument);
    const NetworkConfig cfg = small_cfg(Arch::resnet, Activation::relu, 3, {5, 5, 5}, 3, 0.5);
    CHECK(cfg.param_dim() == 3 * 25 + 5);  // padded input makes W1 square
}

TEST_CASE("initialization statistics") {
    // log m1 = 0 at m1 = 1 gives sigma0 = sigma1 / 2
    const NetworkConfig tiny = small_cfg(Arch::ffn, Activation::tanh, 1, {1}, 1, 2.0);
    CHECK(tiny.layer_init_std(1) == doctest::Approx(1.0));

    const NetworkConfig cfg = small_cfg(Arch::ffn, Activation::tanh, 2, {16, 8}, 4, 0.7);
    RngStream rng(2024);
    // ||v0|| = 1 exactly
    for (int t = 0; t < 20; ++t) {
        RngStream sub = rng.substream(t);
        const NetworkParams p = init_network(cfg, sub);
        CHECK(norm2(p.last_layer) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // empirical std of W entries within 0.5% over ~1e6 draws
    for (int l = 1; l <= 2; ++l) {
        double sumsq = 0.0;
        long count = 0;
        RngStream stream = rng.substream(100 + l);
        while (count < 1000000) {
            const NetworkParams p = init_network(cfg, stream);
            const Matrix& w = p.weights[static_cast<size_t>(l) - 1];
            sumsq += norm2_squared(w.data);
            count += static_cast<long>(w.data.size());
        }
        const double sd = std::sqrt(sumsq / static_cast<double>(count));
        CHECK(std::fabs(sd - cfg.layer_init_std(l)) <= 0.005 * cfg.layer_init_std(l));
    }

    // layer-1 formula coincides with the generic one at equal widths
    const NetworkConfig eq = small_cfg(Arch::resnet, Activation::tanh, 2, {32, 32}, 8, 0.5);
    const double generic = eq.sigma1 / (1.0 + 1.0 + std::sqrt(2.0 * std::log(32.0) / 32.0));
    CHECK(eq.layer_init_std(1) == doctest::Approx(generic).epsilon(1e-12));
    CHECK(eq.layer_init_std(2) == doctest::Approx(generic).epsilon(1e-12));
}

TEST_CASE("forward trivial cases") {
    const NetworkConfig cfg = small_cfg(Arch::ffn, Activation::tanh, 2, {4, 3}, 2, 0.5);
    RngStream rng(1);
    const NetworkParams p = init_network(cfg, rng);

    CHECK_THROWS_AS(forward(cfg, p, Vec{0.5, 0.5}), std::invalid_argument);  // not unit norm
    CHECK_THROWS_AS(forward(cfg, p, Vec{1.0}), std::invalid_argument);       // wrong dim

    // zero input in test mode: phi(0) = 0 propagates
    const ForwardCache zc = forward(cfg, p, Vec{0.0, 0.0}, true);
    CHECK(zc.output == doctest::Approx(0.0));
    for (const Vec& a : zc.activations)
        for (double x : a) CHECK(x == doctest::Approx(0.0));

    // resnet with all W = 0: output is <v, padded x>
    const NetworkConfig rcfg = small_cfg(Arch::resnet, Activation::tanh, 2, {4, 4}, 2, 0.5);
    RngStream rng2(2);
    NetworkParams rp = init_network(rcfg, rng2);
    for (Matrix& w : rp.weights) w.data.assign(w.data.size(), 0.0);
    const Vec x = {0.6, 0.8};
    const ForwardCache rc = forward(rcfg, rp, x);
    CHECK(rc.activations.back()[0] == doctest::Approx(0.6));
    CHECK(rc.activations.back()[1] == doctest::Approx(0.8));
    CHECK(rc.activations.back()[2] == doctest::Approx(0.0));
    CHECK(rc.output == doctest::Approx(0.6 * rp.last_layer[0] + 0.8 * rp.last_layer[1]));

    // featurizer is the last activation; relu keeps it nonnegative
    const NetworkConfig rl = small_cfg(Arch::ffn, Activation::relu, 2, {4, 3}, 2, 0.5);
    RngStream rng3(3);
    const NetworkParams p3 = init_network(rl, rng3);
    const Vec h = featurizer(forward(rl, p3, Vec{1.0, 0.0}));
    for (double v : h) CHECK(v >= 0.0);
}

TEST_CASE("loss gradient matches finite differences for both archs and activations") {
    RngStream rng(77);
    int inst = 0;
    for (const Arch arch : {Arch::ffn, Arch::resnet}) {
        for (const Activation act : {Activation::tanh, Activation::relu}) {
            for (int rep = 0; rep < 25; ++rep) {
                RngStream sub = rng.substream(inst++);
                const int L = 1 + static_cast<int>(sub.next_u64() % 3);
                const int m = 2 + static_cast<int>(sub.next_u64() % 5);
                const int d = 1 + static_cast<int>(sub.next_u64() % std::min(m, 3));
                std::vector<int> widths;
                for (int l = 0; l < L; ++l)
                    widths.push_back(arch == Arch::resnet ? m : m + static_cast<int>(sub.next_u64() % 3));
                NetworkConfig cfg = small_cfg(arch, act, L, widths, d, 0.4 + 0.4 * sub.uniform01());
                NetworkParams center = init_network(cfg, sub);
                NetworkParams p = random_ball_point(cfg, center, 0.4, 0.3, sub);
                const Vec x = sub.unit_sphere_vector(d);
                const double y = sub.gaussian();

                const LossGradient lg = loss_and_gradient(cfg, p, x, y);
                const Vec theta = p.flatten();
                const Vec fd = oracle::finite_difference_gradient(
                    [&](const Vec& t) {
                        const NetworkParams q = NetworkParams::unflatten(cfg, t);
                        const ForwardCache c = forward(cfg, q, x);
                        const double r = c.output - y;
                        return 0.5 * r * r;
                    },
                    theta, 1e-5);
                REQUIRE(lg.grad.size() == fd.size());
                for (size_t j = 0; j < fd.size(); ++j) {
                    const double denom = std::max(std::fabs(lg.grad[j]), std::fabs(fd[j]));
                    if (denom <= 1e-8) continue;
                    CHECK(std::fabs(lg.grad[j] - fd[j]) / denom <= 1e-5);
                }
            }
        }
    }
}

TEST_CASE("depth-1 1x1 ffn closed form") {
    // f = v phi(w x), loss = (y - f)^2 / 2 (m1 = 1 so the 1/sqrt(m) factor drops)
    const NetworkConfig cfg = small_cfg(Arch::ffn, Activation::tanh, 1, {1}, 1, 0.5);
    NetworkParams p;
    p.weights.emplace_back(1, 1);
    p.weights[0].at(0, 0) = 0.7;
    p.last_layer = {1.3};
    const double x = 1.0, y = 0.4;
    const LossGradient lg = loss_and_gradient(cfg, p, Vec{x}, y);
    const double f = 1.3 * std::tanh(0.7);
    const double r = f - y;
    const double dphi = 1.0 - std::tanh(0.7) * std::tanh(0.7);
    CHECK(lg.loss == doctest::Approx(0.5 * r * r).epsilon(1e-14));
    CHECK(lg.grad[0] == doctest::Approx(r * 1.3 * dphi * x).epsilon(1e-14));
    CHECK(lg.grad[1] == doctest::Approx(r * std::tanh(0.7)).epsilon(1e-14));

    // zero input, zero target: everything vanishes
    const LossGradient z = loss_and_gradient(cfg, p, Vec{0.0}, 0.0, true);
    CHECK(z.loss == doctest::Approx(0.0));
    CHECK(norm2(z.grad) == doctest::Approx(0.0));
}

TEST_CASE("project_to_ball") {
    const NetworkConfig cfg = small_cfg(Arch::ffn, Activation::tanh, 2, {6, 4}, 3, 0.5);
    RngStream rng(11);
    const NetworkParams center = init_network(cfg, rng);
    SpectralBall ball{center, 0.5, 0.25};

    // inside: identity
    NetworkParams inside = center;
    inside.weights[0].at(0, 0) += 0.1;
    const NetworkParams same = project_to_ball(inside, ball);
    for (size_t i = 0; i < same.weights[0].data.size(); ++i)
        CHECK(same.weights[0].data[i] == inside.weights[0].data[i]);

    // radial clip of v: deviation of norm 2 rho1 shrinks to rho1 exactly
    NetworkParams vout = center;
    const Vec dir = rng.unit_sphere_vector(4);
    axpy(2.0 * ball.rho1, dir, vout.last_layer);
    const NetworkParams vclip = project_to_ball(vout, ball);
    Vec dv = vclip.last_layer;
    axpy(-1.0, center.last_layer, dv);
    CHECK(norm2(dv) == doctest::Approx(ball.rho1).epsilon(1e-12));

    // rank-one deviation of size 3 rho clips to rho in the same direction
    NetworkParams wout = center;
    const Vec u = rng.unit_sphere_vector(6), v = rng.unit_sphere_vector(3);
    add_outer(wout.weights[0], 3.0 * ball.rho, u, v);
    const NetworkParams wclip = project_to_ball(wout, ball);
    const Matrix dev = wclip.weights[0] - center.weights[0];
    CHECK(spectral_norm(dev) == doctest::Approx(ball.rho).epsilon(1e-9));
    Vec du(6);
    matvec(dev, v, du);
    for (int i = 0; i < 6; ++i)
        CHECK(du[static_cast<size_t>(i)] == doctest::Approx(ball.rho * u[static_cast<size_t>(i)]).epsilon(1e-8));

    // random far points land inside
    for (int t = 0; t < 20; ++t) {
        RngStream sub = rng.substream(t);
        NetworkParams far = center;
        for (Matrix& w : far.weights)
            for (double& xx : w.data) xx += sub.gaussian();
        axpy(1.0, sub.unit_sphere_vector(4), far.last_layer);
        CHECK(ball.contains(project_to_ball(far, ball)));
    }
}

TEST_CASE("param jacobian closed form equals dense construction") {
    RngStream rng(13);
    for (const Arch arch : {Arch::ffn, Arch::resnet}) {
        const NetworkConfig cfg = small_cfg(arch, Activation::tanh, 2, {5, 5}, 3, 0.6);
        RngStream sub = rng.substream(arch == Arch::ffn ? 0 : 1);
        const NetworkParams p = init_network(cfg, sub);
        const Vec x = sub.unit_sphere_vector(3);
        const ForwardCache cache = forward(cfg, p, x);
        for (int l = 1; l <= 2; ++l) {
            // dense d alpha^(l) / d w^(l): rows i, cols (j, j') with 1[i = j]
            const Vec& pre = cache.preactivations[static_cast<size_t>(l) - 1];
            const Vec& prev = cache.activations[static_cast<size_t>(l) - 1];
            const int ml = cfg.width(l), mp = static_cast<int>(prev.size());
            const double scale = arch == Arch::resnet ? 1.0 / (2.0 * std::sqrt(5.0)) : 1.0 / std::sqrt(5.0);
            Matrix dense(ml, ml * mp);
            for (int i = 0; i < ml; ++i)
                for (int jp = 0; jp < mp; ++jp)
                    dense.at(i, i * mp + jp) = scale *
                                               activation_derivative(cfg.activation, pre[static_cast<size_t>(i)]) *
                                               prev[static_cast<size_t>(jp)];
            CHECK(param_jacobian_norm(cfg, cache, l) == doctest::Approx(spectral_norm(dense)).epsilon(1e-9));
        }
    }
}

TEST_CASE("aligned rank-one perturbation shifts the top singular value exactly") {
    // the identity behind init_spectral_check's worst-case construction
    RngStream rng(4096);
    for (int trial = 0; trial < 30; ++trial) {
        RngStream sub = rng.substream(trial);
        Matrix w(8, 6);
        for (double& x : w.data) x = sub.gaussian();
        const double rho = 0.25 + sub.uniform01();
        const SvdResult svd = jacobi_svd(w);
        Matrix perturbed = w;
        Vec u(8), v(6);
        for (int i = 0; i < 8; ++i) u[static_cast<size_t>(i)] = svd.u.at(i, 0);
        for (int j = 0; j < 6; ++j) v[static_cast<size_t>(j)] = svd.v.at(j, 0);
        add_outer(perturbed, rho, u, v);
        CHECK(spectral_norm(perturbed) == doctest::Approx(svd.sigma.front() + rho).epsilon(1e-9));
    }
}

TEST_CASE("init spectral check and layer bounds at desk scale") {
    const NetworkConfig cfg = small_cfg(Arch::ffn, Activation::relu, 2, {32, 24}, 8, 0.5);
    RngStream rng(2025);
    RngStream r1 = rng.substream("init");
    const FrequencyCheck fc = init_spectral_check(cfg, 0.5, 200, r1);
    CHECK(fc.all_pass());

    RngStream r2 = rng.substream("layers");
    const LayerBoundReport rep = layer_bound_checks(cfg, 0.5, 0.3, 200, r2);
    CHECK(rep.all_pass());

    const NetworkConfig rcfg = small_cfg(Arch::resnet, Activation::tanh, 3, {24, 24, 24}, 8, 0.5);
    RngStream r3 = rng.substream("res");
    const LayerBoundReport rrep = layer_bound_checks(rcfg, 0.5, 0.3, 200, r3);
    CHECK(rrep.all_pass());

    CHECK_THROWS_AS(init_spectral_check(cfg, 0.5, 50, rng), std::invalid_argument);
}

TEST_CASE("activations are 1-lipschitz with phi(0) = 0") {
    CHECK(activation_value(Activation::relu, 0.0) == 0.0);
    CHECK(activation_value(Activation::tanh, 0.0) == 0.0);
    RngStream rng(77001);
    for (int t = 0; t < 2000; ++t) {
        const double a = 3.0 * rng.gaussian(), b = 3.0 * rng.gaussian();
        for (const Activation act : {Activation::relu, Activation::tanh}) {
            CHECK(std::fabs(activation_value(act, a) - activation_value(act, b)) <= std::fabs(a - b) + 1e-15);
            CHECK(std::fabs(activation_derivative(act, a)) <= 1.0);
        }
    }
}

TEST_CASE("params json round trip") {
    const NetworkConfig cfg = small_cfg(Arch::ffn, Activation::tanh, 2, {4, 3}, 2, 0.5);
    RngStream rng(3);
    const NetworkParams p = init_network(cfg, rng);
    const NetworkParams q = NetworkParams::from_json(p.to_json());
    CHECK(q.flatten() == p.flatten());
}

TEST_CASE("spectral ball membership") {
    const NetworkConfig cfg = small_cfg(Arch::ffn, Activation::tanh, 1, {3}, 2, 0.5);
    RngStream rng(9);
    const NetworkParams center = init_network(cfg, rng);
    SpectralBall ball{center, 0.2, 0.1};
    CHECK(ball.contains(center));
    NetworkParams far = center;
    far.weights[0].at(0, 0) += 1.0;
    CHECK_FALSE(ball.contains(far));
}
