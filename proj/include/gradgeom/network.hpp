#pragma once

#include <string>
#include <vector>

#include "gradgeom/matrix.hpp"
#include "gradgeom/rng.hpp"

#include "json.hpp"

namespace gradgeom {

enum class Arch { ffn, resnet };
enum class Activation { relu, tanh };

// Depth-L network: layer widths m_1..m_L, scalar output f = v^T alpha^(L).
// FFN:    alpha^(l) = phi(W^(l) alpha^(l-1) / sqrt(m_l))
// ResNet: alpha^(l) = alpha^(l-1) + phi(W^(l) alpha^(l-1) / (L sqrt(m_l)))
// ResNet layers must share one width; the input is zero-padded to it.
struct NetworkConfig {
    Arch arch = Arch::ffn;
    int depth = 1;
    std::vector<int> widths;
    int input_dim = 1;
    double sigma1 = 1.0;
    Activation activation = Activation::tanh;

    void validate() const;
    int width(int l) const { return widths[static_cast<size_t>(l) - 1]; }  // l in [1, depth]
    int layer_input_dim(int l) const;
    long param_dim() const;
    // Initialization std-dev sigma_0^(l) for layer l.
    double layer_init_std(int l) const;
    double beta(int l, double rho) const { return sigma1 + rho / std::sqrt(static_cast<double>(width(l))); }
    double beta_product(int upto, double rho) const;  // prod_{k<=upto} beta_k
};

struct NetworkParams {
    std::vector<Matrix> weights;  // W^(1)..W^(L)
    Vec last_layer;               // v, length m_L

    void validate_shapes(const NetworkConfig& cfg) const;
    long param_dim() const;
    Vec flatten() const;  // [vec(W1); ...; vec(WL); v]
    static NetworkParams unflatten(const NetworkConfig& cfg, std::span<const double> theta);

    nlohmann::ordered_json to_json() const;
    static NetworkParams from_json(const nlohmann::json& j);
};

struct SpectralBall {
    NetworkParams center;
    double rho = 0.0;
    double rho1 = 0.0;

    bool contains(const NetworkParams& p, double slack = 1e-7) const;
};

struct ForwardCache {
    std::vector<Vec> activations;     // alpha^(0)..alpha^(L)
    std::vector<Vec> preactivations;  // tilde-alpha^(1)..tilde-alpha^(L)
    double output = 0.0;              // f = v^T alpha^(L)
};

double activation_value(Activation a, double x);
double activation_derivative(Activation a, double x);  // relu kink: phi'(0) = 0

// Width-scaled Gaussian init; v drawn uniformly on the unit sphere.
NetworkParams init_network(const NetworkConfig& cfg, RngStream& rng);

// relaxed_input lifts the unit-norm input check (used by the zero-input tests).
ForwardCache forward(const NetworkConfig& cfg, const NetworkParams& params, std::span<const double> x,
                     bool relaxed_input = false);

Vec featurizer(const ForwardCache& cache);  // alpha^(L)

// Gradient of <cot, alpha^(L)> with respect to the stacked weight vector
// [vec(W1); ...; vec(WL)] (last-layer block excluded).
Vec weight_gradient_of_featurizer_functional(const NetworkConfig& cfg, const NetworkParams& params,
                                             const ForwardCache& cache, std::span<const double> cot);

struct LossGradient {
    double loss = 0.0;
    Vec grad;  // full length-p stacked gradient
};

// Squared loss l = (y - f)^2 / 2 and its full parameter gradient by reverse
// accumulation.
LossGradient loss_and_gradient(const NetworkConfig& cfg, const NetworkParams& params, std::span<const double> x,
                               double y, bool relaxed_input = false);

// Clips each layer deviation to spectral norm rho (SVD clip) and the
// last-layer deviation to L2 norm rho1.
NetworkParams project_to_ball(const NetworkParams& params, const SpectralBall& ball);

// Per-layer empirical frequency of || W0^(l) + rho u1 v1^T ||_2 <= beta_l sqrt(m_l)
// with the rank-one perturbation aligned with the top singular pair (the
// worst case at spectral radius rho).
struct FrequencyCheck {
    std::vector<double> frequency;      // per layer
    std::vector<double> threshold;      // stated probability minus 3 binomial SEs
    bool all_pass() const;
};

FrequencyCheck init_spectral_check(const NetworkConfig& cfg, double rho, int trials, RngStream& rng);

// Boundary-of-ball frequency checks for the layer-output, layer Jacobian and
// parameter-gradient norm bounds. Evaluated at W = W0 + rho * (random rank-one
// unit perturbation), v = v0 + rho1 * (random unit vector), random unit input.
struct LayerBoundReport {
    FrequencyCheck layer_output;    // ||alpha^(l)|| vs its product bound
    FrequencyCheck jacobian;        // ||d alpha^(l) / d alpha^(l-1)||, layers 2..L
    FrequencyCheck param_gradient;  // ||d alpha^(l) / d w^(l)||
    bool all_pass() const;
};

LayerBoundReport layer_bound_checks(const NetworkConfig& cfg, double rho, double rho1, int trials, RngStream& rng);

// Exact spectral norm of d alpha^(l) / d w^(l): the Jacobian rows are disjoint
// slices, so it is max_i |phi'(tilde_i)| * ||alpha^(l-1)|| / scale.
double param_jacobian_norm(const NetworkConfig& cfg, const ForwardCache& cache, int l);

// Dense layer-to-layer Jacobian d alpha^(l) / d alpha^(l-1).
Matrix layer_jacobian(const NetworkConfig& cfg, const NetworkParams& params, const ForwardCache& cache, int l);

}  // namespace gradgeom
