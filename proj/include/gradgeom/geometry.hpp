#pragma once

#include <memory>
#include <vector>

#include "gradgeom/canonical.hpp"  // WidthEstimate, InnerDiagnostics
#include "gradgeom/network.hpp"
#include "gradgeom/rng.hpp"

namespace gradgeom {

// A network, a spectral ball around its initialization, and n fixed samples.
struct GradientSetSpec {
    NetworkConfig cfg;
    SpectralBall ball;
    std::vector<Vec> inputs;
    Vec targets;

    int n() const { return static_cast<int>(inputs.size()); }
    void validate() const;
};

// (1/sqrt(n))-scaled concatenation of the n per-sample loss gradients.
struct StackedGradient {
    Vec entries;  // length n * p
    int n = 0;
    long p = 0;
};

StackedGradient stacked_gradient(const GradientSetSpec& spec, const NetworkParams& params);

// Parameter families the width estimators maximize over. gradients() is the
// raw evaluation map (no ball membership check); membership is enforced by
// the operations that promise it.
class GradientFamily {
public:
    virtual ~GradientFamily() = default;
    virtual long param_dim() const = 0;
    virtual int sample_count() const = 0;
    virtual void gradients(std::span<const double> theta, std::vector<Vec>& out) const = 0;
    virtual Vec center() const = 0;
    virtual Vec random_point(RngStream& rng) const = 0;
    virtual void project(Vec& theta) const = 0;
    virtual double ball_scale() const = 0;  // 0 means a singleton parameter set
};

class NetworkGradientFamily final : public GradientFamily {
public:
    explicit NetworkGradientFamily(GradientSetSpec spec);
    long param_dim() const override { return p_; }
    int sample_count() const override { return spec_.n(); }
    void gradients(std::span<const double> theta, std::vector<Vec>& out) const override;
    Vec center() const override;
    Vec random_point(RngStream& rng) const override;
    void project(Vec& theta) const override;
    double ball_scale() const override { return std::max(spec_.ball.rho, spec_.ball.rho1); }
    const GradientSetSpec& spec() const { return spec_; }

private:
    GradientSetSpec spec_;
    long p_ = 0;
};

// f(theta; x) = <theta, x> with squared loss, theta confined to the box
// [center - rho, center + rho]^d (the "interval ball").
class LinearModelFamily final : public GradientFamily {
public:
    LinearModelFamily(Vec center, double rho, std::vector<Vec> xs, Vec ys);
    long param_dim() const override { return static_cast<long>(center_.size()); }
    int sample_count() const override { return static_cast<int>(xs_.size()); }
    void gradients(std::span<const double> theta, std::vector<Vec>& out) const override;
    Vec center() const override { return center_; }
    Vec random_point(RngStream& rng) const override;
    void project(Vec& theta) const override;
    double ball_scale() const override { return rho_; }

private:
    Vec center_;
    double rho_;
    std::vector<Vec> xs_;
    Vec ys_;
};

// Singleton parameter set with fixed per-sample gradients.
class FixedGradientFamily final : public GradientFamily {
public:
    explicit FixedGradientFamily(std::vector<Vec> grads);
    long param_dim() const override { return p_; }
    int sample_count() const override { return static_cast<int>(grads_.size()); }
    void gradients(std::span<const double> theta, std::vector<Vec>& out) const override;
    Vec center() const override { return Vec(static_cast<size_t>(p_), 0.0); }
    Vec random_point(RngStream&) const override { return center(); }
    void project(Vec&) const override {}
    double ball_scale() const override { return 0.0; }

private:
    std::vector<Vec> grads_;
    long p_ = 0;
};

struct InnerBudget {
    int restarts = 8;
    int steps = 50;
    double step_factor = 0.1;  // initial step = step_factor * ball scale
};

// Monte-Carlo LGGW lower estimate: for each outer Gaussian draw, the inner
// sup over theta is approximated by multi-start projected gradient ascent
// (directional finite differences of the per-sample gradients supply the
// ascent direction) plus a pure random-search baseline.
WidthEstimate lggw_estimate(const GradientFamily& family, RngStream& rng, int outer, const InnerBudget& budget);

enum class RademacherOuter { monte_carlo, exhaustive };

// NERC estimate (1/n) E_eps sup_theta || sum_i eps_i xi_i(theta) ||_2 with the
// same inner machinery. Exhaustive mode enumerates all 2^n sign patterns
// (n <= 16) and makes the outer expectation exact.
WidthEstimate nerc_estimate(const GradientFamily& family, RngStream& rng, int outer, const InnerBudget& budget,
                            RademacherOuter mode = RademacherOuter::monte_carlo);

// Absolute coordinates of the mean gradient, sorted ascending.
Vec sorted_gradient_profile(const GradientSetSpec& spec, const NetworkParams& params);

struct SparsityReport {
    std::vector<long> l0;  // per sample
    Vec l1;
    double l0_mean = 0.0, l1_mean = 0.0;
    long l0_max = 0;
    double l1_max = 0.0;
};

SparsityReport featurizer_sparsity(const GradientSetSpec& spec, const NetworkParams& params, double l0_threshold);

// Width of the single-sample featurizer set A^(L)(x) over the weight ball
// (rho1 plays no role: the featurizer does not involve v). Exact first-order
// ascent via the reverse pass of <alpha^(L), g>.
WidthEstimate featurizer_width_estimate(const GradientSetSpec& spec, RngStream& rng, int outer,
                                        const InnerBudget& budget);

// Max per-sample gradient norm over `points` random ball points (a bounded-gradient
// probe over the parameter set).
double max_gradient_norm_sweep(const GradientFamily& family, long points, RngStream& rng);

}  // namespace gradgeom
