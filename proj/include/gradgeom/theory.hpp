#pragma once

#include <string>
#include <vector>

#include "gradgeom/geometry.hpp"
#include "gradgeom/network.hpp"
#include "gradgeom/rng.hpp"

namespace gradgeom {

// Tail verification of the shifted increment condition: for vectors with
// sum ||v_i||^2 <= n, the norm Z = ||(1/sqrt n) sum eps_i v_i|| concentrates
// around its mean mu with P(|Z - mu| >= u) <= 2 exp(-u^2 / 2).
struct TailCheckReport {
    Vec u_grid;
    Vec empirical_tail;
    Vec bound;  // 2 exp(-u^2/2)
    double mu_hat = 0.0;
    int n = 0;
    long trials = 0;
    bool exhaustive = false;
    bool tail_ok = false;
    bool mu_ok = false;
    bool passed() const { return tail_ok && mu_ok; }
};

Vec default_sic_u_grid();  // {0, 0.5, 1, 1.5, 2, 2.5, 3}

// Exact enumeration of all 2^n sign patterns (n <= 16).
TailCheckReport sic_tail_check_exhaustive(const std::vector<Vec>& vectors, const Vec& u_grid = default_sic_u_grid());
// Monte-Carlo sign draws; the tail assertion carries 3 binomial standard
// errors of slack and the mu check 3 standard errors of the mean.
TailCheckReport sic_tail_check_mc(const std::vector<Vec>& vectors, long trials, RngStream& rng,
                                  const Vec& u_grid = default_sic_u_grid());
// Exhaustive when n <= 16, Monte-Carlo otherwise.
TailCheckReport sic_tail_check(const std::vector<Vec>& vectors, long mc_trials, RngStream& rng,
                               const Vec& u_grid = default_sic_u_grid());

// Builds v_i = (xi_{i,a} - xi_{i,b}) / dbar from the gradients of two ball
// points (so sum ||v_i||^2 = n exactly) and runs the tail check.
TailCheckReport sic_from_gradients(const GradientSetSpec& spec, const NetworkParams& theta_a,
                                   const NetworkParams& theta_b, long mc_trials, RngStream& rng);

struct BoundReport {
    double bound_value = 0.0;
    double featurizer_term = 0.0;
    double second_term = 0.0;
    double e_beta_envelope = -1.0;  // resnet equal-width envelope; < 0 when n/a
    std::string convention = "all symbolic constants = 1";
};

// w <= featurizer_width + (1 + rho1) sqrt(m_L) (prod beta_l) sum 1/(beta_l sqrt(m_l))
BoundReport ffn_width_bound(const NetworkConfig& cfg, double rho, double rho1, double featurizer_width);
// w <= featurizer_width + ((1 + rho1)/L) sqrt(m_L) (prod (1 + beta_l/L)) sum 1/((1 + beta_l/L) sqrt(m_l))
BoundReport resnet_width_bound(const NetworkConfig& cfg, double rho, double rho1, double featurizer_width);

// 2 cbar ( ||grad||^alpha + 2 (4 width / sqrt(n) + log(1/delta)/n)^alpha )
//   + (log(1/delta)/n)^(alpha/2), the alpha = 1 case being the headline form.
double generalization_bound_eval(double empirical_grad_norm, double width, long n, double delta, double cbar1,
                                 double alpha = 1.0);

struct WidthVsBoundResult {
    WidthEstimate lggw;
    WidthEstimate featurizer_width;
    BoundReport bound;
    double c_star = 0.0;  // smallest c with estimate <= c * bound (0 when both vanish)
};

// Single-sample consistency check of the architecture width bounds against
// the estimators; constants stay symbolic so only the fitted c* is reported.
WidthVsBoundResult width_vs_bound_check(const GradientSetSpec& spec, RngStream& rng, int outer,
                                        const InnerBudget& budget);

}  // namespace gradgeom
