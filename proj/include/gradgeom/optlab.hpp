#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gradgeom/network.hpp"
#include "gradgeom/numerics.hpp"
#include "gradgeom/rng.hpp"

namespace gradgeom {

// One data point. Quadratic models carry only y (the scalar observation z).
struct Sample {
    Vec x;
    double y = 0.0;
};

// Synthetic data source. quadratic1d: z ~ N(mean, noise^2) with loss
// (theta - z)^2 / 2. linear: x ~ N(0, I), y = <w*, x> + noise. network:
// x uniform on the unit sphere, y = f(teacher; x) + noise.
struct TeacherDistribution {
    enum class Kind { quadratic1d, linear, network };
    Kind kind = Kind::quadratic1d;
    double noise_std = 0.0;
    double quad_mean = 0.0;
    Vec linear_weights;
    NetworkConfig net_cfg;
    NetworkParams net_params;

    int student_dim() const;
    Sample draw(RngStream& rng) const;
    std::vector<Sample> draw_many(RngStream& rng, long count) const;
    bool has_analytic_population() const { return kind != Kind::network; }
    // Population loss at the minimizer: the noise floor noise_std^2 / 2.
    double optimal_population_loss() const { return 0.5 * noise_std * noise_std; }
};

// Student model of the matching family; theta is its flat parameter vector.
struct StudentModel {
    TeacherDistribution::Kind kind = TeacherDistribution::Kind::quadratic1d;
    int dim = 1;
    NetworkConfig net_cfg;  // network kind only

    static StudentModel for_teacher(const TeacherDistribution& dist);
    double sample_loss(std::span<const double> theta, const Sample& s) const;
    void add_sample_grad(std::span<const double> theta, const Sample& s, double weight, Vec& acc) const;
    Vec mean_gradient(std::span<const double> theta, const std::vector<Sample>& samples) const;
    double mean_loss(std::span<const double> theta, const std::vector<Sample>& samples) const;
};

struct PopulationOracle {
    enum class Mode { analytic, fresh_mc };
    Mode mode = Mode::analytic;
    long fresh_samples = 0;  // M, fresh_mc only

    static PopulationOracle analytic();
    static PopulationOracle fresh_mc(long m);
};

struct PopulationEval {
    Vec gradient;
    double grad_std_error = 0.0;  // 0 in analytic mode
    double loss = 0.0;
};

// Exact population gradient/loss for the quadratic and linear models;
// an M-fresh-sample unbiased estimate otherwise.
PopulationEval population_gradient(const TeacherDistribution& dist, const StudentModel& model,
                                   std::span<const double> theta, const PopulationOracle& oracle, RngStream& rng);

struct GdStep {
    int t = 0;
    double loss = 0.0;  // empirical loss on the reused samples
    double emp_grad_norm = 0.0;
    double pop_grad_norm = 0.0;
    double delta = 0.0;  // || empirical mean gradient - population gradient ||
    double ratio_a1 = 0.0;
    double ratio_a2 = 0.0;
    bool ratio_defined = false;  // false when the population gradient is ~0
    std::uint64_t theta_hash = 0;
    std::optional<Vec> theta_snapshot;
};

struct GdTrace {
    std::vector<GdStep> steps;
    Vec final_theta;
    double max_delta = 0.0;
    Vec delta_by_step;  // delta at t = 0..T
};

// Plain GD re-using one fixed batch of n samples at every step, with the
// per-step deviation Delta(theta_t) tracked against the population oracle.
// Aborts when the empirical loss exceeds 1e6 times its initial value.
GdTrace gd_with_reuse(const TeacherDistribution& dist, const StudentModel& model, const Vec& theta0, double eta,
                      int T, long n, RngStream& rng, const PopulationOracle& oracle);

struct RatioSequence {
    std::vector<double> values;  // defined steps only
    std::vector<int> steps;
    double max_value = 0.0;
};

// (L_D(theta_t) - L_D(theta*)) / ||grad L_D(theta_t)||^alpha per step;
// near-stationary steps are flagged rather than reported.
RatioSequence gd_ratio_trace(const GdTrace& trace, int alpha);

struct ReuseScalingResult {
    std::vector<long> n_grid;
    Vec max_delta_mean;  // averaged over trials
    Vec max_delta_se;
    double slope_log_n = 0.0;  // fit of log maxDelta against log n
    std::vector<long> t_grid;
    Vec max_delta_by_t;        // prefix maxima at fixed n, averaged over trials
    double exponent_log_t = 0.0;
};

ReuseScalingResult reuse_scaling_experiment(const TeacherDistribution& dist, const StudentModel& model, double eta,
                                            int T, const std::vector<long>& n_grid, int trials, RngStream& rng,
                                            const PopulationOracle& oracle);

struct ConvergenceResult {
    double metric = 0.0;  // (1/T) sum_t ||grad L_D(theta_t)||^2
    double tau_hat = 0.0;
    double eta = 0.0;
    Vec pop_grad_sq_by_step;
};

// Lipschitz-constant probe: max ||grad L_D(a) - grad L_D(b)|| / ||a - b||
// over random nearby pairs.
double estimate_gradient_lipschitz(const TeacherDistribution& dist, const StudentModel& model, const Vec& theta0,
                                   double probe_radius, int pairs, RngStream& rng, const PopulationOracle& oracle);

// GD-with-reuse run at eta = 1 / (4 tau_hat); reports the mean squared
// population gradient norm over the trajectory.
ConvergenceResult population_convergence_experiment(const TeacherDistribution& dist, const StudentModel& model,
                                                    const Vec& theta0, int T, long n, RngStream& rng,
                                                    const PopulationOracle& oracle);

}  // namespace gradgeom
