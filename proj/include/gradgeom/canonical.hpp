#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gradgeom/matrix.hpp"
#include "gradgeom/rng.hpp"

#include "json.hpp"

namespace gradgeom {

// Structured sets with exact support functions: the width oracles.
struct CanonicalSet {
    enum class Kind { l2_ball, ellipsoid, k_support_ball, finite_cloud, union_of, minkowski_sum };

    Kind kind = Kind::l2_ball;
    int dim = 0;
    double radius = 0.0;                     // l2_ball, k_support_ball
    int k = 0;                               // k_support_ball
    Vec semi_axes;                           // ellipsoid (entries >= 0, zeros allowed)
    std::vector<Vec> points;                 // finite_cloud
    std::vector<CanonicalSet> parts;         // union_of, minkowski_sum

    static CanonicalSet l2_ball(int dim, double radius);
    static CanonicalSet ellipsoid(Vec semi_axes);
    static CanonicalSet k_support_ball(int dim, int k, double radius);
    static CanonicalSet finite_cloud(std::vector<Vec> points);
    static CanonicalSet union_of(std::vector<CanonicalSet> parts);
    static CanonicalSet minkowski_sum(std::vector<CanonicalSet> parts);

    void validate() const;
    std::string describe() const;

    nlohmann::ordered_json to_json() const;
    static CanonicalSet from_json(const nlohmann::json& j);
};

struct InnerDiagnostics {
    long ascent_wins = 0;
    long outer = 0;
    double win_fraction() const { return outer > 0 ? static_cast<double>(ascent_wins) / outer : 0.0; }
};

struct WidthEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long outer_samples = 0;
    std::optional<InnerDiagnostics> inner;
};

// Exact sup_{x in s} <x, g>.
double support_function(const CanonicalSet& s, std::span<const double> g);

// Monte-Carlo Gaussian width: mean of support_function over i.i.d. standard
// normal draws, one substream per outer sample.
WidthEstimate mc_width(const CanonicalSet& s, RngStream& rng, long samples);

// Closed-form upper bound from the structured-set catalogue, with every
// symbolic constant fixed to 1. Supported: l2_ball, ellipsoid,
// k_support_ball, union of finite clouds. Throws otherwise.
double analytic_width_bound(const CanonicalSet& s);

struct ProjectionWidthCheck {
    WidthEstimate whole;
    WidthEstimate part1;
    WidthEstimate part2;
    bool subadditive(double num_std_errors = 3.0) const;
};

// Width of a finite cloud against the widths of its two coordinate
// projections (first d1 coordinates / the rest).
ProjectionWidthCheck projection_width_check(const CanonicalSet& cloud, int d1, RngStream& rng, long samples);

}  // namespace gradgeom
