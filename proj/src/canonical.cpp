#include "gradgeom/canonical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gradgeom/numerics.hpp"

namespace gradgeom {

namespace {

const char* kind_name(CanonicalSet::Kind k) {
    switch (k) {
        case CanonicalSet::Kind::l2_ball: return "l2_ball";
        case CanonicalSet::Kind::ellipsoid: return "ellipsoid";
        case CanonicalSet::Kind::k_support_ball: return "k_support_ball";
        case CanonicalSet::Kind::finite_cloud: return "finite_cloud";
        case CanonicalSet::Kind::union_of: return "union";
        case CanonicalSet::Kind::minkowski_sum: return "minkowski_sum";
    }
    return "?";
}

CanonicalSet::Kind kind_from_name(const std::string& s) {
    if (s == "l2_ball") return CanonicalSet::Kind::l2_ball;
    if (s == "ellipsoid") return CanonicalSet::Kind::ellipsoid;
    if (s == "k_support_ball") return CanonicalSet::Kind::k_support_ball;
    if (s == "finite_cloud") return CanonicalSet::Kind::finite_cloud;
    if (s == "union") return CanonicalSet::Kind::union_of;
    if (s == "minkowski_sum") return CanonicalSet::Kind::minkowski_sum;
    throw std::invalid_argument("canonical set: unknown variant '" + s + "'");
}

// Sum of the k largest squared entries of g.
double top_k_squared(std::span<const double> g, int k) {
    Vec sq(g.size());
    for (size_t i = 0; i < g.size(); ++i) sq[i] = g[i] * g[i];
    std::nth_element(sq.begin(), sq.begin() + (k - 1), sq.end(), std::greater<double>());
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += sq[i];
    return s;
}

}  // namespace

CanonicalSet CanonicalSet::l2_ball(int dim, double radius) {
    CanonicalSet s;
    s.kind = Kind::l2_ball;
    s.dim = dim;
    s.radius = radius;
    s.validate();
    return s;
}

CanonicalSet CanonicalSet::ellipsoid(Vec semi_axes) {
    CanonicalSet s;
    s.kind = Kind::ellipsoid;
    s.dim = static_cast<int>(semi_axes.size());
    s.semi_axes = std::move(semi_axes);
    s.validate();
    return s;
}

CanonicalSet CanonicalSet::k_support_ball(int dim, int k, double radius) {
    CanonicalSet s;
    s.kind = Kind::k_support_ball;
    s.dim = dim;
    s.k = k;
    s.radius = radius;
    s.validate();
    return s;
}

CanonicalSet CanonicalSet::finite_cloud(std::vector<Vec> points) {
    CanonicalSet s;
    s.kind = Kind::finite_cloud;
    s.dim = points.empty() ? 0 : static_cast<int>(points.front().size());
    s.points = std::move(points);
    s.validate();
    return s;
}

CanonicalSet CanonicalSet::union_of(std::vector<CanonicalSet> parts) {
    CanonicalSet s;
    s.kind = Kind::union_of;
    s.dim = parts.empty() ? 0 : parts.front().dim;
    s.parts = std::move(parts);
    s.validate();
    return s;
}

CanonicalSet CanonicalSet::minkowski_sum(std::vector<CanonicalSet> parts) {
    CanonicalSet s;
    s.kind = Kind::minkowski_sum;
    s.dim = parts.empty() ? 0 : parts.front().dim;
    s.parts = std::move(parts);
    s.validate();
    return s;
}

void CanonicalSet::validate() const {
    if (dim < 1) throw std::invalid_argument("canonical set: dim must be >= 1");
    switch (kind) {
        case Kind::l2_ball:
            if (!(radius > 0.0)) throw std::invalid_argument("l2_ball: radius must be positive");
            break;
        case Kind::ellipsoid:
            if (static_cast<int>(semi_axes.size()) != dim)
                throw std::invalid_argument("ellipsoid: semi-axes length must equal dim");
            for (double a : semi_axes)
                if (!(a >= 0.0) || !std::isfinite(a))
                    throw std::invalid_argument("ellipsoid: semi-axes must be finite and >= 0");
            break;
        case Kind::k_support_ball:
            if (!(radius > 0.0)) throw std::invalid_argument("k_support_ball: radius must be positive");
            if (k < 1 || k > dim) throw std::invalid_argument("k_support_ball: need 1 <= k <= dim");
            break;
        case Kind::finite_cloud:
            if (points.empty()) throw std::invalid_argument("finite_cloud: needs at least one point");
            for (const Vec& p : points)
                if (static_cast<int>(p.size()) != dim)
                    throw std::invalid_argument("finite_cloud: point dimension mismatch");
            break;
        case Kind::union_of:
        case Kind::minkowski_sum:
            if (parts.empty()) throw std::invalid_argument("union/minkowski_sum: needs at least one part");
            for (const CanonicalSet& p : parts) {
                if (p.dim != dim) throw std::invalid_argument("union/minkowski_sum: part dimension mismatch");
                p.validate();
            }
            break;
    }
}

std::string CanonicalSet::describe() const {
    std::string s = kind_name(kind);
    s += "(dim=" + std::to_string(dim);
    if (kind == Kind::k_support_ball) s += ",k=" + std::to_string(k);
    if (kind == Kind::l2_ball || kind == Kind::k_support_ball) s += ",r=" + std::to_string(radius);
    if (kind == Kind::finite_cloud) s += ",points=" + std::to_string(points.size());
    if (kind == Kind::union_of || kind == Kind::minkowski_sum) s += ",parts=" + std::to_string(parts.size());
    s += ")";
    return s;
}

nlohmann::ordered_json CanonicalSet::to_json() const {
    nlohmann::ordered_json j;
    j["variant"] = kind_name(kind);
    j["dim"] = dim;
    switch (kind) {
        case Kind::l2_ball: j["radius"] = radius; break;
        case Kind::ellipsoid: j["semi_axes"] = semi_axes; break;
        case Kind::k_support_ball:
            j["k"] = k;
            j["radius"] = radius;
            break;
        case Kind::finite_cloud: j["points"] = points; break;
        case Kind::union_of:
        case Kind::minkowski_sum: {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const CanonicalSet& p : parts) arr.push_back(p.to_json());
            j["parts"] = arr;
            break;
        }
    }
    return j;
}

CanonicalSet CanonicalSet::from_json(const nlohmann::json& j) {
    CanonicalSet s;
    s.kind = kind_from_name(j.at("variant").get<std::string>());
    s.dim = j.at("dim").get<int>();
    switch (s.kind) {
        case Kind::l2_ball: s.radius = j.at("radius").get<double>(); break;
        case Kind::ellipsoid: s.semi_axes = j.at("semi_axes").get<Vec>(); break;
        case Kind::k_support_ball:
            s.k = j.at("k").get<int>();
            s.radius = j.at("radius").get<double>();
            break;
        case Kind::finite_cloud: s.points = j.at("points").get<std::vector<Vec>>(); break;
        case Kind::union_of:
        case Kind::minkowski_sum:
            for (const auto& pj : j.at("parts")) s.parts.push_back(CanonicalSet::from_json(pj));
            break;
    }
    s.validate();
    return s;
}

double support_function(const CanonicalSet& s, std::span<const double> g) {
    if (static_cast<int>(g.size()) != s.dim) throw std::invalid_argument("support_function: dimension mismatch");
    switch (s.kind) {
        case CanonicalSet::Kind::l2_ball:
            return s.radius * norm2(g);
        case CanonicalSet::Kind::ellipsoid: {
            double acc = 0.0;
            for (int i = 0; i < s.dim; ++i) {
                const double t = s.semi_axes[i] * g[i];
                acc += t * t;
            }
            return std::sqrt(acc);
        }
        case CanonicalSet::Kind::k_support_ball:
            // dual of the k-support norm is the top-k L2 norm
            return s.radius * std::sqrt(top_k_squared(g, s.k));
        case CanonicalSet::Kind::finite_cloud: {
            double best = -std::numeric_limits<double>::infinity();
            for (const Vec& p : s.points) best = std::max(best, dot(p, g));
            return best;
        }
        case CanonicalSet::Kind::union_of: {
            double best = -std::numeric_limits<double>::infinity();
            for (const CanonicalSet& p : s.parts) best = std::max(best, support_function(p, g));
            return best;
        }
        case CanonicalSet::Kind::minkowski_sum: {
            double acc = 0.0;
            for (const CanonicalSet& p : s.parts) acc += support_function(p, g);  // shared g across parts
            return acc;
        }
    }
    throw std::logic_error("support_function: unreachable");
}

WidthEstimate mc_width(const CanonicalSet& s, RngStream& rng, long samples) {
    if (samples < 2) throw std::invalid_argument("mc_width: samples must be >= 2");
    s.validate();
    double sum = 0.0, sumsq = 0.0;
    for (long i = 0; i < samples; ++i) {
        RngStream sub = rng.substream(static_cast<std::uint64_t>(i));
        const Vec g = sub.gaussian_vector(s.dim);
        const double val = support_function(s, g);
        sum += val;
        sumsq += val * val;
    }
    const double mean = sum / static_cast<double>(samples);
    const double var = std::max(0.0, (sumsq - static_cast<double>(samples) * mean * mean) /
                                         static_cast<double>(samples - 1));
    WidthEstimate e;
    e.value = mean;
    e.std_error = std::sqrt(var / static_cast<double>(samples));
    e.outer_samples = samples;
    return e;
}

double analytic_width_bound(const CanonicalSet& s) {
    switch (s.kind) {
        case CanonicalSet::Kind::l2_ball:
            return s.radius * std::sqrt(static_cast<double>(s.dim));
        case CanonicalSet::Kind::ellipsoid:
            return norm2(s.semi_axes);
        case CanonicalSet::Kind::k_support_ball: {
            // radius parametrized as c0 * sqrt(k); additive c0 * sqrt(k) slack keeps
            // the formula meaningful at k = dim where the log term vanishes
            const double c0 = s.radius / std::sqrt(static_cast<double>(s.k));
            const double logterm = std::log(static_cast<double>(s.dim) / static_cast<double>(s.k));
            return c0 * s.k * std::sqrt(std::max(0.0, logterm)) + c0 * std::sqrt(static_cast<double>(s.k));
        }
        case CanonicalSet::Kind::union_of: {
            double max_norm = 0.0;
            for (const CanonicalSet& p : s.parts) {
                if (p.kind != CanonicalSet::Kind::finite_cloud)
                    throw std::invalid_argument("analytic_width_bound: union parts must be finite clouds");
                for (const Vec& pt : p.points) max_norm = std::max(max_norm, norm2(pt));
            }
            const double n_parts = static_cast<double>(s.parts.size());
            return max_norm * (std::sqrt(2.0 * std::log(n_parts)) + std::sqrt(static_cast<double>(s.dim)));
        }
        default:
            throw std::invalid_argument("analytic_width_bound: unsupported variant");
    }
}

bool ProjectionWidthCheck::subadditive(double num_std_errors) const {
    const double slack = num_std_errors * std::sqrt(whole.std_error * whole.std_error +
                                                    part1.std_error * part1.std_error +
                                                    part2.std_error * part2.std_error);
    return whole.value <= part1.value + part2.value + slack;
}

ProjectionWidthCheck projection_width_check(const CanonicalSet& cloud, int d1, RngStream& rng, long samples) {
    if (cloud.kind != CanonicalSet::Kind::finite_cloud)
        throw std::invalid_argument("projection_width_check: expects a finite cloud");
    if (d1 <= 0 || d1 >= cloud.dim) throw std::invalid_argument("projection_width_check: invalid split");
    std::vector<Vec> first, second;
    for (const Vec& p : cloud.points) {
        first.emplace_back(p.begin(), p.begin() + d1);
        second.emplace_back(p.begin() + d1, p.end());
    }
    const CanonicalSet s1 = CanonicalSet::finite_cloud(std::move(first));
    const CanonicalSet s2 = CanonicalSet::finite_cloud(std::move(second));
    ProjectionWidthCheck out;
    RngStream r0 = rng.substream("whole");
    RngStream r1 = rng.substream("part1");
    RngStream r2 = rng.substream("part2");
    out.whole = mc_width(cloud, r0, samples);
    out.part1 = mc_width(s1, r1, samples);
    out.part2 = mc_width(s2, r2, samples);
    return out;
}

}  // namespace gradgeom
