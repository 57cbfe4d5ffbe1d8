#include "gradgeom/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "gradgeom/matrix.hpp"

namespace gradgeom {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix_next(std::uint64_t& s) {
    s += kGolden;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix_next(s);
    s = h ^ (stream_id * kGolden + 1);
    h = splitmix_next(s);
    return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : key_(derive_key(seed, stream_id)), state_(key_) {}

std::uint64_t RngStream::next_u64() { return splitmix_next(state_); }

double RngStream::uniform01() {
    // 53 mantissa bits, offset by half an ulp so the result is never 0 or 1
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::gaussian() { return gaussian_quantile(uniform01()); }

int RngStream::rademacher() { return (next_u64() >> 63) ? 1 : -1; }

std::vector<double> RngStream::gaussian_vector(int dim) {
    if (dim < 1) throw std::invalid_argument("gaussian_vector: dim must be >= 1");
    std::vector<double> v(dim);
    for (double& x : v) x = gaussian();
    return v;
}

std::vector<int> RngStream::rademacher_vector(int n) {
    if (n < 1) throw std::invalid_argument("rademacher_vector: n must be >= 1");
    std::vector<int> v(n);
    for (int& x : v) x = rademacher();
    return v;
}

std::vector<double> RngStream::unit_sphere_vector(int dim) {
    std::vector<double> v = gaussian_vector(dim);
    double n = norm2(v);
    while (n == 0.0) {  // astronomically unlikely, but keep the contract exact
        v = gaussian_vector(dim);
        n = norm2(v);
    }
    for (double& x : v) x /= n;
    return v;
}

RngStream RngStream::substream(std::uint64_t id) const { return RngStream(key_, id + 1); }

RngStream RngStream::substream(std::string_view name) const { return substream(stream_id(name)); }

std::uint64_t RngStream::stream_id(std::string_view name) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

double gaussian_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("gaussian_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                    4.5921953931549871457e4) *
                       r +
                   1.3731693765509461125e4) *
                      r +
                  1.9715909503065514427e3) *
                     r +
                 1.3314166789178437745e2) *
                    r +
                3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                    2.1213794301586595867e4) *
                       r +
                   5.3941960214247511077e3) *
                      r +
                  6.8718700749205790830e2) *
                     r +
                 4.2313330701600911252e1) *
                    r +
                1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                   1.27045825245236838258e0) *
                      r +
                  3.64784832476320460504e0) *
                     r +
                 5.76949722146069140550e0) *
                    r +
                4.63033784615654529590e0) *
                   r +
               1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                   1.48103976427480074590e-1) *
                      r +
                  6.89767334985100004550e-1) *
                     r +
                 1.67638483018380384940e0) *
                    r +
                2.05319162663775882187e0) *
                   r +
               1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                   2.65321895265761230930e-2) *
                      r +
                  2.96560571828504891230e-1) *
                     r +
                 1.78482653991729133580e0) *
                    r +
                5.46378491116411436990e0) *
                   r +
               6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                   7.86869131145613259100e-4) *
                      r +
                  1.48753612908506148525e-2) *
                     r +
                 1.36929880922735805310e-1) *
                    r +
                5.99832206555887937690e-1) *
                   r +
               1.0);
    }
    return (q < 0.0) ? -val : val;
}

}  // namespace gradgeom
