#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace gradgeom {

// Deterministic counter-based random stream keyed by (seed, stream-id).
// Identical keys always replay the same draw sequence; distinct stream ids
// give statistically independent substreams. Normal variates use the
// inverse-CDF transform (Wichura's AS241 double-precision quantile), one
// uniform per draw, so a stream's output is reproducible byte for byte.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t next_u64();
    double uniform01();  // strictly inside (0, 1)
    double gaussian();
    int rademacher();  // +1 or -1, each with probability 1/2

    std::vector<double> gaussian_vector(int dim);
    std::vector<int> rademacher_vector(int n);
    // Uniform on the unit sphere in R^dim.
    std::vector<double> unit_sphere_vector(int dim);

    RngStream substream(std::uint64_t id) const;
    RngStream substream(std::string_view name) const;

    static std::uint64_t stream_id(std::string_view name);  // FNV-1a of the name

private:
    std::uint64_t key_;    // fixed at construction; substreams derive from it
    std::uint64_t state_;  // advances with each draw
};

// Standard normal quantile, Wichura's algorithm AS241 (PPND16).
double gaussian_quantile(double p);

}  // namespace gradgeom
