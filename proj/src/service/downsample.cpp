#include "woodmon/service/downsample.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace woodmon::service {

std::vector<std::size_t> minmax_downsample(std::span<const double> values, std::size_t max_points) {
    if (max_points == 0)
        throw std::invalid_argument("max_points must be positive");
    const std::size_t n = values.size();
    std::vector<std::size_t> out;
    if (n <= max_points) {
        out.resize(n);
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    }
    out.push_back(0);
    if (max_points == 1)
        return out;

    const std::size_t interior = n - 2;
    const std::size_t buckets = (max_points - 2) / 2;
    for (std::size_t b = 0; b < buckets; ++b) {
        const std::size_t lo = 1 + b * interior / buckets;
        const std::size_t hi = 1 + (b + 1) * interior / buckets;
        if (lo >= hi)
            continue;
        std::size_t imin = lo, imax = lo;
        for (std::size_t i = lo + 1; i < hi; ++i) {
            if (values[i] < values[imin])
                imin = i;
            if (values[i] > values[imax])
                imax = i;
        }
        if (imin == imax) {
            out.push_back(imin);
        } else {
            out.push_back(std::min(imin, imax));
            out.push_back(std::max(imin, imax));
        }
    }
    out.push_back(n - 1);
    return out;
}

}  // namespace woodmon::service
