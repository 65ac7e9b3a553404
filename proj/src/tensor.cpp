#include "tissuemix/tensor.hpp"

#include <cmath>
#include <string>

namespace tissuemix {

void validate_probability_map(const Tensor3& p, double tol) {
    require(p.channels > 0 && p.height > 0 && p.width > 0, "probability map dimensions must be positive");
    require(p.values.size() == static_cast<std::size_t>(p.channels) * p.plane(), "probability map buffer size mismatch");
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            double sum = 0.0;
            for (int c = 0; c < p.channels; ++c) {
                const double v = p.at(c, y, x);
                require(std::isfinite(v) && v >= 0.0, "probability map has a negative or non-finite value at (" +
                                                          std::to_string(y) + "," + std::to_string(x) + ")");
                sum += v;
            }
            require(std::abs(sum - 1.0) <= tol, "probability map channels sum to " + std::to_string(sum) + " at (" +
                                                    std::to_string(y) + "," + std::to_string(x) + ")");
        }
    }
}

void renormalize(Tensor3& p) {
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            double sum = 0.0;
            for (int c = 0; c < p.channels; ++c) sum += p.at(c, y, x);
            for (int c = 0; c < p.channels; ++c) {
                p.at(c, y, x) = sum > 0.0 ? p.at(c, y, x) / sum : 1.0 / p.channels;
            }
        }
    }
}

}  // namespace tissuemix
