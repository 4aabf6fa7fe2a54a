#include "mcsim/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mcsim/errors.hpp"

namespace mcsim {

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), 0.0) {}

std::size_t Tensor::numel_of(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeMismatchError("Tensor: dimensions must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

bool Tensor::finite() const {
    return std::all_of(data.begin(), data.end(),
                       [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

} // namespace mcsim
