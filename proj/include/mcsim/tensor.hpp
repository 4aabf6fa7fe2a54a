#ifndef MCSIM_TENSOR_HPP
#define MCSIM_TENSOR_HPP

#include <cstddef>
#include <vector>

namespace mcsim {

/// Dense row-major numeric array. Just enough structure to carry weights
/// and activations: a shape, flat 64-bit storage, and finiteness checks.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);

    /// Element count implied by a shape; throws ShapeMismatchError on
    /// non-positive dimensions.
    static std::size_t numel_of(const std::vector<int>& shape);

    std::size_t numel() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool finite() const;
    void fill(double v);

    bool operator==(const Tensor&) const = default;
};

} // namespace mcsim

#endif // MCSIM_TENSOR_HPP
