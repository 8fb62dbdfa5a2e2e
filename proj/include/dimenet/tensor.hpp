#ifndef DIMENET_TENSOR_HPP
#define DIMENET_TENSOR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dimenet {

/// Dense row-major array of doubles. Rank 2 everywhere except the
/// bilinear weight tensors, which are rank 3 (B, F1, F2).
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::int64_t r, std::int64_t c) : shape{r, c}, data(static_cast<std::size_t>(r * c), 0.0) {}
    Tensor(std::int64_t a, std::int64_t b, std::int64_t c)
        : shape{a, b, c}, data(static_cast<std::size_t>(a * b * c), 0.0) {}

    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data[0] = v;
        return t;
    }

    std::int64_t rank() const { return static_cast<std::int64_t>(shape.size()); }
    std::int64_t rows() const { return shape.at(0); }
    std::int64_t cols() const { return shape.at(1); }
    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

    double& at(std::int64_t r, std::int64_t c) { return data[static_cast<std::size_t>(r * cols() + c)]; }
    double at(std::int64_t r, std::int64_t c) const { return data[static_cast<std::size_t>(r * cols() + c)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }
};

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace dimenet

#endif
