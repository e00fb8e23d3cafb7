#pragma once

#include "tryon/nn.hpp"
#include "tryon/tensor.hpp"

namespace tryon {

// Tensor (h x w x c) <-> (h*w rows x c cols) activation matrix.

template <typename T>
nn::Mat<T> to_mat(const Tensor& t) {
    nn::Mat<T> m(static_cast<Eigen::Index>(t.h) * t.w, t.c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(t.v[static_cast<size_t>(i)]);
    return m;
}

template <typename T>
Tensor from_mat(const nn::Mat<T>& m, int h, int w) {
    Tensor t(h, w, static_cast<int>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) t.v[static_cast<size_t>(i)] = static_cast<double>(m.data()[i]);
    return t;
}

}  // namespace tryon
