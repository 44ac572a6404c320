#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "voxseg/errors.hpp"

namespace voxseg {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

// Dense row-major N-d array. Rank is small (<= 4): [channel, x, y(, z)] for
// channelled data, [x, y(, z)] for plain spatial arrays.
template <class T>
class NDArray {
public:
    NDArray() = default;
    explicit NDArray(Shape shape, T fill = T{}) : shape_(std::move(shape)) {
        for (int64_t d : shape_)
            if (d < 1) throw DomainError("NDArray: non-positive dimension");
        data_.assign(static_cast<size_t>(shape_numel(shape_)), fill);
    }
    NDArray(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
        if (static_cast<int64_t>(data_.size()) != shape_numel(shape_))
            throw DomainError("NDArray: value count does not match shape");
    }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    int64_t offset(const Shape& idx) const {
        int64_t off = 0;
        for (size_t i = 0; i < shape_.size(); ++i) off = off * shape_[i] + idx[i];
        return off;
    }
    T& at(const Shape& idx) { return data_[static_cast<size_t>(offset(idx))]; }
    const T& at(const Shape& idx) const { return data_[static_cast<size_t>(offset(idx))]; }

    bool same_shape(const NDArray& o) const { return shape_ == o.shape_; }

    template <class U>
    NDArray<U> cast() const {
        NDArray<U> out(shape_);
        for (int64_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(data_[static_cast<size_t>(i)]);
        return out;
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

using ArrayF = NDArray<float>;
using ArrayD = NDArray<double>;
using ArrayI = NDArray<int32_t>;
using ArrayB = NDArray<uint8_t>;

// Strides in elements for a row-major shape.
inline Shape row_major_strides(const Shape& s) {
    Shape st(s.size(), 1);
    for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i)
        st[static_cast<size_t>(i)] = st[static_cast<size_t>(i) + 1] * s[static_cast<size_t>(i) + 1];
    return st;
}

}  // namespace voxseg
