// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/ndtensor/array.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "hchunk/error.hpp"

namespace hchunk {

std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out += "x";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void check_extents(const Shape& shape) {
    if (shape.empty()) {
        throw DimensionError("array shape must have rank >= 1");
    }
    if (std::ranges::any_of(shape, [](std::size_t e) { return e == 0; })) {
        throw DimensionError("array extents must be >= 1, got " + shape_string(shape));
    }
}

}  // namespace

Array::Array(Shape shape, double fill) : shape_(std::move(shape)) {
    check_extents(shape_);
    data_.assign(shape_size(shape_), fill);
}

Array::Array(Shape shape, std::vector<double> data) : Array(std::move(shape), Buffer(data.begin(), data.end())) {}

Array::Array(Shape shape, Buffer data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents(shape_);
    if (data_.size() != shape_size(shape_)) {
        throw DimensionError("buffer of " + std::to_string(data_.size()) + " values does not fit shape " +
                             shape_string(shape_));
    }
}

Array Array::scalar(double value) { return Array({1}, std::vector<double>{value}); }

Array Array::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Array({n}, std::move(values));
}

Array Array::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Buffer data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw DimensionError("ragged matrix literal");
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return Array({r, c}, std::move(data));
}

Array Array::identity(std::size_t n) {
    Array out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        out.at(i, i) = 1.0;
    }
    return out;
}

std::size_t Array::cols() const noexcept {
    if (shape_.size() <= 1) {
        return shape_.empty() ? 0 : 1;
    }
    return data_.size() / shape_.front();
}

std::span<double> Array::row(std::size_t r) { return std::span<double>(data_).subspan(r * cols(), cols()); }

std::span<const double> Array::row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
}

double Array::item() const {
    if (data_.size() != 1) {
        throw DimensionError("item() needs a single-element array, got " + shape_string(shape_));
    }
    return data_.front();
}

Array Array::reshaped(Shape shape) const { return Array(std::move(shape), data_); }

void Array::fill(double value) { std::ranges::fill(data_, value); }

}  // namespace hchunk
