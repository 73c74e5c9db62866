// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace hchunk {

using Shape = std::vector<std::size_t>;

/// 64-byte aligned storage. Vectorised reductions peel by address, so a fixed
/// alignment keeps their summation order, and therefore results, identical
/// from run to run.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() noexcept = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept {
        return true;
    }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array of doubles.
///
/// Every extent is at least 1 and the buffer always holds exactly
/// product(shape) values. Rank-1 arrays behave as a column (rows() == extent,
/// cols() == 1) so row-wise operations accept both vectors and matrices.
class Array {
   public:
    Array() = default;
    explicit Array(Shape shape, double fill = 0.0);
    Array(Shape shape, std::vector<double> data);
    Array(Shape shape, Buffer data);

    static Array scalar(double value);
    static Array vector(std::vector<double> values);
    static Array matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Array identity(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t rows() const noexcept { return shape_.empty() ? 0 : shape_.front(); }
    std::size_t cols() const noexcept;

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row(std::size_t r);
    std::span<const double> row(std::size_t r) const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    /// Value of a single-element array.
    double item() const;

    Array reshaped(Shape shape) const;
    void fill(double value);

    bool operator==(const Array& other) const = default;

   private:
    Shape shape_;
    Buffer data_;
};

}  // namespace hchunk
