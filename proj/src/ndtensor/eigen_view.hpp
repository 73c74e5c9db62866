// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "hchunk/ndtensor/array.hpp"

namespace hchunk::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatView = Eigen::Map<RowMatrix>;
using ConstMatView = Eigen::Map<const RowMatrix>;
using VecView = Eigen::Map<Eigen::VectorXd>;
using ConstVecView = Eigen::Map<const Eigen::VectorXd>;

inline MatView mat(Array& a) {
    return MatView(a.data().data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}

inline ConstMatView mat(const Array& a) {
    return ConstMatView(a.data().data(), static_cast<Eigen::Index>(a.rows()),
                        static_cast<Eigen::Index>(a.cols()));
}

inline VecView vec(Array& a) { return VecView(a.data().data(), static_cast<Eigen::Index>(a.size())); }

inline ConstVecView vec(const Array& a) {
    return ConstVecView(a.data().data(), static_cast<Eigen::Index>(a.size()));
}

}  // namespace hchunk::detail
