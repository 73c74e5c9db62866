// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

namespace hchunk {

// Shapes of two operands do not fit together.
class DimensionError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

// A numeric argument lies outside the domain of the operation.
class DomainError : public std::domain_error {
   public:
    using std::domain_error::domain_error;
};

// A caller broke an API contract (wrong call order, invalid mask, ...).
class ContractError : public std::logic_error {
   public:
    using std::logic_error::logic_error;
};

// Corpus, config or checkpoint input could not be used.
class DataError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite value.
class NumericalError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace hchunk
