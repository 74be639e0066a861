// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace hammerlab {

/// Root of the library's exception hierarchy. Every failure surfaced by the
/// library derives from this, so callers can catch one type.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes or lengths that do not agree.
class dimension_error : public error {
public:
    using error::error;
};

/// Argument outside the function's domain (bit position, empty tensor, ...).
class domain_error : public error {
public:
    using error::error;
};

class config_error : public error {
public:
    using error::error;
};

/// Dataset contents violate an invariant (empty, label out of range).
class data_error : public error {
public:
    using error::error;
};

/// Unknown layer, weight index out of range, DRAM row out of range.
class address_error : public error {
public:
    using error::error;
};

class capacity_error : public error {
public:
    using error::error;
};

/// Malformed or truncated file, unknown version.
class format_error : public error {
public:
    using error::error;
};

class precondition_error : public error {
public:
    using error::error;
};

}  // namespace hammerlab
