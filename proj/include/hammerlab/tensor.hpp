// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hammerlab/error.hpp"

namespace hammerlab {

using Shape = std::vector<std::size_t>;

enum class DType : std::uint8_t { f32 = 0, i8 = 1 };

/// Per-tensor affine quantization: real = (q - zero_point) * scale.
struct QuantParams {
    float scale = 1.0f;
    std::int32_t zero_point = 0;

    friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

inline std::size_t shape_elements(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out += (i ? "x" : "") + std::to_string(shape[i]);
    }
    return out + "]";
}

/// Dense row-major tensor holding either f32 values or affine-quantized i8
/// values. Exactly one of the two buffers is populated, according to dtype.
class Tensor {
public:
    Tensor() = default;

    Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), f32_(std::move(data)) {
        validate_shape(f32_.size());
    }

    Tensor(Shape shape, std::vector<std::int8_t> data, QuantParams quant)
        : shape_(std::move(shape)), dtype_(DType::i8), i8_(std::move(data)), quant_(quant) {
        validate_shape(i8_.size());
        if (!(quant.scale > 0.0f) || !std::isfinite(quant.scale)) {
            throw domain_error("quantization scale must be positive and finite");
        }
    }

    static Tensor zeros(Shape shape) {
        const std::size_t n = shape_elements(shape);
        return Tensor(std::move(shape), std::vector<float>(n, 0.0f));
    }

    /// Construction from user-supplied values: additionally rejects non-finite
    /// elements. Internal construction (checkpoint loads, flipped weights)
    /// goes through the plain constructor, where Inf/NaN are legal states.
    static Tensor from_values(Shape shape, std::vector<float> data) {
        for (float v : data) {
            if (!std::isfinite(v)) {
                throw domain_error("non-finite element in user-supplied tensor");
            }
        }
        return Tensor(std::move(shape), std::move(data));
    }

    const Shape& shape() const { return shape_; }
    DType dtype() const { return dtype_; }
    std::size_t size() const { return dtype_ == DType::f32 ? f32_.size() : i8_.size(); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t element_bytes() const { return dtype_ == DType::f32 ? 4 : 1; }
    const std::optional<QuantParams>& quant() const { return quant_; }

    std::span<const float> f32() const {
        expect(DType::f32);
        return f32_;
    }
    std::span<float> f32() {
        expect(DType::f32);
        return f32_;
    }
    std::span<const std::int8_t> i8() const {
        expect(DType::i8);
        return i8_;
    }
    std::span<std::int8_t> i8() {
        expect(DType::i8);
        return i8_;
    }

    /// Raw storage bytes (host order), for byte-exact comparisons.
    std::span<const std::byte> bytes() const {
        return dtype_ == DType::f32 ? std::as_bytes(std::span<const float>(f32_))
                                    : std::as_bytes(std::span<const std::int8_t>(i8_));
    }

    friend bool bytes_equal(const Tensor& a, const Tensor& b) {
        if (a.dtype_ != b.dtype_ || a.shape_ != b.shape_ || a.quant_ != b.quant_) {
            return false;
        }
        const auto x = a.bytes();
        const auto y = b.bytes();
        return std::equal(x.begin(), x.end(), y.begin(), y.end());
    }

private:
    void validate_shape(std::size_t n) const {
        for (std::size_t d : shape_) {
            if (d == 0) {
                throw dimension_error("tensor dimensions must be positive, got " + shape_string(shape_));
            }
        }
        if (shape_elements(shape_) != n) {
            throw dimension_error("shape " + shape_string(shape_) + " does not match " + std::to_string(n) +
                                  " elements");
        }
    }

    void expect(DType d) const {
        if (dtype_ != d) {
            throw domain_error(d == DType::f32 ? "tensor is not f32" : "tensor is not i8");
        }
    }

    Shape shape_;
    DType dtype_ = DType::f32;
    std::vector<float> f32_;
    std::vector<std::int8_t> i8_;
    std::optional<QuantParams> quant_;
};

inline constexpr double kLayerNormEps = 1e-5;

namespace kernels {

// Scalar-generic kernels shared by the Tensor API (T = float) and the model
// graph (T = float for training/evaluation, T = double for gradient checks).
// Every reduction accumulates left to right in index order.

/// out[m x n] = a[m x k] * b[k x n] (+ bias[n] if non-empty).
template <typename T, typename W>
void matmul(std::span<const T> a, std::span<const W> b, std::span<const W> bias, std::size_t m, std::size_t k,
            std::size_t n, std::span<T> out) {
    for (std::size_t i = 0; i < m; ++i) {
        T* row = out.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = bias.empty() ? T(0) : static_cast<T>(bias[j]);
        }
        const T* arow = a.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = arow[p];
            const W* brow = b.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] += av * static_cast<T>(brow[j]);
            }
        }
    }
}

/// Softmax of one row. NaN anywhere yields a NaN row; +Inf entries share the
/// mass equally (the limit of the finite case); an all -Inf row is NaN.
template <typename T>
void softmax_row(std::span<const T> x, std::span<T> out) {
    const T nan = std::numeric_limits<T>::quiet_NaN();
    T max = -std::numeric_limits<T>::infinity();
    for (T v : x) {
        if (std::isnan(v)) {
            std::fill(out.begin(), out.end(), nan);
            return;
        }
        max = std::max(max, v);
    }
    if (max == -std::numeric_limits<T>::infinity()) {
        std::fill(out.begin(), out.end(), nan);
        return;
    }
    if (std::isinf(max)) {
        const auto hits = static_cast<T>(std::count(x.begin(), x.end(), max));
        for (std::size_t i = 0; i < x.size(); ++i) {
            out[i] = x[i] == max ? T(1) / hits : T(0);
        }
        return;
    }
    T sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - max);
        sum += out[i];
    }
    for (T& v : out) {
        v /= sum;
    }
}

/// Layer norm of one row; writes the normalized (pre-affine) row to xhat when
/// non-empty and returns 1/sqrt(var + eps).
template <typename T, typename W>
T layer_norm_row(std::span<const T> x, std::span<const W> gamma, std::span<const W> beta, std::span<T> out,
                 std::span<T> xhat = {}, double eps = kLayerNormEps) {
    const std::size_t n = x.size();
    T mean = 0;
    for (T v : x) {
        mean += v;
    }
    mean /= static_cast<T>(n);
    T var = 0;
    for (T v : x) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<T>(n);
    const T rstd = T(1) / std::sqrt(var + static_cast<T>(eps));
    for (std::size_t i = 0; i < n; ++i) {
        const T h = (x[i] - mean) * rstd;
        if (!xhat.empty()) {
            xhat[i] = h;
        }
        out[i] = h * static_cast<T>(gamma[i]) + static_cast<T>(beta[i]);
    }
    return rstd;
}

}  // namespace kernels

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        throw dimension_error("matmul shape mismatch: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
    }
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<float> out(m * n);
    kernels::matmul<float, float>(a.f32(), b.f32(), {}, m, k, n, out);
    return Tensor({m, n}, std::move(out));
}

/// Softmax over the last axis.
inline Tensor softmax(const Tensor& x) {
    const std::size_t n = x.shape().back();
    std::vector<float> out(x.size());
    const auto in = x.f32();
    for (std::size_t r = 0; r < x.size() / n; ++r) {
        kernels::softmax_row<float>(in.subspan(r * n, n), std::span(out).subspan(r * n, n));
    }
    return Tensor(x.shape(), std::move(out));
}

inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = kLayerNormEps) {
    const std::size_t n = x.shape().back();
    if (gamma.size() != n || beta.size() != n) {
        throw dimension_error("layer_norm: gamma/beta length must equal the last dimension " + std::to_string(n));
    }
    std::vector<float> out(x.size());
    const auto in = x.f32();
    for (std::size_t r = 0; r < x.size() / n; ++r) {
        kernels::layer_norm_row<float, float>(in.subspan(r * n, n), gamma.f32(), beta.f32(),
                                              std::span(out).subspan(r * n, n), {}, eps);
    }
    return Tensor(x.shape(), std::move(out));
}

/// Per-tensor affine parameters for values in [lo, hi]. The range is widened
/// to include zero so that zero is exactly representable and zero_point stays
/// inside the i8 range; the widened minimum maps to -128.
inline QuantParams choose_quant_params(float lo, float hi) {
    const double min = std::min(0.0, static_cast<double>(lo));
    const double max = std::max(0.0, static_cast<double>(hi));
    const double scale = std::max((max - min) / 255.0, 1e-12);
    const auto zp = static_cast<std::int32_t>(-128 - std::lround(min / scale));
    return {static_cast<float>(scale), std::clamp(zp, -128, 127)};
}

inline std::int8_t quantize_value(float x, QuantParams q) {
    const double v = std::nearbyint(static_cast<double>(x) / q.scale) + q.zero_point;
    return static_cast<std::int8_t>(std::clamp(v, -128.0, 127.0));
}

inline float dequantize_value(std::int8_t v, QuantParams q) {
    return static_cast<float>((static_cast<double>(v) - q.zero_point) * static_cast<double>(q.scale));
}

inline Tensor quantize(const Tensor& t) {
    const auto data = t.f32();
    if (data.empty()) {
        throw domain_error("cannot quantize an empty tensor");
    }
    const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    const QuantParams q = choose_quant_params(*lo, *hi);
    std::vector<std::int8_t> out(data.size());
    std::transform(data.begin(), data.end(), out.begin(), [q](float x) { return quantize_value(x, q); });
    return Tensor(t.shape(), std::move(out), q);
}

inline Tensor dequantize(const Tensor& t) {
    const auto data = t.i8();
    const QuantParams q = *t.quant();
    std::vector<float> out(data.size());
    std::transform(data.begin(), data.end(), out.begin(), [q](std::int8_t v) { return dequantize_value(v, q); });
    return Tensor(t.shape(), std::move(out));
}

}  // namespace hammerlab
