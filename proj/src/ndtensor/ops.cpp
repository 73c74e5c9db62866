// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/ndtensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eigen_view.hpp"
#include "hchunk/error.hpp"

namespace hchunk {

using detail::mat;
using detail::vec;

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                             shape_string(b.shape()) + " differ");
    }
}

void require_same_tape(const Var& a, const Var& b) {
    if (&a.tape() != &b.tape()) {
        throw ContractError("operands live on different tapes");
    }
}

template <typename F>
Array map_values(const Array& a, F f) {
    Array out(a.shape());
    auto src = a.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = f(src[i]);
    }
    return out;
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "add");
    Array out(a.shape());
    vec(out) = vec(a.value()) + vec(b.value());
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Array& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var operator-(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "sub");
    Array out(a.shape());
    vec(out) = vec(a.value()) - vec(b.value());
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Array& g) {
        t.accumulate(a, g);
        if (t.requires_grad(b)) {
            vec(t.grad_buffer(b)) -= vec(g);
        }
    });
}

Var operator*(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "mul");
    Array out(a.shape());
    vec(out) = vec(a.value()).cwiseProduct(vec(b.value()));
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Array& g) {
        if (t.requires_grad(a)) {
            vec(t.grad_buffer(a)) += vec(g).cwiseProduct(vec(b.value()));
        }
        if (t.requires_grad(b)) {
            vec(t.grad_buffer(b)) += vec(g).cwiseProduct(vec(a.value()));
        }
    });
}

Var operator/(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "div");
    Array out(a.shape());
    vec(out) = vec(a.value()).cwiseQuotient(vec(b.value()));
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Array& g) {
        const auto bv = vec(b.value());
        if (t.requires_grad(a)) {
            vec(t.grad_buffer(a)) += vec(g).cwiseQuotient(bv);
        }
        if (t.requires_grad(b)) {
            const auto av = vec(a.value());
            vec(t.grad_buffer(b)).array() -= vec(g).array() * av.array() / (bv.array() * bv.array());
        }
    });
}

Var operator-(const Var& a) { return -1.0 * a; }

Var operator*(double s, const Var& a) {
    Array out(a.shape());
    vec(out) = s * vec(a.value());
    return a.tape().record(std::move(out), {a}, [a, s](Tape& t, const Array& g) {
        vec(t.grad_buffer(a)) += s * vec(g);
    });
}

Var operator*(const Var& a, double s) { return s * a; }

Var operator+(const Var& a, double s) {
    Array out(a.shape());
    vec(out) = vec(a.value()).array() + s;
    return a.tape().record(std::move(out), {a}, [a](Tape& t, const Array& g) { t.accumulate(a, g); });
}

Var operator+(double s, const Var& a) { return a + s; }
Var operator-(const Var& a, double s) { return a + (-s); }
Var operator-(double s, const Var& a) { return (-1.0 * a) + s; }

Var exp(const Var& a) {
    Array out = map_values(a.value(), [](double x) { return std::exp(x); });
    Array saved = out;
    return a.tape().record(std::move(out), {a}, [a, saved = std::move(saved)](Tape& t, const Array& g) {
        vec(t.grad_buffer(a)) += vec(g).cwiseProduct(vec(saved));
    });
}

Var log(const Var& a) {
    Array out = map_values(a.value(), [](double x) { return std::log(x); });
    return a.tape().record(std::move(out), {a}, [a](Tape& t, const Array& g) {
        vec(t.grad_buffer(a)) += vec(g).cwiseQuotient(vec(a.value()));
    });
}

Var clip(const Var& a, double lo, double hi) {
    if (lo > hi) {
        throw DomainError("clip: lo > hi");
    }
    Array out = map_values(a.value(), [lo, hi](double x) { return std::clamp(x, lo, hi); });
    return a.tape().record(std::move(out), {a}, [a, lo, hi](Tape& t, const Array& g) {
        auto src = a.value().data();
        auto gd = g.data();
        auto dst = t.grad_buffer(a).data();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            if (src[i] >= lo && src[i] <= hi) {
                dst[i] += gd[i];
            }
        }
    });
}

Var sum(const Var& a) {
    Array out = Array::scalar(vec(a.value()).sum());
    return a.tape().record(std::move(out), {a}, [a](Tape& t, const Array& g) {
        vec(t.grad_buffer(a)).array() += g.item();
    });
}

Var mean(const Var& a) { return (1.0 / static_cast<double>(a.value().size())) * sum(a); }

Var reshape(const Var& a, Shape shape) {
    if (shape_size(shape) != a.value().size()) {
        throw DimensionError("reshape: " + shape_string(a.shape()) + " cannot become " + shape_string(shape));
    }
    Array out = a.value().reshaped(std::move(shape));
    return a.tape().record(std::move(out), {a}, [a](Tape& t, const Array& g) {
        vec(t.grad_buffer(a)) += vec(g);
    });
}

Var matmul(const Var& a, const Var& b) {
    require_same_tape(a, b);
    const Array& av = a.value();
    const Array& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0]) {
        throw DimensionError("matmul: shapes " + shape_string(av.shape()) + " and " + shape_string(bv.shape()) +
                             " are not compatible");
    }
    Array out({av.rows(), bv.cols()});
    mat(out).noalias() = mat(av) * mat(bv);
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Array& g) {
        if (t.requires_grad(a)) {
            mat(t.grad_buffer(a)).noalias() += mat(g) * mat(b.value()).transpose();
        }
        if (t.requires_grad(b)) {
            mat(t.grad_buffer(b)).noalias() += mat(a.value()).transpose() * mat(g);
        }
    });
}

Var gather_rows(const Var& a, std::span<const std::size_t> indices) {
    const Array& av = a.value();
    if (indices.empty()) {
        throw DimensionError("gather_rows: empty index list");
    }
    const std::size_t cols = av.cols();
    Shape shape = av.shape();
    shape[0] = indices.size();
    Array out(shape);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= av.rows()) {
            throw DimensionError("gather_rows: index " + std::to_string(indices[r]) + " out of range for " +
                                 shape_string(av.shape()));
        }
        std::ranges::copy(av.row(indices[r]), out.row(r).begin());
    }
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return a.tape().record(std::move(out), {a}, [a, idx = std::move(idx), cols](Tape& t, const Array& g) {
        Array& buf = t.grad_buffer(a);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            auto dst = buf.row(idx[r]);
            auto src = g.row(r);
            for (std::size_t c = 0; c < cols; ++c) {
                dst[c] += src[c];
            }
        }
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw DimensionError("concat_rows: no inputs");
    }
    Shape shape = parts.front().shape();
    std::size_t rows = 0;
    for (const Var& p : parts) {
        require_same_tape(parts.front(), p);
        Shape tail = p.shape();
        if (tail.size() != shape.size() || !std::equal(tail.begin() + 1, tail.end(), shape.begin() + 1)) {
            throw DimensionError("concat_rows: " + shape_string(p.shape()) + " does not stack onto " +
                                 shape_string(shape));
        }
        rows += p.shape()[0];
    }
    shape[0] = rows;
    Array out(shape);
    std::size_t offset = 0;
    for (const Var& p : parts) {
        std::ranges::copy(p.value().data(), out.data().begin() + static_cast<std::ptrdiff_t>(offset));
        offset += p.value().size();
    }
    return parts.front().tape().record(std::move(out), parts, [parts](Tape& t, const Array& g) {
        std::size_t off = 0;
        for (const Var& p : parts) {
            const std::size_t n = p.value().size();
            if (t.requires_grad(p)) {
                auto dst = t.grad_buffer(p).data();
                for (std::size_t i = 0; i < n; ++i) {
                    dst[i] += g[off + i];
                }
            }
            off += n;
        }
    });
}

Var row_scale(const Var& x, const Var& s) {
    require_same_tape(x, s);
    const Array& xv = x.value();
    const Array& sv = s.value();
    if (xv.rank() != 2 || sv.size() != xv.rows()) {
        throw DimensionError("row_scale: " + shape_string(xv.shape()) + " cannot be scaled by " +
                             shape_string(sv.shape()));
    }
    Array out(xv.shape());
    mat(out) = vec(sv).asDiagonal() * mat(xv);
    return x.tape().record(std::move(out), {x, s}, [x, s](Tape& t, const Array& g) {
        if (t.requires_grad(x)) {
            mat(t.grad_buffer(x)) += vec(s.value()).asDiagonal() * mat(g);
        }
        if (t.requires_grad(s)) {
            vec(t.grad_buffer(s)) += mat(g).cwiseProduct(mat(x.value())).rowwise().sum();
        }
    });
}

Var rowwise_cosine(const Var& a, const Var& b, double eps) {
    require_same_tape(a, b);
    require_same_shape(a, b, "rowwise_cosine");
    const Array& av = a.value();
    const Array& bv = b.value();
    const std::size_t rows = av.rows();
    const std::size_t cols = av.cols();
    Array out({rows});
    std::vector<double> na(rows), nb(rows), dots(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        auto x = av.row(r);
        auto y = bv.row(r);
        double dot = 0.0, xx = 0.0, yy = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            dot += x[c] * y[c];
            xx += x[c] * x[c];
            yy += y[c] * y[c];
        }
        na[r] = std::sqrt(xx);
        nb[r] = std::sqrt(yy);
        dots[r] = dot;
        out[r] = std::clamp(dot / std::max(na[r] * nb[r], eps), -1.0, 1.0);
    }
    return a.tape().record(
        std::move(out), {a, b},
        [a, b, eps, na = std::move(na), nb = std::move(nb), dots = std::move(dots)](Tape& t, const Array& g) {
            const Array& av = a.value();
            const Array& bv = b.value();
            const std::size_t cols = av.cols();
            Array* ga = t.requires_grad(a) ? &t.grad_buffer(a) : nullptr;
            Array* gb = t.requires_grad(b) ? &t.grad_buffer(b) : nullptr;
            for (std::size_t r = 0; r < na.size(); ++r) {
                const bool floored = na[r] * nb[r] < eps;
                const double denom = floored ? eps : na[r] * nb[r];
                const double raw = dots[r] / denom;
                if (raw < -1.0 || raw > 1.0) {
                    continue;
                }
                const double gr = g[r];
                auto x = av.row(r);
                auto y = bv.row(r);
                // d/dx [dot / (|x||y|)] = y / D - dot x / (|x|^2 D); a floored denominator is constant
                const double cx = floored ? 0.0 : dots[r] / (na[r] * na[r] * denom);
                const double cy = floored ? 0.0 : dots[r] / (nb[r] * nb[r] * denom);
                if (ga != nullptr) {
                    auto dst = ga->row(r);
                    for (std::size_t c = 0; c < cols; ++c) {
                        dst[c] += gr * (y[c] / denom - cx * x[c]);
                    }
                }
                if (gb != nullptr) {
                    auto dst = gb->row(r);
                    for (std::size_t c = 0; c < cols; ++c) {
                        dst[c] += gr * (x[c] / denom - cy * y[c]);
                    }
                }
            }
        });
}

namespace {

void check_ema_args(const Array& p, const Array& c, const Array& y0) {
    if (p.rank() != 1 || c.rank() != 2 || c.rows() != p.size() || y0.size() != c.cols()) {
        throw DimensionError("ema_scan: p " + shape_string(p.shape()) + ", c " + shape_string(c.shape()) +
                             ", y0 " + shape_string(y0.shape()) + " are inconsistent");
    }
    for (std::size_t t = 0; t < p.size(); ++t) {
        if (!(p[t] >= 0.0 && p[t] <= 1.0)) {
            throw DomainError("ema_scan: p[" + std::to_string(t) + "] = " + std::to_string(p[t]) +
                              " is outside [0, 1]");
        }
    }
}

}  // namespace

Array ema_scan_sequential(const Array& p, const Array& c, const Array& y0) {
    check_ema_args(p, c, y0);
    const std::size_t len = p.size();
    const std::size_t d = c.cols();
    Array y(c.shape());
    for (std::size_t t = 0; t < len; ++t) {
        auto prev = t == 0 ? y0.data() : std::span<const double>(y.row(t - 1));
        auto cur = c.row(t);
        auto out = y.row(t);
        const double pt = p[t];
        for (std::size_t j = 0; j < d; ++j) {
            out[j] = pt * cur[j] + (1.0 - pt) * prev[j];
        }
    }
    return y;
}

Array ema_scan_associative(const Array& p, const Array& c, const Array& y0) {
    check_ema_args(p, c, y0);
    const std::size_t len = p.size();
    const std::size_t d = c.cols();
    // Step t is the affine map y -> a_t y + b_t. Hillis-Steele inclusive scan
    // under composition leaves (A_t, B_t) with y_t = A_t y0 + B_t.
    std::vector<double> a(len);
    Array b(c.shape());
    for (std::size_t t = 0; t < len; ++t) {
        a[t] = 1.0 - p[t];
        auto src = c.row(t);
        auto dst = b.row(t);
        for (std::size_t j = 0; j < d; ++j) {
            dst[j] = p[t] * src[j];
        }
    }
    std::vector<double> a_next(len);
    Array b_next(c.shape());
    for (std::size_t stride = 1; stride < len; stride *= 2) {
        for (std::size_t t = 0; t < len; ++t) {
            auto bt = b.row(t);
            auto out = b_next.row(t);
            if (t < stride) {
                a_next[t] = a[t];
                std::ranges::copy(bt, out.begin());
                continue;
            }
            auto bs = b.row(t - stride);
            a_next[t] = a[t] * a[t - stride];
            for (std::size_t j = 0; j < d; ++j) {
                out[j] = a[t] * bs[j] + bt[j];
            }
        }
        std::swap(a, a_next);
        std::swap(b, b_next);
    }
    Array y(c.shape());
    for (std::size_t t = 0; t < len; ++t) {
        auto bt = b.row(t);
        auto out = y.row(t);
        for (std::size_t j = 0; j < d; ++j) {
            out[j] = a[t] * y0[j] + bt[j];
        }
    }
    return y;
}

Var ema_scan(const Var& p, const Var& c, const Var& y0) {
    require_same_tape(p, c);
    require_same_tape(p, y0);
    Array y = ema_scan_sequential(p.value(), c.value(), y0.value());
    Array saved = y;
    return p.tape().record(std::move(y), {p, c, y0}, [p, c, y0, y = std::move(saved)](Tape& t, const Array& g) {
        const Array& pv = p.value();
        const Array& cv = c.value();
        const Array& y0v = y0.value();
        const std::size_t len = pv.size();
        const std::size_t d = cv.cols();
        Array* gp = t.requires_grad(p) ? &t.grad_buffer(p) : nullptr;
        Array* gc = t.requires_grad(c) ? &t.grad_buffer(c) : nullptr;
        // carry = dL/dy_t including the path through y_{t+1}.
        std::vector<double> carry(d, 0.0);
        for (std::size_t t_idx = len; t_idx-- > 0;) {
            auto gt = g.row(t_idx);
            const double next_keep = t_idx + 1 < len ? 1.0 - pv[t_idx + 1] : 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                carry[j] = gt[j] + next_keep * carry[j];
            }
            const double pt = pv[t_idx];
            auto prev = t_idx == 0 ? y0v.data() : std::span<const double>(y.row(t_idx - 1));
            auto ct = cv.row(t_idx);
            if (gc != nullptr) {
                auto dst = gc->row(t_idx);
                for (std::size_t j = 0; j < d; ++j) {
                    dst[j] += pt * carry[j];
                }
            }
            if (gp != nullptr) {
                double acc = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    acc += carry[j] * (ct[j] - prev[j]);
                }
                (*gp)[t_idx] += acc;
            }
        }
        if (t.requires_grad(y0)) {
            auto dst = t.grad_buffer(y0).data();
            const double keep = 1.0 - pv[0];
            for (std::size_t j = 0; j < d; ++j) {
                dst[j] += keep * carry[j];
            }
        }
    });
}

Var straight_through(const Var& x, Array forward) {
    if (forward.shape() != x.shape()) {
        throw DimensionError("straight_through: forward value " + shape_string(forward.shape()) +
                             " does not match " + shape_string(x.shape()));
    }
    return x.tape().record(std::move(forward), {x}, [x](Tape& t, const Array& g) { t.accumulate(x, g); });
}

}  // namespace hchunk
