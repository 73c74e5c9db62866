// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/ndtensor/nn.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "eigen_view.hpp"
#include "hchunk/error.hpp"
#include "hchunk/ndtensor/ops.hpp"

namespace hchunk {

using detail::mat;
using detail::vec;

Var rms_norm(const Var& x, const Var& gain, double eps) {
    const Array& xv = x.value();
    const Array& gv = gain.value();
    if (xv.rank() != 2 || gv.size() != xv.cols()) {
        throw DimensionError("rms_norm: input " + shape_string(xv.shape()) + " and gain " +
                             shape_string(gv.shape()) + " do not match");
    }
    const std::size_t rows = xv.rows();
    const std::size_t d = xv.cols();
    Array out(xv.shape());
    std::vector<double> inv(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        auto xr = xv.row(r);
        double ss = 0.0;
        for (double v : xr) {
            ss += v * v;
        }
        inv[r] = 1.0 / std::sqrt(ss / static_cast<double>(d) + eps);
        auto o = out.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            o[c] = xr[c] * inv[r] * gv[c];
        }
    }
    return x.tape().record(std::move(out), {x, gain}, [x, gain, inv = std::move(inv)](Tape& t, const Array& g) {
        const Array& xv = x.value();
        const Array& gv = gain.value();
        const std::size_t d = xv.cols();
        Array* gx = t.requires_grad(x) ? &t.grad_buffer(x) : nullptr;
        Array* gg = t.requires_grad(gain) ? &t.grad_buffer(gain) : nullptr;
        for (std::size_t r = 0; r < inv.size(); ++r) {
            auto xr = xv.row(r);
            auto gr = g.row(r);
            const double ir = inv[r];
            if (gg != nullptr) {
                for (std::size_t c = 0; c < d; ++c) {
                    (*gg)[c] += gr[c] * xr[c] * ir;
                }
            }
            if (gx != nullptr) {
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    dot += gr[c] * gv[c] * xr[c];
                }
                const double k = ir * ir * ir * dot / static_cast<double>(d);
                auto dst = gx->row(r);
                for (std::size_t c = 0; c < d; ++c) {
                    dst[c] += ir * gv[c] * gr[c] - k * xr[c];
                }
            }
        }
    });
}

Var softmax_cross_entropy(const Var& logits, std::span<const std::uint8_t> targets) {
    const Array& lv = logits.value();
    if (lv.rank() != 2 || lv.rows() != targets.size()) {
        throw DimensionError("softmax_cross_entropy: logits " + shape_string(lv.shape()) + " vs " +
                             std::to_string(targets.size()) + " targets");
    }
    const std::size_t rows = lv.rows();
    const std::size_t vocab = lv.cols();
    Array probs(lv.shape());
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (targets[r] >= vocab) {
            throw DimensionError("softmax_cross_entropy: target " + std::to_string(targets[r]) +
                                 " outside vocabulary of " + std::to_string(vocab));
        }
        auto lr = lv.row(r);
        auto pr = probs.row(r);
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : lr) {
            mx = std::max(mx, v);
        }
        double z = 0.0;
        for (std::size_t c = 0; c < vocab; ++c) {
            pr[c] = std::exp(lr[c] - mx);
            z += pr[c];
        }
        for (std::size_t c = 0; c < vocab; ++c) {
            pr[c] /= z;
        }
        total += (mx + std::log(z)) - lr[targets[r]];
    }
    std::vector<std::uint8_t> tgt(targets.begin(), targets.end());
    const double inv_rows = 1.0 / static_cast<double>(rows);
    return logits.tape().record(
        Array::scalar(total * inv_rows), {logits},
        [logits, probs = std::move(probs), tgt = std::move(tgt), inv_rows](Tape& t, const Array& g) {
            Array& buf = t.grad_buffer(logits);
            const double scale = g.item() * inv_rows;
            mat(buf) += scale * mat(probs);
            for (std::size_t r = 0; r < tgt.size(); ++r) {
                buf.at(r, tgt[r]) -= scale;
            }
        });
}

namespace {

struct RopeTable {
    std::vector<double> cos, sin;  // [L x half]
    std::size_t half = 0;
};

RopeTable rope_table(std::size_t len, std::size_t head_dim, double base) {
    RopeTable tab;
    tab.half = head_dim / 2;
    tab.cos.resize(len * tab.half);
    tab.sin.resize(len * tab.half);
    for (std::size_t i = 0; i < tab.half; ++i) {
        const double freq = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(head_dim));
        for (std::size_t pos = 0; pos < len; ++pos) {
            const double angle = static_cast<double>(pos) * freq;
            tab.cos[pos * tab.half + i] = std::cos(angle);
            tab.sin[pos * tab.half + i] = std::sin(angle);
        }
    }
    return tab;
}

// Rotates pairs by +angle (sign = 1) or -angle (sign = -1).
void rotate(const Array& src, Array& dst, const RopeTable& tab, std::size_t heads, double sign, bool add) {
    const std::size_t len = src.rows();
    const std::size_t d = src.cols();
    const std::size_t head_dim = d / heads;
    for (std::size_t pos = 0; pos < len; ++pos) {
        auto s = src.row(pos);
        auto o = dst.row(pos);
        for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < tab.half; ++i) {
                const double c = tab.cos[pos * tab.half + i];
                const double sn = sign * tab.sin[pos * tab.half + i];
                const std::size_t j = h * head_dim + 2 * i;
                const double x0 = s[j];
                const double x1 = s[j + 1];
                const double y0 = c * x0 - sn * x1;
                const double y1 = sn * x0 + c * x1;
                if (add) {
                    o[j] += y0;
                    o[j + 1] += y1;
                } else {
                    o[j] = y0;
                    o[j + 1] = y1;
                }
            }
        }
    }
}

}  // namespace

Var rope(const Var& x, std::size_t heads, double base) {
    const Array& xv = x.value();
    if (xv.rank() != 2 || heads == 0 || xv.cols() % (2 * heads) != 0) {
        throw DimensionError("rope: width " + std::to_string(xv.cols()) + " is not divisible into " +
                             std::to_string(heads) + " even-sized heads");
    }
    RopeTable tab = rope_table(xv.rows(), xv.cols() / heads, base);
    Array out(xv.shape());
    rotate(xv, out, tab, heads, 1.0, false);
    return x.tape().record(std::move(out), {x}, [x, heads, tab = std::move(tab)](Tape& t, const Array& g) {
        rotate(g, t.grad_buffer(x), tab, heads, -1.0, true);
    });
}

namespace {

// Row tiles for causal attention: tile [r0, r1) only attends to columns [0, r1).
constexpr Eigen::Index kAttentionTile = 128;

}  // namespace

Var causal_attention(const Var& q, const Var& k, const Var& v, std::size_t heads) {
    const Array& qv = q.value();
    if (qv.rank() != 2 || k.shape() != qv.shape() || v.shape() != qv.shape() || heads == 0 ||
        qv.cols() % heads != 0) {
        throw DimensionError("causal_attention: q " + shape_string(qv.shape()) + ", k " +
                             shape_string(k.shape()) + ", v " + shape_string(v.shape()) + " with " +
                             std::to_string(heads) + " heads");
    }
    const auto len = static_cast<Eigen::Index>(qv.rows());
    const auto d = static_cast<Eigen::Index>(qv.cols());
    const Eigen::Index hd = d / static_cast<Eigen::Index>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    // probs[h] holds the causal softmax for head h; entries above the diagonal are never read.
    std::vector<detail::RowMatrix> probs(heads, detail::RowMatrix(len, len));
    Array out(qv.shape());
    auto qm = mat(qv);
    auto km = mat(k.value());
    auto vm = mat(v.value());
    auto om = mat(out);
    for (std::size_t h = 0; h < heads; ++h) {
        const Eigen::Index c0 = static_cast<Eigen::Index>(h) * hd;
        detail::RowMatrix& p = probs[h];
        for (Eigen::Index r0 = 0; r0 < len; r0 += kAttentionTile) {
            const Eigen::Index rows = std::min(kAttentionTile, len - r0);
            const Eigen::Index r1 = r0 + rows;
            auto tile = p.block(r0, 0, rows, r1);
            tile.noalias() = scale * (qm.block(r0, c0, rows, hd) * km.block(0, c0, r1, hd).transpose());
            for (Eigen::Index i = 0; i < rows; ++i) {
                const Eigen::Index visible = r0 + i + 1;
                auto row = tile.row(i).head(visible).array();
                row = (row - row.maxCoeff()).exp();
                row *= 1.0 / row.sum();
                tile.row(i).tail(r1 - visible).setZero();
            }
            om.block(r0, c0, rows, hd).noalias() = tile * vm.block(0, c0, r1, hd);
        }
    }
    return q.tape().record(
        std::move(out), {q, k, v}, [q, k, v, heads, hd, scale, probs = std::move(probs)](Tape& t, const Array& g) {
            auto qm = mat(q.value());
            auto km = mat(k.value());
            auto vm = mat(v.value());
            auto gm = mat(g);
            const bool need_q = t.requires_grad(q);
            const bool need_k = t.requires_grad(k);
            const bool need_v = t.requires_grad(v);
            const Eigen::Index len = qm.rows();
            detail::RowMatrix ds;
            for (std::size_t h = 0; h < heads; ++h) {
                const Eigen::Index c0 = static_cast<Eigen::Index>(h) * hd;
                const detail::RowMatrix& p = probs[h];
                for (Eigen::Index r0 = 0; r0 < len; r0 += kAttentionTile) {
                    const Eigen::Index rows = std::min(kAttentionTile, len - r0);
                    const Eigen::Index r1 = r0 + rows;
                    const auto tile = p.block(r0, 0, rows, r1);
                    const auto go = gm.block(r0, c0, rows, hd);
                    if (need_v) {
                        mat(t.grad_buffer(v)).block(0, c0, r1, hd).noalias() += tile.transpose() * go;
                    }
                    if (!need_q && !need_k) {
                        continue;
                    }
                    ds.noalias() = go * vm.block(0, c0, r1, hd).transpose();
                    // dS = P * (dP - rowsum(P * dP)); masked entries have P = 0.
                    const Eigen::VectorXd row_dot = tile.cwiseProduct(ds).rowwise().sum();
                    ds = tile.cwiseProduct(ds.colwise() - row_dot);
                    if (need_q) {
                        mat(t.grad_buffer(q)).block(r0, c0, rows, hd).noalias() +=
                            scale * (ds * km.block(0, c0, r1, hd));
                    }
                    if (need_k) {
                        mat(t.grad_buffer(k)).block(0, c0, r1, hd).noalias() +=
                            scale * (ds.transpose() * qm.block(r0, c0, rows, hd));
                    }
                }
            }
        });
}

Var silu_mul(const Var& a, const Var& b) {
    const Array& av = a.value();
    const Array& bv = b.value();
    if (av.shape() != bv.shape()) {
        throw DimensionError("silu_mul: shapes " + shape_string(av.shape()) + " and " + shape_string(bv.shape()) +
                             " differ");
    }
    Array out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-av[i]));
        out[i] = av[i] * s * bv[i];
    }
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Array& g) {
        const Array& av = a.value();
        const Array& bv = b.value();
        Array* ga = t.requires_grad(a) ? &t.grad_buffer(a) : nullptr;
        Array* gb = t.requires_grad(b) ? &t.grad_buffer(b) : nullptr;
        for (std::size_t i = 0; i < av.size(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-av[i]));
            if (ga != nullptr) {
                (*ga)[i] += g[i] * bv[i] * s * (1.0 + av[i] * (1.0 - s));
            }
            if (gb != nullptr) {
                (*gb)[i] += g[i] * av[i] * s;
            }
        }
    });
}

Var swiglu(const Var& x, const Var& w_gate, const Var& w_up, const Var& w_down) {
    return matmul(silu_mul(matmul(x, w_gate), matmul(x, w_up)), w_down);
}

Var attention_block(const Var& x, const AttentionWeights& w, std::size_t heads, double rope_base) {
    const Var h = rms_norm(x, w.norm);
    const Var q = rope(matmul(h, w.wq), heads, rope_base);
    const Var k = rope(matmul(h, w.wk), heads, rope_base);
    const Var v = matmul(h, w.wv);
    return x + matmul(causal_attention(q, k, v, heads), w.wo);
}

Var feed_forward_block(const Var& x, const FeedForwardWeights& w) {
    return x + swiglu(rms_norm(x, w.norm), w.w_gate, w.w_up, w.w_down);
}

}  // namespace hchunk
