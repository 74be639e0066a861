// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hammerlab/model.hpp"
#include "hammerlab/tensor.hpp"

namespace hammerlab {

/// Read-only views of every parameter, indexed by registry position.
template <typename W>
using ParamViews = std::vector<std::span<const W>>;

inline ParamViews<float> views_of(const ParamRegistry& reg) {
    ParamViews<float> out;
    out.reserve(reg.size());
    for (const auto& e : reg) {
        out.push_back(e.tensor.f32());
    }
    return out;
}

namespace graph {

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

struct BlockSlots {
    std::size_t ln1_g, ln1_b, qkv, qkv_b, proj, proj_b, ln2_g, ln2_b, fc1, fc1_b, fc2, fc2_b;
};

/// Registry positions of each role, resolved from the canonical layout.
struct Slots {
    std::size_t patch = npos, patch_b = npos, cls = npos, pos = npos;
    std::vector<BlockSlots> blocks;
    std::size_t norm_g = npos, norm_b = npos;
    std::size_t hidden = npos, hidden_b = npos;
    std::size_t head = npos, head_b = npos;
};

inline Slots make_slots(const ModelConfig& c) {
    const auto layout = param_layout(c);
    auto idx = [&layout](const std::string& n) {
        for (std::size_t i = 0; i < layout.size(); ++i) {
            if (layout[i].name == n) {
                return i;
            }
        }
        return npos;
    };
    Slots s;
    s.head = idx("head_fc");
    s.head_b = idx("head_fc.bias");
    if (c.arch == Arch::tiny_mlp) {
        s.hidden = idx("hidden_fc");
        s.hidden_b = idx("hidden_fc.bias");
        return s;
    }
    s.patch = idx("patch_embed");
    s.patch_b = idx("patch_embed.bias");
    s.cls = idx("cls_token");
    s.pos = idx("pos_embed");
    for (std::size_t k = 0; k < c.depth; ++k) {
        const std::string b = "block" + std::to_string(k);
        s.blocks.push_back({idx(b + "_ln1.gamma"), idx(b + "_ln1.beta"), idx(b + "_attn_qkv"),
                            idx(b + "_attn_qkv.bias"), idx(b + "_attn_proj"), idx(b + "_attn_proj.bias"),
                            idx(b + "_ln2.gamma"), idx(b + "_ln2.beta"), idx(b + "_mlp_fc1"),
                            idx(b + "_mlp_fc1.bias"), idx(b + "_mlp_fc2"), idx(b + "_mlp_fc2.bias")});
    }
    s.norm_g = idx("norm.gamma");
    s.norm_b = idx("norm.beta");
    return s;
}

template <typename T>
T gelu(T x) {
    return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <typename T>
T gelu_grad(T x) {
    const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
    const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * std::numbers::pi_v<T>);
    return cdf + x * pdf;
}

/// out[k x n] += a[m x k]^T * b[m x n]
template <typename T>
void accumulate_at_b(std::span<const T> a, std::span<const T> b, std::size_t m, std::size_t k, std::size_t n,
                     std::span<T> out) {
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            const T av = a[r * k + i];
            T* orow = out.data() + i * n;
            const T* brow = b.data() + r * n;
            for (std::size_t j = 0; j < n; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
}

/// out[m x k] = a[m x n] * w[k x n]^T
template <typename T, typename W>
void matmul_bt(std::span<const T> a, std::span<const W> w, std::size_t m, std::size_t n, std::size_t k,
               std::span<T> out) {
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            T acc = 0;
            const W* wrow = w.data() + i * n;
            const T* arow = a.data() + r * n;
            for (std::size_t j = 0; j < n; ++j) {
                acc += arow[j] * static_cast<T>(wrow[j]);
            }
            out[r * k + i] = acc;
        }
    }
}

template <typename T>
void accumulate_rows(std::span<const T> a, std::size_t m, std::size_t n, std::span<T> out) {
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < n; ++j) {
            out[j] += a[r * n + j];
        }
    }
}

/// Backward of one layer-norm row. Accumulates into dgamma/dbeta and writes dx.
template <typename T, typename W>
void layer_norm_row_backward(std::span<const T> dy, std::span<const T> xhat, T rstd, std::span<const W> gamma,
                             std::span<T> dgamma, std::span<T> dbeta, std::span<T> dx) {
    const std::size_t n = dy.size();
    T mean_dxhat = 0;
    T mean_dxhat_xhat = 0;
    for (std::size_t i = 0; i < n; ++i) {
        dgamma[i] += dy[i] * xhat[i];
        dbeta[i] += dy[i];
        const T dxh = dy[i] * static_cast<T>(gamma[i]);
        mean_dxhat += dxh;
        mean_dxhat_xhat += dxh * xhat[i];
    }
    mean_dxhat /= static_cast<T>(n);
    mean_dxhat_xhat /= static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T dxh = dy[i] * static_cast<T>(gamma[i]);
        dx[i] = rstd * (dxh - mean_dxhat - xhat[i] * mean_dxhat_xhat);
    }
}

template <typename T>
struct BlockTape {
    std::vector<T> zin, xhat1, rstd1, a, qkv, probs, o, z1, xhat2, rstd2, b, h, g;
};

/// Intermediates recorded by a forward pass for the backward pass.
template <typename T>
struct Tape {
    std::vector<T> x0;
    std::vector<BlockTape<T>> blocks;
    std::vector<T> xhatf, rstdf;
    std::vector<T> hidden_pre;
    std::vector<T> features;
};

template <typename T, typename W>
void layer_norm_rows(std::span<const T> x, std::size_t rows, std::size_t n, std::span<const W> gamma,
                     std::span<const W> beta, std::span<T> out, std::span<T> xhat, std::span<T> rstd) {
    for (std::size_t r = 0; r < rows; ++r) {
        rstd[r] = kernels::layer_norm_row<T, W>(x.subspan(r * n, n), gamma, beta, out.subspan(r * n, n),
                                                xhat.subspan(r * n, n));
    }
}

/// Head input representation for one image (pooled token features for the
/// ViT, hidden activations for the MLP).
template <typename T, typename W>
std::vector<T> features(const ModelConfig& c, const Slots& s, const ParamViews<W>& p,
                        std::span<const std::uint8_t> pixels, Tape<T>* tape = nullptr) {
    if (pixels.size() != c.input_dim()) {
        throw dimension_error("image has " + std::to_string(pixels.size()) + " elements, model expects " +
                              std::to_string(c.input_dim()));
    }
    if (c.arch == Arch::tiny_mlp) {
        const std::size_t d = c.input_dim(), hdim = c.head_in_features;
        std::vector<T> x(d);
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = static_cast<T>(pixels[i]) / T(255);
        }
        std::vector<T> pre(hdim);
        kernels::matmul<T, W>(x, p[s.hidden], p[s.hidden_b], 1, d, hdim, pre);
        std::vector<T> act(hdim);
        for (std::size_t i = 0; i < hdim; ++i) {
            act[i] = pre[i] > T(0) ? pre[i] : T(0);
        }
        if (tape) {
            tape->x0 = std::move(x);
            tape->hidden_pre = std::move(pre);
            tape->features = act;
        }
        return act;
    }

    const std::size_t e = c.embed_dim, np = c.num_patches(), pd = c.patch_dim(), ps = c.patch_size;
    const std::size_t side = c.patches_per_side(), ch = c.channels, width = c.image_size;
    const std::size_t tokens = c.num_tokens(), first = tokens - np;
    const std::size_t heads = c.num_heads, hd = e / heads, hid = c.mlp_hidden;

    std::vector<T> x0(np * pd);
    for (std::size_t py = 0; py < side; ++py) {
        for (std::size_t px = 0; px < side; ++px) {
            T* row = x0.data() + (py * side + px) * pd;
            for (std::size_t dy = 0; dy < ps; ++dy) {
                for (std::size_t dx = 0; dx < ps; ++dx) {
                    for (std::size_t k = 0; k < ch; ++k) {
                        const std::size_t src = ((py * ps + dy) * width + (px * ps + dx)) * ch + k;
                        row[(dy * ps + dx) * ch + k] = static_cast<T>(pixels[src]) / T(255);
                    }
                }
            }
        }
    }

    std::vector<T> z(tokens * e);
    kernels::matmul<T, W>(x0, p[s.patch], p[s.patch_b], np, pd, e, std::span(z).subspan(first * e));
    if (s.cls != npos) {
        for (std::size_t j = 0; j < e; ++j) {
            z[j] = static_cast<T>(p[s.cls][j]);
        }
    }
    for (std::size_t i = 0; i < tokens * e; ++i) {
        z[i] += static_cast<T>(p[s.pos][i]);
    }
    if (tape) {
        tape->x0 = std::move(x0);
        tape->blocks.clear();
    }

    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    for (const BlockSlots& bs : s.blocks) {
        BlockTape<T> bt;
        bt.zin = z;
        bt.xhat1.resize(tokens * e);
        bt.rstd1.resize(tokens);
        bt.a.resize(tokens * e);
        layer_norm_rows<T, W>(z, tokens, e, p[bs.ln1_g], p[bs.ln1_b], bt.a, bt.xhat1, bt.rstd1);

        bt.qkv.resize(tokens * 3 * e);
        kernels::matmul<T, W>(bt.a, p[bs.qkv], p[bs.qkv_b], tokens, e, 3 * e, bt.qkv);

        bt.probs.resize(heads * tokens * tokens);
        bt.o.assign(tokens * e, T(0));
        std::vector<T> scores(tokens);
        for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t t = 0; t < tokens; ++t) {
                const T* q = bt.qkv.data() + t * 3 * e + h * hd;
                for (std::size_t u = 0; u < tokens; ++u) {
                    const T* kk = bt.qkv.data() + u * 3 * e + e + h * hd;
                    T acc = 0;
                    for (std::size_t j = 0; j < hd; ++j) {
                        acc += q[j] * kk[j];
                    }
                    scores[u] = acc * scale;
                }
                std::span<T> prow(bt.probs.data() + (h * tokens + t) * tokens, tokens);
                kernels::softmax_row<T>(scores, prow);
                T* orow = bt.o.data() + t * e + h * hd;
                for (std::size_t u = 0; u < tokens; ++u) {
                    const T* v = bt.qkv.data() + u * 3 * e + 2 * e + h * hd;
                    for (std::size_t j = 0; j < hd; ++j) {
                        orow[j] += prow[u] * v[j];
                    }
                }
            }
        }

        std::vector<T> y(tokens * e);
        kernels::matmul<T, W>(bt.o, p[bs.proj], p[bs.proj_b], tokens, e, e, y);
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += y[i];
        }
        bt.z1 = z;

        bt.xhat2.resize(tokens * e);
        bt.rstd2.resize(tokens);
        bt.b.resize(tokens * e);
        layer_norm_rows<T, W>(z, tokens, e, p[bs.ln2_g], p[bs.ln2_b], bt.b, bt.xhat2, bt.rstd2);
        bt.h.resize(tokens * hid);
        kernels::matmul<T, W>(bt.b, p[bs.fc1], p[bs.fc1_b], tokens, e, hid, bt.h);
        bt.g.resize(tokens * hid);
        for (std::size_t i = 0; i < bt.h.size(); ++i) {
            bt.g[i] = gelu(bt.h[i]);
        }
        std::vector<T> mlp(tokens * e);
        kernels::matmul<T, W>(bt.g, p[bs.fc2], p[bs.fc2_b], tokens, hid, e, mlp);
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += mlp[i];
        }
        if (tape) {
            tape->blocks.push_back(std::move(bt));
        }
    }

    std::vector<T> fn(tokens * e), xhatf(tokens * e), rstdf(tokens);
    layer_norm_rows<T, W>(z, tokens, e, p[s.norm_g], p[s.norm_b], fn, xhatf, rstdf);
    std::vector<T> pooled(e, T(0));
    if (c.pooling == Pooling::cls) {
        std::copy(fn.begin(), fn.begin() + static_cast<std::ptrdiff_t>(e), pooled.begin());
    } else {
        for (std::size_t t = 0; t < tokens; ++t) {
            for (std::size_t j = 0; j < e; ++j) {
                pooled[j] += fn[t * e + j];
            }
        }
        for (T& v : pooled) {
            v /= static_cast<T>(tokens);
        }
    }
    if (tape) {
        tape->xhatf = std::move(xhatf);
        tape->rstdf = std::move(rstdf);
        tape->features = pooled;
    }
    return pooled;
}

template <typename T, typename W>
std::vector<T> head_logits(const ModelConfig& c, const Slots& s, const ParamViews<W>& p, std::span<const T> feats) {
    std::vector<T> logits(c.num_classes);
    kernels::matmul<T, W>(feats, p[s.head], p[s.head_b], 1, c.head_in_features, c.num_classes, logits);
    return logits;
}

template <typename T, typename W>
std::vector<T> logits(const ModelConfig& c, const Slots& s, const ParamViews<W>& p,
                      std::span<const std::uint8_t> pixels, Tape<T>* tape = nullptr) {
    const auto f = features<T, W>(c, s, p, pixels, tape);
    return head_logits<T, W>(c, s, p, f);
}

/// Accumulates d(loss)/d(param) into grads given d(loss)/d(logits) and the
/// tape of the matching forward pass.
template <typename T, typename W>
void backward(const ModelConfig& c, const Slots& s, const ParamViews<W>& p, const Tape<T>& tape,
              std::span<const T> dlogits, std::vector<std::vector<T>>& grads) {
    const std::size_t hin = c.head_in_features, nc = c.num_classes;
    accumulate_at_b<T>(tape.features, dlogits, 1, hin, nc, grads[s.head]);
    accumulate_rows<T>(dlogits, 1, nc, grads[s.head_b]);
    std::vector<T> df(hin);
    matmul_bt<T, W>(dlogits, p[s.head], 1, nc, hin, df);

    if (c.arch == Arch::tiny_mlp) {
        const std::size_t d = c.input_dim();
        for (std::size_t i = 0; i < hin; ++i) {
            df[i] = tape.hidden_pre[i] > T(0) ? df[i] : T(0);
        }
        accumulate_at_b<T>(tape.x0, df, 1, d, hin, grads[s.hidden]);
        accumulate_rows<T>(df, 1, hin, grads[s.hidden_b]);
        return;
    }

    const std::size_t e = c.embed_dim, np = c.num_patches(), pd = c.patch_dim();
    const std::size_t tokens = c.num_tokens(), first = tokens - np;
    const std::size_t heads = c.num_heads, hd = e / heads, hid = c.mlp_hidden;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));

    std::vector<T> dfn(tokens * e, T(0));
    if (c.pooling == Pooling::cls) {
        std::copy(df.begin(), df.end(), dfn.begin());
    } else {
        for (std::size_t t = 0; t < tokens; ++t) {
            for (std::size_t j = 0; j < e; ++j) {
                dfn[t * e + j] = df[j] / static_cast<T>(tokens);
            }
        }
    }
    std::vector<T> dz(tokens * e);
    for (std::size_t t = 0; t < tokens; ++t) {
        layer_norm_row_backward<T, W>(std::span<const T>(dfn).subspan(t * e, e),
                                      std::span<const T>(tape.xhatf).subspan(t * e, e), tape.rstdf[t], p[s.norm_g],
                                      grads[s.norm_g], grads[s.norm_b], std::span(dz).subspan(t * e, e));
    }

    std::vector<T> tmp(tokens * e);
    for (std::size_t k = s.blocks.size(); k-- > 0;) {
        const BlockSlots& bs = s.blocks[k];
        const BlockTape<T>& bt = tape.blocks[k];

        // MLP branch: z_out = z1 + fc2(gelu(fc1(ln2(z1))))
        accumulate_at_b<T>(bt.g, dz, tokens, hid, e, grads[bs.fc2]);
        accumulate_rows<T>(dz, tokens, e, grads[bs.fc2_b]);
        std::vector<T> dh(tokens * hid);
        matmul_bt<T, W>(dz, p[bs.fc2], tokens, e, hid, dh);
        for (std::size_t i = 0; i < dh.size(); ++i) {
            dh[i] *= gelu_grad(bt.h[i]);
        }
        accumulate_at_b<T>(bt.b, dh, tokens, e, hid, grads[bs.fc1]);
        accumulate_rows<T>(dh, tokens, hid, grads[bs.fc1_b]);
        std::vector<T> db(tokens * e);
        matmul_bt<T, W>(dh, p[bs.fc1], tokens, hid, e, db);
        for (std::size_t t = 0; t < tokens; ++t) {
            layer_norm_row_backward<T, W>(std::span<const T>(db).subspan(t * e, e),
                                          std::span<const T>(bt.xhat2).subspan(t * e, e), bt.rstd2[t], p[bs.ln2_g],
                                          grads[bs.ln2_g], grads[bs.ln2_b], std::span(tmp).subspan(t * e, e));
        }
        for (std::size_t i = 0; i < dz.size(); ++i) {
            dz[i] += tmp[i];
        }

        // Attention branch: z1 = zin + proj(attn(qkv(ln1(zin))))
        accumulate_at_b<T>(bt.o, dz, tokens, e, e, grads[bs.proj]);
        accumulate_rows<T>(dz, tokens, e, grads[bs.proj_b]);
        std::vector<T> dout(tokens * e);
        matmul_bt<T, W>(dz, p[bs.proj], tokens, e, e, dout);

        std::vector<T> dqkv(tokens * 3 * e, T(0));
        std::vector<T> dp(tokens);
        for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t t = 0; t < tokens; ++t) {
                const T* prow = bt.probs.data() + (h * tokens + t) * tokens;
                const T* dorow = dout.data() + t * e + h * hd;
                T dot = 0;
                for (std::size_t u = 0; u < tokens; ++u) {
                    const T* v = bt.qkv.data() + u * 3 * e + 2 * e + h * hd;
                    T* dv = dqkv.data() + u * 3 * e + 2 * e + h * hd;
                    T acc = 0;
                    for (std::size_t j = 0; j < hd; ++j) {
                        acc += dorow[j] * v[j];
                        dv[j] += prow[u] * dorow[j];
                    }
                    dp[u] = acc;
                    dot += acc * prow[u];
                }
                const T* q = bt.qkv.data() + t * 3 * e + h * hd;
                T* dq = dqkv.data() + t * 3 * e + h * hd;
                for (std::size_t u = 0; u < tokens; ++u) {
                    const T ds = prow[u] * (dp[u] - dot) * scale;
                    const T* kk = bt.qkv.data() + u * 3 * e + e + h * hd;
                    T* dk = dqkv.data() + u * 3 * e + e + h * hd;
                    for (std::size_t j = 0; j < hd; ++j) {
                        dq[j] += ds * kk[j];
                        dk[j] += ds * q[j];
                    }
                }
            }
        }
        accumulate_at_b<T>(bt.a, dqkv, tokens, e, 3 * e, grads[bs.qkv]);
        accumulate_rows<T>(dqkv, tokens, 3 * e, grads[bs.qkv_b]);
        std::vector<T> da(tokens * e);
        matmul_bt<T, W>(dqkv, p[bs.qkv], tokens, 3 * e, e, da);
        for (std::size_t t = 0; t < tokens; ++t) {
            layer_norm_row_backward<T, W>(std::span<const T>(da).subspan(t * e, e),
                                          std::span<const T>(bt.xhat1).subspan(t * e, e), bt.rstd1[t], p[bs.ln1_g],
                                          grads[bs.ln1_g], grads[bs.ln1_b], std::span(tmp).subspan(t * e, e));
        }
        for (std::size_t i = 0; i < dz.size(); ++i) {
            dz[i] += tmp[i];
        }
    }

    accumulate_rows<T>(dz, 1, tokens * e, grads[s.pos]);
    if (s.cls != npos) {
        accumulate_rows<T>(std::span<const T>(dz).first(e), 1, e, grads[s.cls]);
    }
    const auto dpatch = std::span<const T>(dz).subspan(first * e);
    accumulate_at_b<T>(tape.x0, dpatch, np, pd, e, grads[s.patch]);
    accumulate_rows<T>(dpatch, np, e, grads[s.patch_b]);
}

/// Softmax cross-entropy of one sample; writes d(loss)/d(logits).
template <typename T>
T cross_entropy(std::span<const T> logits, std::size_t label, std::span<T> dlogits) {
    kernels::softmax_row<T>(logits, dlogits);
    const T loss = -std::log(dlogits[label]);
    dlogits[label] -= T(1);
    return loss;
}

}  // namespace graph

/// Predicted class: argmax with ties to the lowest index; NaN logits never
/// win. Returns -1 when every logit is NaN (counted as a miss everywhere).
template <typename T>
int argmax(std::span<const T> logits) {
    int best = -1;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (std::isnan(logits[i])) {
            continue;
        }
        if (best < 0 || logits[i] > logits[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

/// Logits of one image under the model's current weights. Pure.
inline Tensor forward(const Model& m, std::span<const std::uint8_t> pixels) {
    const auto out = graph::logits<float, float>(m.config, graph::make_slots(m.config), views_of(m.params), pixels);
    return Tensor({m.config.num_classes}, {out.begin(), out.end()});
}

/// Bound evaluator that resolves slots and views once, for repeated use.
class Predictor {
public:
    explicit Predictor(const Model& m) : config_(m.config), slots_(graph::make_slots(m.config)), views_(views_of(m.params)) {}

    std::vector<float> logits(std::span<const std::uint8_t> pixels) const {
        return graph::logits<float, float>(config_, slots_, views_, pixels);
    }
    std::vector<float> features(std::span<const std::uint8_t> pixels) const {
        return graph::features<float, float>(config_, slots_, views_, pixels);
    }
    std::vector<float> head(std::span<const float> feats) const {
        return graph::head_logits<float, float>(config_, slots_, views_, feats);
    }
    int predict(std::span<const std::uint8_t> pixels) const {
        const auto l = logits(pixels);
        return argmax<float>(l);
    }

private:
    ModelConfig config_;
    graph::Slots slots_;
    ParamViews<float> views_;
};

}  // namespace hammerlab
