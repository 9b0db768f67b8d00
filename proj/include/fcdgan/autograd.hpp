// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Tape-based reverse-mode autodiff over dense NCHW tensors. The tape records
// nodes in construction order, which is already a topological order, so
// backward() is a single reverse sweep. Convolutions lower to im2col + GEMM
// (Eigen). Templated on the scalar type: training uses float, the
// finite-difference test suites instantiate double.

#include <Eigen/Core>

#include <cmath>
#include <cstring>
#include <functional>
#include <deque>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "fcdgan/tensor.hpp"

namespace fcdgan::ag {

template <typename T>
struct ParamData {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool frozen = false;  // frozen params receive no gradient

    void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
using Param = std::shared_ptr<ParamData<T>>;

template <typename T>
Param<T> make_param(std::string name, std::vector<int> shape) {
    auto p = std::make_shared<ParamData<T>>();
    p->name = std::move(name);
    p->value = Tensor<T>::zeros(shape);
    p->grad = Tensor<T>::zeros(shape);
    return p;
}

template <typename T>
class Graph {
  public:
    using Id = int;

    struct Node {
        Tensor<T> val;
        Tensor<T> grad;  // empty until a gradient reaches this node
        std::function<void(Graph&)> back;
        bool needs_grad = false;
        int pass = -1;  // backward pass that last touched this node
    };

    // ---- graph construction -------------------------------------------------

    Id input(Tensor<T> v, bool needs_grad = false) {
        Node n;
        n.val = std::move(v);
        n.needs_grad = needs_grad;
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size()) - 1;
    }

    Id constant(Tensor<T> v) { return input(std::move(v), false); }

    /// Leaf bound to a persistent parameter. Cached per graph so Siamese
    /// branches sharing weights accumulate into one gradient. Frozen params
    /// contribute values but receive no gradient; the cache is keyed by the
    /// frozen state, so a network frozen for one objective and live for
    /// another (adversarial training) gets distinct leaves.
    Id param(const Param<T>& p) {
        auto [it, inserted] = param_cache_.try_emplace(p.get(), std::pair<Id, Id>{-1, -1});
        Id& slot = p->frozen ? it->second.first : it->second.second;
        if (slot >= 0) return slot;
        Id id = input(p->value, !p->frozen);
        if (!p->frozen) {
            ParamData<T>* raw = p.get();
            nodes_[id].back = [id, raw](Graph& g) {
                const Tensor<T>& gr = g.nodes_[id].grad;
                for (std::int64_t i = 0; i < gr.numel(); ++i) raw->grad[i] += gr[i];
            };
        }
        slot = id;
        return id;
    }

    Tensor<T>& val(Id id) { return nodes_[id].val; }
    const Tensor<T>& val(Id id) const { return nodes_[id].val; }
    T scalar(Id id) const { return nodes_[id].val[0]; }

    bool grad_present(Id id) const { return !nodes_[id].grad.empty(); }
    /// Gradient tensor, allocated (zeros) on first touch; touching marks the
    /// node as live for the current backward pass.
    Tensor<T>& grad(Id id) {
        Node& n = nodes_[id];
        if (n.grad.empty()) n.grad = Tensor<T>::zeros(n.val.shape);
        n.pass = pass_;
        return n.grad;
    }

    /// Reverse sweep from a scalar root. A graph may host several backward
    /// calls (e.g. the two adversarial objectives) as long as their
    /// differentiable subgraphs are disjoint; only nodes reached by the
    /// current pass fire.
    void backward(Id root) {
        require_shape(nodes_[root].val.numel() == 1, "backward: root must be scalar");
        ++pass_;
        grad(root)[0] = T(1);
        for (Id id = root; id >= 0; --id) {
            Node& n = nodes_[id];
            if (!n.back || n.pass != pass_ || n.grad.empty()) continue;
            n.back(*this);
        }
    }

    std::size_t size() const { return nodes_.size(); }

    // ---- elementwise ---------------------------------------------------------

    Id add(Id a, Id b) {
        require_shape(val(a).same_shape(val(b)), "add: shape mismatch");
        Tensor<T> out = val(a);
        const Tensor<T>& vb = val(b);
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
        return unary_or_binary(std::move(out), a, b, [](Graph& g, Id self, Id a2, Id b2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            if (g.nodes_[a2].needs_grad) {
                Tensor<T>& ga = g.grad(a2);
                for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
            }
            if (g.nodes_[b2].needs_grad) {
                Tensor<T>& gb = g.grad(b2);
                for (std::int64_t i = 0; i < go.numel(); ++i) gb[i] += go[i];
            }
        });
    }

    Id sub(Id a, Id b) {
        require_shape(val(a).same_shape(val(b)), "sub: shape mismatch");
        Tensor<T> out = val(a);
        const Tensor<T>& vb = val(b);
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= vb[i];
        return unary_or_binary(std::move(out), a, b, [](Graph& g, Id self, Id a2, Id b2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            if (g.nodes_[a2].needs_grad) {
                Tensor<T>& ga = g.grad(a2);
                for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
            }
            if (g.nodes_[b2].needs_grad) {
                Tensor<T>& gb = g.grad(b2);
                for (std::int64_t i = 0; i < go.numel(); ++i) gb[i] -= go[i];
            }
        });
    }

    Id mul(Id a, Id b) {
        require_shape(val(a).same_shape(val(b)), "mul: shape mismatch");
        Tensor<T> out = val(a);
        const Tensor<T>& vb = val(b);
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= vb[i];
        return unary_or_binary(std::move(out), a, b, [](Graph& g, Id self, Id a2, Id b2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            const Tensor<T>& va = g.nodes_[a2].val;
            const Tensor<T>& vb2 = g.nodes_[b2].val;
            if (g.nodes_[a2].needs_grad) {
                Tensor<T>& ga = g.grad(a2);
                for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * vb2[i];
            }
            if (g.nodes_[b2].needs_grad) {
                Tensor<T>& gb = g.grad(b2);
                for (std::int64_t i = 0; i < go.numel(); ++i) gb[i] += go[i] * va[i];
            }
        });
    }

    Id scale(Id a, T c) {
        Tensor<T> out = val(a);
        for (auto& v : out.data) v *= c;
        return unary(std::move(out), a, [c](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += c * go[i];
        });
    }

    Id add_scalar(Id a, T c) {
        Tensor<T> out = val(a);
        for (auto& v : out.data) v += c;
        return unary(std::move(out), a, [](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
        });
    }

    /// 1 - x, the mask complement used everywhere in the objectives.
    Id one_minus(Id a) {
        Tensor<T> out = val(a);
        for (auto& v : out.data) v = T(1) - v;
        return unary(std::move(out), a, [](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] -= go[i];
        });
    }

    Id abs_(Id a) {
        Tensor<T> out = val(a);
        for (auto& v : out.data) v = std::abs(v);
        return unary(std::move(out), a, [](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            const Tensor<T>& va = g.nodes_[a2].val;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i) {
                const T s = va[i] > T(0) ? T(1) : (va[i] < T(0) ? T(-1) : T(0));
                ga[i] += s * go[i];
            }
        });
    }

    Id square(Id a) {
        Tensor<T> out = val(a);
        for (auto& v : out.data) v = v * v;
        return unary(std::move(out), a, [](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            const Tensor<T>& va = g.nodes_[a2].val;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += T(2) * va[i] * go[i];
        });
    }

    Id log_(Id a) {
        Tensor<T> out = val(a);
        for (auto& v : out.data) v = std::log(v);
        return unary(std::move(out), a, [](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            const Tensor<T>& va = g.nodes_[a2].val;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] / va[i];
        });
    }

    /// Clamp to [lo,hi]; gradient is passed only through the interior.
    Id clamp(Id a, T lo, T hi) {
        Tensor<T> out = val(a);
        for (auto& v : out.data) v = v < lo ? lo : (v > hi ? hi : v);
        return unary(std::move(out), a, [lo, hi](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            const Tensor<T>& va = g.nodes_[a2].val;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i)
                if (va[i] > lo && va[i] < hi) ga[i] += go[i];
        });
    }

    Id sigmoid(Id a) {
        Tensor<T> out = val(a);
        for (auto& v : out.data) {
            if (v >= T(0)) {
                v = T(1) / (T(1) + std::exp(-v));
            } else {
                const T e = std::exp(v);
                v = e / (T(1) + e);
            }
        }
        Id id = unary(std::move(out), a, [](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            const Tensor<T>& y = g.nodes_[self].val;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * y[i] * (T(1) - y[i]);
        });
        return id;
    }

    Id relu(Id a) {
        Tensor<T> out = val(a);
        for (auto& v : out.data) v = v > T(0) ? v : T(0);
        return unary(std::move(out), a, [](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            const Tensor<T>& va = g.nodes_[a2].val;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i)
                if (va[i] > T(0)) ga[i] += go[i];
        });
    }

    Id leaky_relu(Id a, T slope) {
        Tensor<T> out = val(a);
        for (auto& v : out.data) v = v > T(0) ? v : slope * v;
        return unary(std::move(out), a, [slope](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            const Tensor<T>& va = g.nodes_[a2].val;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += (va[i] > T(0) ? T(1) : slope) * go[i];
        });
    }

    /// Value copy that blocks gradient flow.
    Id detach(Id a) { return input(val(a), false); }

    // ---- shape / broadcast ---------------------------------------------------

    Id concat_c(Id a, Id b) {
        const auto& sa = val(a).shape;
        const auto& sb = val(b).shape;
        require_shape(sa.size() == 4 && sb.size() == 4 && sa[0] == sb[0] && sa[2] == sb[2] && sa[3] == sb[3],
                      "concat_c: incompatible shapes");
        const int N = sa[0], Ca = sa[1], Cb = sb[1], H = sa[2], W = sa[3];
        Tensor<T> out({N, Ca + Cb, H, W});
        const std::int64_t plane = static_cast<std::int64_t>(H) * W;
        for (int n = 0; n < N; ++n) {
            std::memcpy(out.ptr() + (static_cast<std::int64_t>(n) * (Ca + Cb)) * plane,
                        val(a).ptr() + static_cast<std::int64_t>(n) * Ca * plane, sizeof(T) * Ca * plane);
            std::memcpy(out.ptr() + (static_cast<std::int64_t>(n) * (Ca + Cb) + Ca) * plane,
                        val(b).ptr() + static_cast<std::int64_t>(n) * Cb * plane, sizeof(T) * Cb * plane);
        }
        return unary_or_binary(std::move(out), a, b, [N, Ca, Cb, plane](Graph& g, Id self, Id a2, Id b2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            if (g.nodes_[a2].needs_grad) {
                Tensor<T>& ga = g.grad(a2);
                for (int n = 0; n < N; ++n)
                    for (std::int64_t i = 0; i < Ca * plane; ++i)
                        ga[static_cast<std::int64_t>(n) * Ca * plane + i] +=
                            go[static_cast<std::int64_t>(n) * (Ca + Cb) * plane + i];
            }
            if (g.nodes_[b2].needs_grad) {
                Tensor<T>& gb = g.grad(b2);
                for (int n = 0; n < N; ++n)
                    for (std::int64_t i = 0; i < Cb * plane; ++i)
                        gb[static_cast<std::int64_t>(n) * Cb * plane + i] +=
                            go[(static_cast<std::int64_t>(n) * (Ca + Cb) + Ca) * plane + i];
            }
        });
    }

    Id select_channel(Id a, int c) {
        const auto& s = val(a).shape;
        require_shape(s.size() == 4 && c >= 0 && c < s[1], "select_channel: bad channel");
        const int N = s[0], C = s[1], H = s[2], W = s[3];
        const std::int64_t plane = static_cast<std::int64_t>(H) * W;
        Tensor<T> out({N, 1, H, W});
        for (int n = 0; n < N; ++n)
            std::memcpy(out.ptr() + n * plane, val(a).ptr() + (static_cast<std::int64_t>(n) * C + c) * plane,
                        sizeof(T) * plane);
        return unary(std::move(out), a, [c, N, C, plane](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (int n = 0; n < N; ++n)
                for (std::int64_t i = 0; i < plane; ++i)
                    ga[(static_cast<std::int64_t>(n) * C + c) * plane + i] += go[n * plane + i];
        });
    }

    /// (N,1,H,W) replicated to (N,C,H,W). Used to feed single bands to the
    /// 3-channel content extractor.
    Id broadcast_c(Id a, int C) {
        const auto& s = val(a).shape;
        require_shape(s.size() == 4 && s[1] == 1, "broadcast_c: input must be (N,1,H,W)");
        const int N = s[0], H = s[2], W = s[3];
        const std::int64_t plane = static_cast<std::int64_t>(H) * W;
        Tensor<T> out({N, C, H, W});
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c)
                std::memcpy(out.ptr() + (static_cast<std::int64_t>(n) * C + c) * plane, val(a).ptr() + n * plane,
                            sizeof(T) * plane);
        return unary(std::move(out), a, [C, N, plane](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c)
                    for (std::int64_t i = 0; i < plane; ++i)
                        ga[n * plane + i] += go[(static_cast<std::int64_t>(n) * C + c) * plane + i];
        });
    }

    /// x * m with m broadcast across channels; x (N,C,H,W), m (N,1,H,W).
    Id mul_maskc(Id x, Id m) {
        const auto& sx = val(x).shape;
        const auto& sm = val(m).shape;
        require_shape(sx.size() == 4 && sm.size() == 4 && sm[1] == 1 && sx[0] == sm[0] && sx[2] == sm[2] &&
                          sx[3] == sm[3],
                      "mul_maskc: shape mismatch");
        const int N = sx[0], C = sx[1];
        const std::int64_t plane = static_cast<std::int64_t>(sx[2]) * sx[3];
        Tensor<T> out = val(x);
        const Tensor<T>& vm = val(m);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                T* o = out.ptr() + (static_cast<std::int64_t>(n) * C + c) * plane;
                const T* mm = vm.ptr() + n * plane;
                for (std::int64_t i = 0; i < plane; ++i) o[i] *= mm[i];
            }
        return unary_or_binary(std::move(out), x, m, [N, C, plane](Graph& g, Id self, Id x2, Id m2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            const Tensor<T>& vx = g.nodes_[x2].val;
            const Tensor<T>& vm2 = g.nodes_[m2].val;
            if (g.nodes_[x2].needs_grad) {
                Tensor<T>& gx = g.grad(x2);
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c) {
                        const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * plane;
                        for (std::int64_t i = 0; i < plane; ++i) gx[off + i] += go[off + i] * vm2[n * plane + i];
                    }
            }
            if (g.nodes_[m2].needs_grad) {
                Tensor<T>& gm = g.grad(m2);
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c) {
                        const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * plane;
                        for (std::int64_t i = 0; i < plane; ++i) gm[n * plane + i] += go[off + i] * vx[off + i];
                    }
            }
        });
    }

    /// Mean over channels: (N,C,H,W) -> (N,1,H,W).
    Id mean_c(Id a) {
        const auto& s = val(a).shape;
        require_shape(s.size() == 4, "mean_c: expects NCHW");
        const int N = s[0], C = s[1];
        const std::int64_t plane = static_cast<std::int64_t>(s[2]) * s[3];
        Tensor<T> out({N, 1, s[2], s[3]});
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const T* src = val(a).ptr() + (static_cast<std::int64_t>(n) * C + c) * plane;
                T* dst = out.ptr() + n * plane;
                for (std::int64_t i = 0; i < plane; ++i) dst[i] += src[i];
            }
        const T inv = T(1) / static_cast<T>(C);
        for (auto& v : out.data) v *= inv;
        return unary(std::move(out), a, [N, C, plane, inv](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * plane;
                    for (std::int64_t i = 0; i < plane; ++i) ga[off + i] += inv * go[n * plane + i];
                }
        });
    }

    /// Reflect padding (edge not repeated); pads must be <= dim-1.
    Id pad_reflect(Id a, int pt, int pb, int pl, int pr) {
        const auto& s = val(a).shape;
        require_shape(s.size() == 4, "pad_reflect: expects NCHW");
        const int N = s[0], C = s[1], H = s[2], W = s[3];
        require_shape(pt <= H - 1 && pb <= H - 1 && pl <= W - 1 && pr <= W - 1 && pt >= 0 && pb >= 0 && pl >= 0 &&
                          pr >= 0,
                      "pad_reflect: pad larger than input");
        const int Ho = H + pt + pb, Wo = W + pl + pr;
        auto refl = [](int i, int n) {
            if (i < 0) return -i;
            if (i >= n) return 2 * n - 2 - i;
            return i;
        };
        Tensor<T> out({N, C, Ho, Wo});
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c)
                for (int h = 0; h < Ho; ++h) {
                    const int sh = refl(h - pt, H);
                    for (int w = 0; w < Wo; ++w)
                        out.at4(n, c, h, w) = val(a).at4(n, c, sh, refl(w - pl, W));
                }
        return unary(std::move(out), a, [pt, pl, N, C, H, W, Ho, Wo, refl](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c)
                    for (int h = 0; h < Ho; ++h) {
                        const int sh = refl(h - pt, H);
                        for (int w = 0; w < Wo; ++w)
                            ga.at4(n, c, sh, refl(w - pl, W)) += go.at4(n, c, h, w);
                    }
        });
    }

    Id crop(Id a, int top, int left, int h, int w) {
        const auto& s = val(a).shape;
        require_shape(s.size() == 4 && top + h <= s[2] && left + w <= s[3], "crop: out of range");
        const int N = s[0], C = s[1];
        Tensor<T> out({N, C, h, w});
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < h; ++i)
                    std::memcpy(&out.at4(n, c, i, 0), &val(a).at4(n, c, top + i, left), sizeof(T) * w);
        return unary(std::move(out), a, [top, left, h, w, N, C](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c)
                    for (int i = 0; i < h; ++i)
                        for (int j = 0; j < w; ++j) ga.at4(n, c, top + i, left + j) += go.at4(n, c, i, j);
        });
    }

    // ---- reductions ------------------------------------------------------------

    Id sum_all(Id a) {
        T acc = T(0);
        for (const auto& v : val(a).data) acc += v;
        return unary(Tensor<T>::scalar(acc), a, [](Graph& g, Id self, Id a2) {
            const T go = g.nodes_[self].grad[0];
            Tensor<T>& ga = g.grad(a2);
            for (auto& v : ga.data) v += go;
        });
    }

    Id mean_all(Id a) {
        const T inv = T(1) / static_cast<T>(val(a).numel());
        T acc = T(0);
        for (const auto& v : val(a).data) acc += v;
        return unary(Tensor<T>::scalar(acc * inv), a, [inv](Graph& g, Id self, Id a2) {
            const T go = g.nodes_[self].grad[0] * inv;
            Tensor<T>& ga = g.grad(a2);
            for (auto& v : ga.data) v += go;
        });
    }

    /// Sum over all dims except the leading batch dim: (N,...) -> (N).
    Id sum_per_sample(Id a) {
        const auto& s = val(a).shape;
        require_shape(!s.empty(), "sum_per_sample: scalar input");
        const int N = s[0];
        const std::int64_t per = val(a).numel() / N;
        Tensor<T> out({N});
        for (int n = 0; n < N; ++n) {
            T acc = T(0);
            const T* src = val(a).ptr() + n * per;
            for (std::int64_t i = 0; i < per; ++i) acc += src[i];
            out[n] = acc;
        }
        return unary(std::move(out), a, [N, per](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (int n = 0; n < N; ++n) {
                const T gn = go[n];
                T* dst = ga.ptr() + n * per;
                for (std::int64_t i = 0; i < per; ++i) dst[i] += gn;
            }
        });
    }

    Id div_elem(Id a, Id b) {
        require_shape(val(a).same_shape(val(b)), "div_elem: shape mismatch");
        Tensor<T> out = val(a);
        const Tensor<T>& vb = val(b);
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] /= vb[i];
        return unary_or_binary(std::move(out), a, b, [](Graph& g, Id self, Id a2, Id b2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            const Tensor<T>& va = g.nodes_[a2].val;
            const Tensor<T>& vb2 = g.nodes_[b2].val;
            if (g.nodes_[a2].needs_grad) {
                Tensor<T>& ga = g.grad(a2);
                for (std::int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] / vb2[i];
            }
            if (g.nodes_[b2].needs_grad) {
                Tensor<T>& gb = g.grad(b2);
                for (std::int64_t i = 0; i < go.numel(); ++i) gb[i] -= go[i] * va[i] / (vb2[i] * vb2[i]);
            }
        });
    }

    // ---- neural-network ops ------------------------------------------------------

    /// conv2d, zero padding. x (N,Cin,H,W), w (Cout,Cin,k,k), b (Cout).
    Id conv2d(Id x, Id w, Id b, int stride, int pad) {
        const auto& sx = val(x).shape;
        const auto& sw = val(w).shape;
        require_shape(sx.size() == 4 && sw.size() == 4 && sx[1] == sw[1], "conv2d: shape mismatch");
        const int N = sx[0], Cin = sx[1], H = sx[2], W = sx[3];
        const int Cout = sw[0], k = sw[2];
        require_shape(sw[3] == k && val(b).numel() == Cout, "conv2d: weight/bias shape");
        const int Ho = (H + 2 * pad - k) / stride + 1;
        const int Wo = (W + 2 * pad - k) / stride + 1;
        require_shape(Ho >= 1 && Wo >= 1, "conv2d: output would be empty");
        const int K = Cin * k * k;
        const std::int64_t P = static_cast<std::int64_t>(Ho) * Wo;

        Tensor<T> out({N, Cout, Ho, Wo});
        {
            const T* xv = val(x).ptr();
            const T* wv = val(w).ptr();
            const T* bv = val(b).ptr();
            T* ov = out.ptr();
#pragma omp parallel for schedule(static)
            for (int n = 0; n < N; ++n) {
                std::vector<T>& col = col_buffer(static_cast<std::size_t>(K) * P);
                im2col(xv + static_cast<std::int64_t>(n) * Cin * H * W, Cin, H, W, k, stride, pad, Ho, Wo,
                       col.data());
                CMap wm(wv, Cout, K);
                CMap cm(col.data(), K, P);
                Map om(ov + static_cast<std::int64_t>(n) * Cout * P, Cout, P);
                om.noalias() = wm * cm;
                for (int c = 0; c < Cout; ++c) om.row(c).array() += bv[c];
            }
        }

        Id id = input(std::move(out), nodes_[x].needs_grad || nodes_[w].needs_grad || nodes_[b].needs_grad);
        if (!nodes_[id].needs_grad) return id;
        nodes_[id].back = [id, x, w, b, N, Cin, H, W, Cout, k, stride, pad, Ho, Wo, K, P](Graph& g) {
            const Tensor<T>& go = g.nodes_[id].grad;
            const T* gov = go.ptr();
            if (g.nodes_[b].needs_grad) {
                Tensor<T>& gb = g.grad(b);
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < Cout; ++c) {
                        const T* src = gov + (static_cast<std::int64_t>(n) * Cout + c) * P;
                        T acc = T(0);
                        for (std::int64_t i = 0; i < P; ++i) acc += src[i];
                        gb[c] += acc;
                    }
            }
            if (g.nodes_[w].needs_grad) {
                Tensor<T>& gw = g.grad(w);
                Map gwm(gw.ptr(), Cout, K);
                const T* xv = g.nodes_[x].val.ptr();
                std::vector<T>& col = col_buffer(static_cast<std::size_t>(K) * P);
                for (int n = 0; n < N; ++n) {  // serial accumulation keeps the sum order fixed
                    im2col(xv + static_cast<std::int64_t>(n) * Cin * H * W, Cin, H, W, k, stride, pad, Ho, Wo,
                           col.data());
                    CMap gom(gov + static_cast<std::int64_t>(n) * Cout * P, Cout, P);
                    CMap cm(col.data(), K, P);
                    gwm.noalias() += gom * cm.transpose();
                }
            }
            if (g.nodes_[x].needs_grad) {
                Tensor<T>& gx = g.grad(x);
                const T* wv = g.nodes_[w].val.ptr();
                T* gxv = gx.ptr();
#pragma omp parallel for schedule(static)
                for (int n = 0; n < N; ++n) {
                    std::vector<T>& dcol = col_buffer(static_cast<std::size_t>(K) * P);
                    CMap wm(wv, Cout, K);
                    CMap gom(gov + static_cast<std::int64_t>(n) * Cout * P, Cout, P);
                    Map dcm(dcol.data(), K, P);
                    dcm.noalias() = wm.transpose() * gom;
                    col2im_add(dcol.data(), Cin, H, W, k, stride, pad, Ho, Wo,
                               gxv + static_cast<std::int64_t>(n) * Cin * H * W);
                }
            }
        };
        return id;
    }

    /// 2x2 max pooling, stride 2. Spatial dims must be even.
    Id maxpool2(Id a) {
        const auto& s = val(a).shape;
        require_shape(s.size() == 4 && s[2] % 2 == 0 && s[3] % 2 == 0, "maxpool2: dims must be even");
        const int N = s[0], C = s[1], H = s[2], W = s[3], Ho = H / 2, Wo = W / 2;
        Tensor<T> out({N, C, Ho, Wo});
        auto arg = std::make_shared<std::vector<std::int32_t>>(out.numel());
        const T* av = val(a).ptr();
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * H * W;
                const std::int64_t obase = (static_cast<std::int64_t>(n) * C + c) * Ho * Wo;
                for (int i = 0; i < Ho; ++i)
                    for (int j = 0; j < Wo; ++j) {
                        const std::int64_t p00 = base + (2 * i) * W + 2 * j;
                        std::int64_t best = p00;
                        T bv = av[p00];
                        const std::int64_t cand[3] = {p00 + 1, p00 + W, p00 + W + 1};
                        for (std::int64_t pc : cand)
                            if (av[pc] > bv) {
                                bv = av[pc];
                                best = pc;
                            }
                        out[obase + static_cast<std::int64_t>(i) * Wo + j] = bv;
                        (*arg)[obase + static_cast<std::int64_t>(i) * Wo + j] = static_cast<std::int32_t>(best);
                    }
            }
        return unary(std::move(out), a, [arg](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga[(*arg)[i]] += go[i];
        });
    }

    /// Bilinear 2x upsampling; source coordinate (i+0.5)/2 - 0.5, edge clamped.
    Id upsample2(Id a) {
        const auto& s = val(a).shape;
        require_shape(s.size() == 4, "upsample2: expects NCHW");
        const int N = s[0], C = s[1], H = s[2], W = s[3], Ho = 2 * H, Wo = 2 * W;
        auto make_axis = [](int n_out, int n_in) {
            std::vector<std::int32_t> i0(n_out), i1(n_out);
            std::vector<T> w1(n_out);
            for (int i = 0; i < n_out; ++i) {
                const double src = (i + 0.5) / 2.0 - 0.5;
                const double f = std::floor(src);
                const double lam = src - f;
                int a0 = static_cast<int>(f);
                int a1 = a0 + 1;
                if (a0 < 0) a0 = 0;
                if (a1 > n_in - 1) a1 = n_in - 1;
                if (a0 > n_in - 1) a0 = n_in - 1;
                i0[i] = a0;
                i1[i] = a1;
                w1[i] = static_cast<T>(lam);
            }
            return std::tuple(i0, i1, w1);
        };
        auto [ri0, ri1, rw] = make_axis(Ho, H);
        auto [ci0, ci1, cw] = make_axis(Wo, W);
        Tensor<T> out({N, C, Ho, Wo});
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < Ho; ++i) {
                    const T wr = rw[i];
                    for (int j = 0; j < Wo; ++j) {
                        const T wc = cw[j];
                        const T v00 = val(a).at4(n, c, ri0[i], ci0[j]);
                        const T v01 = val(a).at4(n, c, ri0[i], ci1[j]);
                        const T v10 = val(a).at4(n, c, ri1[i], ci0[j]);
                        const T v11 = val(a).at4(n, c, ri1[i], ci1[j]);
                        out.at4(n, c, i, j) = (T(1) - wr) * ((T(1) - wc) * v00 + wc * v01) +
                                              wr * ((T(1) - wc) * v10 + wc * v11);
                    }
                }
        auto axes = std::make_shared<std::tuple<std::vector<std::int32_t>, std::vector<std::int32_t>, std::vector<T>,
                                                std::vector<std::int32_t>, std::vector<std::int32_t>, std::vector<T>>>(
            ri0, ri1, rw, ci0, ci1, cw);
        return unary(std::move(out), a, [axes, N, C, Ho, Wo](Graph& g, Id self, Id a2) {
            const auto& [ri0, ri1, rw, ci0, ci1, cw] = *axes;
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c)
                    for (int i = 0; i < Ho; ++i) {
                        const T wr = rw[i];
                        for (int j = 0; j < Wo; ++j) {
                            const T wc = cw[j];
                            const T gv = go.at4(n, c, i, j);
                            ga.at4(n, c, ri0[i], ci0[j]) += (T(1) - wr) * (T(1) - wc) * gv;
                            ga.at4(n, c, ri0[i], ci1[j]) += (T(1) - wr) * wc * gv;
                            ga.at4(n, c, ri1[i], ci0[j]) += wr * (T(1) - wc) * gv;
                            ga.at4(n, c, ri1[i], ci1[j]) += wr * wc * gv;
                        }
                    }
        });
    }

    /// (N,C,H,W) -> (N,C) spatial mean.
    Id global_avg_pool(Id a) {
        const auto& s = val(a).shape;
        require_shape(s.size() == 4, "global_avg_pool: expects NCHW");
        const int N = s[0], C = s[1];
        const std::int64_t plane = static_cast<std::int64_t>(s[2]) * s[3];
        const T inv = T(1) / static_cast<T>(plane);
        Tensor<T> out({N, C});
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const T* src = val(a).ptr() + (static_cast<std::int64_t>(n) * C + c) * plane;
                T acc = T(0);
                for (std::int64_t i = 0; i < plane; ++i) acc += src[i];
                out[static_cast<std::int64_t>(n) * C + c] = acc * inv;
            }
        return unary(std::move(out), a, [N, C, plane, inv](Graph& g, Id self, Id a2) {
            const Tensor<T>& go = g.nodes_[self].grad;
            Tensor<T>& ga = g.grad(a2);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    const T gv = go[static_cast<std::int64_t>(n) * C + c] * inv;
                    T* dst = ga.ptr() + (static_cast<std::int64_t>(n) * C + c) * plane;
                    for (std::int64_t i = 0; i < plane; ++i) dst[i] += gv;
                }
        });
    }

    /// Instance normalization: per-sample per-channel spatial standardization
    /// followed by a learned channel affine. x (N,C,H,W), gamma/beta (C).
    Id instance_norm(Id x, Id gamma, Id beta, T eps = T(1e-5)) {
        const auto s = val(x).shape;
        require_shape(s.size() == 4, "instance_norm: expects NCHW");
        const int N = s[0], C = s[1];
        const std::int64_t P = static_cast<std::int64_t>(s[2]) * s[3];
        require_shape(val(gamma).numel() == C && val(beta).numel() == C, "instance_norm: affine shape mismatch");

        Tensor<T> out({N, C, s[2], s[3]});
        auto xhat = std::make_shared<Tensor<T>>(out.shape);
        auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(N) * C);
        {
            const T* xv = val(x).ptr();
            const T* gv = val(gamma).ptr();
            const T* bv = val(beta).ptr();
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * P;
                    T mean = 0;
                    for (std::int64_t i = 0; i < P; ++i) mean += xv[off + i];
                    mean /= static_cast<T>(P);
                    T var = 0;
                    for (std::int64_t i = 0; i < P; ++i) {
                        const T d = xv[off + i] - mean;
                        var += d * d;
                    }
                    var /= static_cast<T>(P);
                    const T r = T(1) / std::sqrt(var + eps);
                    (*inv_std)[static_cast<std::size_t>(n) * C + c] = r;
                    for (std::int64_t i = 0; i < P; ++i) {
                        const T xh = (xv[off + i] - mean) * r;
                        (*xhat)[off + i] = xh;
                        out[off + i] = gv[c] * xh + bv[c];
                    }
                }
        }
        Id id = input(std::move(out),
                      nodes_[x].needs_grad || nodes_[gamma].needs_grad || nodes_[beta].needs_grad);
        if (!nodes_[id].needs_grad) return id;
        nodes_[id].back = [id, x, gamma, beta, N, C, P, xhat, inv_std](Graph& g) {
            const Tensor<T>& go = g.nodes_[id].grad;
            const T* gv = g.nodes_[gamma].val.ptr();
            if (g.nodes_[beta].needs_grad) {
                Tensor<T>& gb = g.grad(beta);
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c) {
                        const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * P;
                        T acc = 0;
                        for (std::int64_t i = 0; i < P; ++i) acc += go[off + i];
                        gb[c] += acc;
                    }
            }
            if (g.nodes_[gamma].needs_grad) {
                Tensor<T>& gg = g.grad(gamma);
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c) {
                        const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * P;
                        T acc = 0;
                        for (std::int64_t i = 0; i < P; ++i) acc += go[off + i] * (*xhat)[off + i];
                        gg[c] += acc;
                    }
            }
            if (g.nodes_[x].needs_grad) {
                Tensor<T>& gx = g.grad(x);
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c) {
                        const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * P;
                        const T r = (*inv_std)[static_cast<std::size_t>(n) * C + c];
                        T sum_h = 0, sum_hx = 0;
                        for (std::int64_t i = 0; i < P; ++i) {
                            const T h = go[off + i] * gv[c];
                            sum_h += h;
                            sum_hx += h * (*xhat)[off + i];
                        }
                        const T mh = sum_h / static_cast<T>(P);
                        const T mhx = sum_hx / static_cast<T>(P);
                        for (std::int64_t i = 0; i < P; ++i) {
                            const T h = go[off + i] * gv[c];
                            gx[off + i] += r * (h - mh - (*xhat)[off + i] * mhx);
                        }
                    }
            }
        };
        return id;
    }

    /// Fully connected: x (N,Cin), w (Cout,Cin), b (Cout) -> (N,Cout).
    Id linear(Id x, Id w, Id b) {
        const auto& sx = val(x).shape;
        const auto& sw = val(w).shape;
        require_shape(sx.size() == 2 && sw.size() == 2 && sx[1] == sw[1] && val(b).numel() == sw[0],
                      "linear: shape mismatch");
        const int N = sx[0], Cin = sx[1], Cout = sw[0];
        Tensor<T> out({N, Cout});
        {
            CMap xm(val(x).ptr(), N, Cin);
            CMap wm(val(w).ptr(), Cout, Cin);
            Map om(out.ptr(), N, Cout);
            om.noalias() = xm * wm.transpose();
            for (int c = 0; c < Cout; ++c) om.col(c).array() += val(b)[c];
        }
        Id id = input(std::move(out), nodes_[x].needs_grad || nodes_[w].needs_grad || nodes_[b].needs_grad);
        if (!nodes_[id].needs_grad) return id;
        nodes_[id].back = [id, x, w, b, N, Cin, Cout](Graph& g) {
            const Tensor<T>& go = g.nodes_[id].grad;
            CMap gom(go.ptr(), N, Cout);
            if (g.nodes_[b].needs_grad) {
                Tensor<T>& gb = g.grad(b);
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < Cout; ++c) gb[c] += go[static_cast<std::int64_t>(n) * Cout + c];
            }
            if (g.nodes_[w].needs_grad) {
                Tensor<T>& gw = g.grad(w);
                Map gwm(gw.ptr(), Cout, Cin);
                CMap xm(g.nodes_[x].val.ptr(), N, Cin);
                gwm.noalias() += gom.transpose() * xm;
            }
            if (g.nodes_[x].needs_grad) {
                Tensor<T>& gx = g.grad(x);
                Map gxm(gx.ptr(), N, Cin);
                CMap wm(g.nodes_[w].val.ptr(), Cout, Cin);
                gxm.noalias() += gom * wm;
            }
        };
        return id;
    }

  private:
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Map = Eigen::Map<Mat>;
    using CMap = Eigen::Map<const Mat>;

    static std::vector<T>& col_buffer(std::size_t n) {
        static thread_local std::vector<T> buf;
        if (buf.size() < n) buf.resize(n);
        return buf;
    }

    static void im2col(const T* src, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo, T* col) {
        const std::int64_t P = static_cast<std::int64_t>(Ho) * Wo;
        for (int c = 0; c < C; ++c)
            for (int ki = 0; ki < k; ++ki)
                for (int kj = 0; kj < k; ++kj) {
                    T* row = col + (static_cast<std::int64_t>((c * k + ki) * k + kj)) * P;
                    const T* plane = src + static_cast<std::int64_t>(c) * H * W;
                    for (int oh = 0; oh < Ho; ++oh) {
                        const int ih = oh * stride - pad + ki;
                        T* dst = row + static_cast<std::int64_t>(oh) * Wo;
                        if (ih < 0 || ih >= H) {
                            std::fill(dst, dst + Wo, T(0));
                            continue;
                        }
                        const T* srow = plane + static_cast<std::int64_t>(ih) * W;
                        if (stride == 1) {
                            // contiguous run with zero fill at the borders
                            int ow = 0;
                            for (; ow < Wo && ow - pad + kj < 0; ++ow) dst[ow] = T(0);
                            int iw = ow - pad + kj;
                            const int run = std::min(Wo - ow, W - iw);
                            if (run > 0) std::memcpy(dst + ow, srow + iw, sizeof(T) * run);
                            for (ow += std::max(run, 0); ow < Wo; ++ow) dst[ow] = T(0);
                        } else {
                            for (int ow = 0; ow < Wo; ++ow) {
                                const int iw = ow * stride - pad + kj;
                                dst[ow] = (iw < 0 || iw >= W) ? T(0) : srow[iw];
                            }
                        }
                    }
                }
    }

    static void col2im_add(const T* col, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo, T* dst) {
        const std::int64_t P = static_cast<std::int64_t>(Ho) * Wo;
        for (int c = 0; c < C; ++c)
            for (int ki = 0; ki < k; ++ki)
                for (int kj = 0; kj < k; ++kj) {
                    const T* row = col + (static_cast<std::int64_t>((c * k + ki) * k + kj)) * P;
                    T* plane = dst + static_cast<std::int64_t>(c) * H * W;
                    for (int oh = 0; oh < Ho; ++oh) {
                        const int ih = oh * stride - pad + ki;
                        if (ih < 0 || ih >= H) continue;
                        T* drow = plane + static_cast<std::int64_t>(ih) * W;
                        const T* srow = row + static_cast<std::int64_t>(oh) * Wo;
                        for (int ow = 0; ow < Wo; ++ow) {
                            const int iw = ow * stride - pad + kj;
                            if (iw >= 0 && iw < W) drow[iw] += srow[ow];
                        }
                    }
                }
    }

    template <typename F>
    Id unary(Tensor<T> out, Id a, F&& back) {
        Id id = input(std::move(out), nodes_[a].needs_grad);
        if (nodes_[id].needs_grad)
            nodes_[id].back = [id, a, back = std::forward<F>(back)](Graph& g) { back(g, id, a); };
        return id;
    }

    template <typename F>
    Id unary_or_binary(Tensor<T> out, Id a, Id b, F&& back) {
        Id id = input(std::move(out), nodes_[a].needs_grad || nodes_[b].needs_grad);
        if (nodes_[id].needs_grad)
            nodes_[id].back = [id, a, b, back = std::forward<F>(back)](Graph& g) { back(g, id, a, b); };
        return id;
    }

    std::deque<Node> nodes_;  // deque: node references stay valid as the tape grows
    std::unordered_map<const void*, std::pair<Id, Id>> param_cache_;  // frozen / live leaf per param
    int pass_ = 0;
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (const auto& v : t.data)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

}  // namespace fcdgan::ag
