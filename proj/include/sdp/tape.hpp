#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "sdp/tensor.hpp"

namespace sdp {

// Define-by-run reverse-mode autodiff over Tensor<T>. Nodes are appended in
// execution order, so reverse iteration is already a topological order of the
// backward pass. All forward passes are deterministic functions of their
// inputs; no op reorders floating-point accumulation.
template <typename T>
class Tape {
  public:
    using Ref = int;
    static constexpr Ref none = -1;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Ref leaf(Tensor<T> value, bool needs_grad = false) {
        return push(std::move(value), needs_grad, nullptr);
    }

    const Tensor<T>& val(Ref r) const { return nodes_[static_cast<size_t>(r)].value; }
    bool needs_grad(Ref r) const { return nodes_[static_cast<size_t>(r)].needs_grad; }

    // valid after backward() for nodes with needs_grad
    const Tensor<T>& grad(Ref r) const {
        const Node& n = nodes_[static_cast<size_t>(r)];
        if (!n.needs_grad) throw ConfigError("node does not track gradients");
        return n.grad;
    }

    size_t size() const { return nodes_.size(); }

    // ---- primitives ------------------------------------------------------

    // out = wa * a + wb * b, elementwise on identical shapes
    Ref weighted_sum(Ref a, Ref b, T wa = T(1), T wb = T(1)) {
        const Tensor<T>& ta = val(a);
        const Tensor<T>& tb = val(b);
        if (!same_shape(ta, tb)) throw ShapeError("weighted_sum: shape mismatch");
        Tensor<T> out(ta.shape);
        for (int64_t i = 0; i < out.size(); ++i) out[i] = wa * ta[i] + wb * tb[i];
        return push(std::move(out), needs_grad(a) || needs_grad(b),
                    [a, b, wa, wb](Tape& t, Ref self) {
                        const Tensor<T>& g = t.node(self).grad;
                        if (t.needs_grad(a)) {
                            Tensor<T>& ga = t.ensure_grad(a);
                            for (int64_t i = 0; i < g.size(); ++i) ga[i] += wa * g[i];
                        }
                        if (t.needs_grad(b)) {
                            Tensor<T>& gb = t.ensure_grad(b);
                            for (int64_t i = 0; i < g.size(); ++i) gb[i] += wb * g[i];
                        }
                    });
    }

    Ref add(Ref a, Ref b) { return weighted_sum(a, b, T(1), T(1)); }

    Ref scale(Ref a, T k) {
        const Tensor<T>& ta = val(a);
        Tensor<T> out(ta.shape);
        for (int64_t i = 0; i < out.size(); ++i) out[i] = k * ta[i];
        return push(std::move(out), needs_grad(a), [a, k](Tape& t, Ref self) {
            const Tensor<T>& g = t.node(self).grad;
            if (!t.needs_grad(a)) return;
            Tensor<T>& ga = t.ensure_grad(a);
            for (int64_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
        });
    }

    Ref relu(Ref a) {
        const Tensor<T>& ta = val(a);
        Tensor<T> out(ta.shape);
        for (int64_t i = 0; i < out.size(); ++i) out[i] = ta[i] > T(0) ? ta[i] : T(0);
        return push(std::move(out), needs_grad(a), [a](Tape& t, Ref self) {
            if (!t.needs_grad(a)) return;
            const Tensor<T>& g = t.node(self).grad;
            const Tensor<T>& x = t.val(a);
            Tensor<T>& ga = t.ensure_grad(a);
            for (int64_t i = 0; i < g.size(); ++i)
                if (x[i] > T(0)) ga[i] += g[i];
        });
    }

    // x {in}, w {out, in}, b {out} or none -> {out}
    Ref linear(Ref x, Ref w, Ref b = none) {
        const Tensor<T>& tx = val(x);
        const Tensor<T>& tw = val(w);
        if (tx.shape.size() != 1 || tw.shape.size() != 2 || tw.dim(1) != tx.dim(0))
            throw ShapeError("linear: shape mismatch");
        const int out_n = tw.dim(0), in_n = tw.dim(1);
        if (b != none && (val(b).shape.size() != 1 || val(b).dim(0) != out_n))
            throw ShapeError("linear: bias shape mismatch");
        Tensor<T> out(Shape{out_n});
        for (int o = 0; o < out_n; ++o) {
            T acc = b != none ? val(b)[o] : T(0);
            const T* wrow = tw.data.data() + static_cast<size_t>(o) * in_n;
            for (int i = 0; i < in_n; ++i) acc += wrow[i] * tx[i];
            out[o] = acc;
        }
        const bool ng = needs_grad(x) || needs_grad(w) || (b != none && needs_grad(b));
        return push(std::move(out), ng, [x, w, b, out_n, in_n](Tape& t, Ref self) {
            const Tensor<T>& g = t.node(self).grad;
            const Tensor<T>& tx = t.val(x);
            const Tensor<T>& tw = t.val(w);
            if (t.needs_grad(w)) {
                Tensor<T>& gw = t.ensure_grad(w);
                for (int o = 0; o < out_n; ++o) {
                    T* grow = gw.data.data() + static_cast<size_t>(o) * in_n;
                    const T go = g[o];
                    for (int i = 0; i < in_n; ++i) grow[i] += go * tx[i];
                }
            }
            if (t.needs_grad(x)) {
                Tensor<T>& gx = t.ensure_grad(x);
                for (int o = 0; o < out_n; ++o) {
                    const T* wrow = tw.data.data() + static_cast<size_t>(o) * in_n;
                    const T go = g[o];
                    for (int i = 0; i < in_n; ++i) gx[i] += go * wrow[i];
                }
            }
            if (b != none && t.needs_grad(b)) {
                Tensor<T>& gb = t.ensure_grad(b);
                for (int o = 0; o < out_n; ++o) gb[o] += g[o];
            }
        });
    }

    // x {Cin, H, W}, w {Cout, Cin, k, k}, b {Cout} or none; cross-correlation
    // with H' = (H + 2*pad - k) / stride + 1
    Ref conv2d(Ref x, Ref w, Ref b, int stride, int pad) {
        const Tensor<T>& tx = val(x);
        const Tensor<T>& tw = val(w);
        if (tx.shape.size() != 3 || tw.shape.size() != 4)
            throw ShapeError("conv2d: expects CHW input and OIkk weights");
        if (tw.dim(1) != tx.dim(0)) throw ShapeError("conv2d: channel mismatch");
        if (tw.dim(2) != tw.dim(3)) throw ShapeError("conv2d: kernel must be square");
        if (stride < 1 || pad < 0) throw ConfigError("conv2d: bad stride/pad");
        const int cin = tx.dim(0), h = tx.dim(1), wd = tx.dim(2);
        const int cout = tw.dim(0), k = tw.dim(2);
        if (h + 2 * pad < k || wd + 2 * pad < k)
            throw ShapeError("conv2d: kernel larger than padded input");
        const int oh = (h + 2 * pad - k) / stride + 1;
        const int ow = (wd + 2 * pad - k) / stride + 1;
        if (b != none && (val(b).shape.size() != 1 || val(b).dim(0) != cout))
            throw ShapeError("conv2d: bias shape mismatch");

        Tensor<T> out(Shape{cout, oh, ow});
        conv_forward(tx, tw, b == none ? nullptr : &val(b), out, stride, pad);

        const bool ng = needs_grad(x) || needs_grad(w) || (b != none && needs_grad(b));
        return push(std::move(out), ng, [x, w, b, stride, pad](Tape& t, Ref self) {
            const Tensor<T>& g = t.node(self).grad;
            const Tensor<T>& tx = t.val(x);
            const Tensor<T>& tw = t.val(w);
            Tensor<T>* gx = t.needs_grad(x) ? &t.ensure_grad(x) : nullptr;
            Tensor<T>* gw = t.needs_grad(w) ? &t.ensure_grad(w) : nullptr;
            Tensor<T>* gb = (b != none && t.needs_grad(b)) ? &t.ensure_grad(b) : nullptr;
            conv_backward(tx, tw, g, gx, gw, gb, stride, pad);
        });
    }

    // 2x2 mean pooling, stride 2; spatial dims must be even
    Ref avg_pool2(Ref x) {
        const Tensor<T>& tx = val(x);
        if (tx.shape.size() != 3) throw ShapeError("avg_pool2: expects CHW input");
        const int c = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
        if (h % 2 != 0 || w % 2 != 0) throw ShapeError("avg_pool2: dims must be even");
        const int oh = h / 2, ow = w / 2;
        Tensor<T> out(Shape{c, oh, ow});
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < oh; ++y)
                for (int xq = 0; xq < ow; ++xq) {
                    const T s = tx.at3(ci, 2 * y, 2 * xq) + tx.at3(ci, 2 * y, 2 * xq + 1) +
                                tx.at3(ci, 2 * y + 1, 2 * xq) + tx.at3(ci, 2 * y + 1, 2 * xq + 1);
                    out.at3(ci, y, xq) = s * T(0.25);
                }
        return push(std::move(out), needs_grad(x), [x, c, oh, ow](Tape& t, Ref self) {
            if (!t.needs_grad(x)) return;
            const Tensor<T>& g = t.node(self).grad;
            Tensor<T>& gx = t.ensure_grad(x);
            for (int ci = 0; ci < c; ++ci)
                for (int y = 0; y < oh; ++y)
                    for (int xq = 0; xq < ow; ++xq) {
                        const T q = g.at3(ci, y, xq) * T(0.25);
                        gx.at3(ci, 2 * y, 2 * xq) += q;
                        gx.at3(ci, 2 * y, 2 * xq + 1) += q;
                        gx.at3(ci, 2 * y + 1, 2 * xq) += q;
                        gx.at3(ci, 2 * y + 1, 2 * xq + 1) += q;
                    }
        });
    }

    // {C, H, W} -> {C} per-channel mean
    Ref global_avg_pool(Ref x) {
        const Tensor<T>& tx = val(x);
        if (tx.shape.size() != 3) throw ShapeError("global_avg_pool: expects CHW input");
        const int c = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
        const T inv = T(1) / static_cast<T>(h * w);
        Tensor<T> out(Shape{c});
        for (int ci = 0; ci < c; ++ci) {
            const T* p = tx.data.data() + static_cast<size_t>(ci) * h * w;
            T acc = T(0);
            for (int i = 0; i < h * w; ++i) acc += p[i];
            out[ci] = acc * inv;
        }
        return push(std::move(out), needs_grad(x), [x, c, h, w, inv](Tape& t, Ref self) {
            if (!t.needs_grad(x)) return;
            const Tensor<T>& g = t.node(self).grad;
            Tensor<T>& gx = t.ensure_grad(x);
            for (int ci = 0; ci < c; ++ci) {
                const T gi = g[ci] * inv;
                T* p = gx.data.data() + static_cast<size_t>(ci) * h * w;
                for (int i = 0; i < h * w; ++i) p[i] += gi;
            }
        });
    }

    // 1D concatenation
    Ref concat(const std::vector<Ref>& parts) {
        int64_t total = 0;
        bool ng = false;
        for (Ref r : parts) {
            if (val(r).shape.size() != 1) throw ShapeError("concat: expects 1D parts");
            total += val(r).size();
            ng = ng || needs_grad(r);
        }
        Tensor<T> out(Shape{static_cast<int>(total)});
        int64_t off = 0;
        for (Ref r : parts) {
            const Tensor<T>& tp = val(r);
            std::copy(tp.data.begin(), tp.data.end(), out.data.begin() + off);
            off += tp.size();
        }
        return push(std::move(out), ng, [parts](Tape& t, Ref self) {
            const Tensor<T>& g = t.node(self).grad;
            int64_t off = 0;
            for (Ref r : parts) {
                const int64_t n = t.val(r).size();
                if (t.needs_grad(r)) {
                    Tensor<T>& gr = t.ensure_grad(r);
                    for (int64_t i = 0; i < n; ++i) gr[i] += g[off + i];
                }
                off += n;
            }
        });
    }

    // Feature modulation: out = f + delta where
    //   delta = s[c] * f + b[c]   (use_mul && use_add)
    //   delta = s[c] * f          (use_mul)
    //   delta = b[c]              (use_add)
    // The delta is computed with the same operation order in every mode, so
    // the residuals of the three modes compose exactly.
    Ref channel_affine(Ref f, Ref s, Ref b, bool use_mul, bool use_add) {
        const Tensor<T>& tf = val(f);
        if (tf.shape.size() != 3) throw ShapeError("channel_affine: expects CHW input");
        const int c = tf.dim(0), h = tf.dim(1), w = tf.dim(2);
        if (use_mul && (val(s).shape.size() != 1 || val(s).dim(0) != c))
            throw ShapeError("channel_affine: scale length mismatch");
        if (use_add && (val(b).shape.size() != 1 || val(b).dim(0) != c))
            throw ShapeError("channel_affine: shift length mismatch");
        Tensor<T> out(tf.shape);
        const int64_t plane = int64_t(h) * w;
        for (int ci = 0; ci < c; ++ci) {
            const T* src = tf.data.data() + ci * plane;
            T* dst = out.data.data() + ci * plane;
            const T sv = use_mul ? val(s)[ci] : T(0);
            const T bv = use_add ? val(b)[ci] : T(0);
            for (int64_t i = 0; i < plane; ++i) {
                T delta = use_mul ? sv * src[i] : T(0);
                if (use_add) delta = delta + bv;
                dst[i] = src[i] + delta;
            }
        }
        const bool ng = needs_grad(f) || (use_mul && needs_grad(s)) || (use_add && needs_grad(b));
        return push(std::move(out), ng, [f, s, b, use_mul, use_add, c, plane](Tape& t, Ref self) {
            const Tensor<T>& g = t.node(self).grad;
            const Tensor<T>& tf = t.val(f);
            if (t.needs_grad(f)) {
                Tensor<T>& gf = t.ensure_grad(f);
                for (int ci = 0; ci < c; ++ci) {
                    const T sv = use_mul ? t.val(s)[ci] : T(0);
                    const T* gp = g.data.data() + ci * plane;
                    T* gfp = gf.data.data() + ci * plane;
                    for (int64_t i = 0; i < plane; ++i)
                        gfp[i] += use_mul ? gp[i] * (T(1) + sv) : gp[i];
                }
            }
            if (use_mul && t.needs_grad(s)) {
                Tensor<T>& gs = t.ensure_grad(s);
                for (int ci = 0; ci < c; ++ci) {
                    const T* gp = g.data.data() + ci * plane;
                    const T* fp = tf.data.data() + ci * plane;
                    T acc = T(0);
                    for (int64_t i = 0; i < plane; ++i) acc += gp[i] * fp[i];
                    gs[ci] += acc;
                }
            }
            if (use_add && t.needs_grad(b)) {
                Tensor<T>& gb = t.ensure_grad(b);
                for (int ci = 0; ci < c; ++ci) {
                    const T* gp = g.data.data() + ci * plane;
                    T acc = T(0);
                    for (int64_t i = 0; i < plane; ++i) acc += gp[i];
                    gb[ci] += acc;
                }
            }
        });
    }

    // mean squared error -> scalar {1}
    Ref mse(Ref a, Ref b) {
        const Tensor<T>& ta = val(a);
        const Tensor<T>& tb = val(b);
        if (!same_shape(ta, tb)) throw ShapeError("mse: shape mismatch");
        const int64_t n = ta.size();
        T acc = T(0);
        for (int64_t i = 0; i < n; ++i) {
            const T d = ta[i] - tb[i];
            acc += d * d;
        }
        Tensor<T> out(Shape{1});
        out[0] = acc / static_cast<T>(n);
        return push(std::move(out), needs_grad(a) || needs_grad(b), [a, b, n](Tape& t, Ref self) {
            const T g = t.node(self).grad[0];
            const Tensor<T>& ta = t.val(a);
            const Tensor<T>& tb = t.val(b);
            const T k = T(2) * g / static_cast<T>(n);
            if (t.needs_grad(a)) {
                Tensor<T>& ga = t.ensure_grad(a);
                for (int64_t i = 0; i < n; ++i) ga[i] += k * (ta[i] - tb[i]);
            }
            if (t.needs_grad(b)) {
                Tensor<T>& gb = t.ensure_grad(b);
                for (int64_t i = 0; i < n; ++i) gb[i] -= k * (ta[i] - tb[i]);
            }
        });
    }

    // inner product -> scalar {1}; used to scalarize vector outputs in checks
    Ref dot(Ref a, Ref b) {
        const Tensor<T>& ta = val(a);
        const Tensor<T>& tb = val(b);
        if (!same_shape(ta, tb)) throw ShapeError("dot: shape mismatch");
        T acc = T(0);
        for (int64_t i = 0; i < ta.size(); ++i) acc += ta[i] * tb[i];
        Tensor<T> out(Shape{1});
        out[0] = acc;
        return push(std::move(out), needs_grad(a) || needs_grad(b), [a, b](Tape& t, Ref self) {
            const T g = t.node(self).grad[0];
            const Tensor<T>& ta = t.val(a);
            const Tensor<T>& tb = t.val(b);
            if (t.needs_grad(a)) {
                Tensor<T>& ga = t.ensure_grad(a);
                for (int64_t i = 0; i < ta.size(); ++i) ga[i] += g * tb[i];
            }
            if (t.needs_grad(b)) {
                Tensor<T>& gb = t.ensure_grad(b);
                for (int64_t i = 0; i < tb.size(); ++i) gb[i] += g * ta[i];
            }
        });
    }

    // ---- backward --------------------------------------------------------

    void backward(Ref root) {
        Node& r = nodes_[static_cast<size_t>(root)];
        if (r.value.size() != 1) throw ShapeError("backward: root must be scalar");
        if (!r.needs_grad) throw ConfigError("backward: root does not depend on any parameter");
        for (auto& n : nodes_) {
            if (n.grad.size() != 0) n.grad.fill(T(0));
        }
        ensure_grad(root)[0] = T(1);
        for (Ref i = root; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.back && n.needs_grad && n.grad.size() != 0) n.back(*this, i);
        }
    }

  private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        bool needs_grad = false;
        std::function<void(Tape&, Ref)> back;
    };

    std::vector<Node> nodes_;

    Node& node(Ref r) { return nodes_[static_cast<size_t>(r)]; }

    Tensor<T>& ensure_grad(Ref r) {
        Node& n = nodes_[static_cast<size_t>(r)];
        if (n.grad.size() == 0) n.grad = Tensor<T>(n.value.shape);
        return n.grad;
    }

    Ref push(Tensor<T> value, bool needs_grad, std::function<void(Tape&, Ref)> back) {
        nodes_.push_back(Node{std::move(value), Tensor<T>(), needs_grad, std::move(back)});
        return static_cast<Ref>(nodes_.size() - 1);
    }

    static void conv_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b,
                             Tensor<T>& out, int stride, int pad) {
        const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
        const int cout = w.dim(0), k = w.dim(2);
        const int oh = out.dim(1), ow = out.dim(2);
        for (int co = 0; co < cout; ++co) {
            T* op = out.data.data() + static_cast<size_t>(co) * oh * ow;
            const T bias = b ? (*b)[co] : T(0);
            for (int i = 0; i < oh * ow; ++i) op[i] = bias;
            for (int ci = 0; ci < cin; ++ci) {
                const T* xp = x.data.data() + static_cast<size_t>(ci) * h * wd;
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const T wv = w.data[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx];
                        if (wv == T(0)) continue;
                        int oy_lo, oy_hi, ox_lo, ox_hi;
                        range(ky, pad, stride, h, oh, oy_lo, oy_hi);
                        range(kx, pad, stride, wd, ow, ox_lo, ox_hi);
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            const int iy = oy * stride + ky - pad;
                            const T* xrow = xp + static_cast<size_t>(iy) * wd;
                            T* orow = op + static_cast<size_t>(oy) * ow;
                            for (int ox = ox_lo; ox < ox_hi; ++ox)
                                orow[ox] += wv * xrow[ox * stride + kx - pad];
                        }
                    }
                }
            }
        }
    }

    static void conv_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& g,
                              Tensor<T>* gx, Tensor<T>* gw, Tensor<T>* gb, int stride, int pad) {
        const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
        const int cout = w.dim(0), k = w.dim(2);
        const int oh = g.dim(1), ow = g.dim(2);
        if (gb) {
            for (int co = 0; co < cout; ++co) {
                const T* gp = g.data.data() + static_cast<size_t>(co) * oh * ow;
                T acc = T(0);
                for (int i = 0; i < oh * ow; ++i) acc += gp[i];
                (*gb)[co] += acc;
            }
        }
        if (!gx && !gw) return;
        for (int co = 0; co < cout; ++co) {
            const T* gp = g.data.data() + static_cast<size_t>(co) * oh * ow;
            for (int ci = 0; ci < cin; ++ci) {
                const T* xp = x.data.data() + static_cast<size_t>(ci) * h * wd;
                T* gxp = gx ? gx->data.data() + static_cast<size_t>(ci) * h * wd : nullptr;
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const size_t widx = ((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx;
                        const T wv = w.data[widx];
                        T wacc = T(0);
                        int oy_lo, oy_hi, ox_lo, ox_hi;
                        range(ky, pad, stride, h, oh, oy_lo, oy_hi);
                        range(kx, pad, stride, wd, ow, ox_lo, ox_hi);
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            const int iy = oy * stride + ky - pad;
                            const T* xrow = xp + static_cast<size_t>(iy) * wd;
                            T* gxrow = gxp ? gxp + static_cast<size_t>(iy) * wd : nullptr;
                            const T* grow = gp + static_cast<size_t>(oy) * ow;
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                const int ix = ox * stride + kx - pad;
                                const T gv = grow[ox];
                                if (gw) wacc += gv * xrow[ix];
                                if (gxrow) gxrow[ix] += wv * gv;
                            }
                        }
                        if (gw) gw->data[widx] += wacc;
                    }
                }
            }
        }
    }

    // valid output range so that 0 <= o*stride + kk - pad < limit
    static void range(int kk, int pad, int stride, int in_limit, int out_limit, int& lo, int& hi) {
        int lo_i = pad - kk;
        lo = lo_i <= 0 ? 0 : (lo_i + stride - 1) / stride;
        int hi_i = in_limit - 1 + pad - kk;
        hi = hi_i < 0 ? 0 : std::min(out_limit, hi_i / stride + 1);
        if (lo > hi) lo = hi;
    }
};

// out = x + conv2(relu(conv1(x))), 3x3 kernels, padding 1
template <typename T>
typename Tape<T>::Ref resblock(Tape<T>& t, typename Tape<T>::Ref x, typename Tape<T>::Ref w1,
                               typename Tape<T>::Ref b1, typename Tape<T>::Ref w2,
                               typename Tape<T>::Ref b2) {
    auto c1 = t.conv2d(x, w1, b1, 1, 1);
    auto a = t.relu(c1);
    auto c2 = t.conv2d(a, w2, b2, 1, 1);
    return t.add(x, c2);
}

} // namespace sdp
