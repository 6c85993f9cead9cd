#include "rainlab/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <unordered_map>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "rainlab/error.hpp"

namespace rainlab::ad {

namespace {

thread_local bool g_no_grad = false;
thread_local bool g_single_precision_conv = false;

#if defined(__GLIBC__)
// Activation buffers of a few MB are freed and reallocated every step. Above
// glibc's mmap threshold each one is a fresh mmap/munmap and page-faults on
// first touch, which cost about a quarter of a training step.
const bool g_allocator_tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 32 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
}();
#endif

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

std::shared_ptr<Node> make_leaf(Tensor value, bool requires_grad, const char* op) {
    check_finite(value, op);
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->op = op;
    return n;
}

// Output node; records parents and the backward closure only when some
// parent needs a gradient and recording is enabled.
Var make_result(Tensor value, const char* op, std::vector<std::shared_ptr<Node>> parents,
                std::function<void(Node&)> backward_fn) {
    check_finite(value, op);
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->op = op;
    const bool needs = !g_no_grad && std::any_of(parents.begin(), parents.end(),
                                                 [](const auto& p) { return p->requires_grad; });
    if (needs) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backward = std::move(backward_fn);
    }
    return Var(std::move(n));
}

Tensor& grad_of(Node& n) {
    if (n.grad.shape() != n.value.shape() || n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape(), 0.0);
    return n.grad;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

struct ConvGeometry {
    std::size_t n, c, h, w, o, kh, kw;
    bool batched;
    std::size_t hw() const { return h * w; }
    std::size_t ck() const { return c * kh * kw; }
};

// Zero-padded, channel-major layout: channel c occupies one row of
// `margin + n*block + margin` columns, image n starts at column
// margin + n*block, and each image is stored as (h + 2ph) x (w + 2pw) with
// its pixels in the interior. A kernel tap (ky, kx) then reads every output
// position at one fixed column offset, so the convolution is a sum of
// kh*kw GEMMs over shifted column ranges.
struct PaddedLayout {
    std::size_t ph, pw, hp, wp, block, margin, cols;

    explicit PaddedLayout(const ConvGeometry& g)
        : ph(g.kh / 2), pw(g.kw / 2), hp(g.h + 2 * ph), wp(g.w + 2 * pw), block(hp * wp), margin(ph * wp + pw),
          cols(g.n * block + 2 * margin) {}

    std::size_t pixel(std::size_t n, std::size_t y, std::size_t x) const {
        return margin + n * block + (y + ph) * wp + x + pw;
    }
    long offset(std::size_t ky, std::size_t kx) const {
        return (static_cast<long>(ky) - static_cast<long>(ph)) * static_cast<long>(wp) + static_cast<long>(kx) -
               static_cast<long>(pw);
    }
};

template <typename T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// (N, C, H, W) tensor data -> padded (C, cols) rows.
template <typename T>
MatT<T> to_padded(const double* src, const ConvGeometry& g, const PaddedLayout& p, std::size_t channels) {
    MatT<T> out = MatT<T>::Zero(static_cast<long>(channels), static_cast<long>(p.cols));
    for (std::size_t n = 0; n < g.n; ++n)
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t y = 0; y < g.h; ++y) {
                const double* row = src + ((n * channels + c) * g.h + y) * g.w;
                std::copy(row, row + g.w, out.data() + c * p.cols + p.pixel(n, y, 0));  // converts
            }
    return out;
}

// Weight (O, C, KH, KW) -> one (O, C) matrix per tap.
template <typename T>
std::vector<MatT<T>> split_taps(const double* w, const ConvGeometry& g) {
    std::vector<MatT<T>> taps(g.kh * g.kw, MatT<T>(static_cast<long>(g.o), static_cast<long>(g.c)));
    for (std::size_t o = 0; o < g.o; ++o)
        for (std::size_t c = 0; c < g.c; ++c)
            for (std::size_t t = 0; t < g.kh * g.kw; ++t)
                taps[t](static_cast<long>(o), static_cast<long>(c)) = static_cast<T>(w[(o * g.c + c) * g.kh * g.kw + t]);
    return taps;
}

template <typename T>
Var conv_gemm(const Var& x, const Var& weight, const Var& bias, ConvGeometry g, const char* op) {
    using Mat = MatT<T>;
    const PaddedLayout p(g);
    const long span = static_cast<long>(g.n * p.block), m = static_cast<long>(p.margin);
    Mat xp = to_padded<T>(x.value().data().data(), g, p, g.c);
    const auto taps = split_taps<T>(weight.value().data().data(), g);

    Mat y = Mat::Zero(static_cast<long>(g.o), span);
    for (std::size_t ky = 0; ky < g.kh; ++ky)
        for (std::size_t kx = 0; kx < g.kw; ++kx)
            y.noalias() += taps[ky * g.kw + kx] * xp.middleCols(m + p.offset(ky, kx), span);

    Shape out_shape = x.shape();
    out_shape[g.batched ? 1 : 0] = g.o;
    Tensor out(out_shape);
    const double* b = bias.value().data().data();
    for (std::size_t n = 0; n < g.n; ++n)
        for (std::size_t o = 0; o < g.o; ++o)
            for (std::size_t yy = 0; yy < g.h; ++yy) {
                const T* src = y.data() + o * span + p.pixel(n, yy, 0) - p.margin;
                double* dst = out.data().data() + ((n * g.o + o) * g.h + yy) * g.w;
                for (std::size_t i = 0; i < g.w; ++i) dst[i] = src[i] + b[o];
            }

    auto backward_fn = [g, xp = std::move(xp)](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        Node& bn = *self.parents[2];
        const PaddedLayout p(g);
        const long span = static_cast<long>(g.n * p.block), m = static_cast<long>(p.margin);
        // Output gradient in the padded layout (zero on padding), without margins.
        Mat dy = Mat::Zero(static_cast<long>(g.o), span);
        const double* gout = self.grad.data().data();
        for (std::size_t n = 0; n < g.n; ++n)
            for (std::size_t o = 0; o < g.o; ++o)
                for (std::size_t yy = 0; yy < g.h; ++yy) {
                    const double* src = gout + ((n * g.o + o) * g.h + yy) * g.w;
                    std::copy(src, src + g.w, dy.data() + o * span + p.pixel(n, yy, 0) - p.margin);
                }
        if (bn.requires_grad) {
            Tensor& db = grad_of(bn);
            for (std::size_t o = 0; o < g.o; ++o) db[o] += dy.row(static_cast<long>(o)).template cast<double>().sum();
        }
        if (wn.requires_grad) {
            Tensor& dw = grad_of(wn);
            Mat tap(static_cast<long>(g.o), static_cast<long>(g.c));
            for (std::size_t ky = 0; ky < g.kh; ++ky)
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    tap.noalias() = dy * xp.middleCols(m + p.offset(ky, kx), span).transpose();
                    const std::size_t t = ky * g.kw + kx;
                    for (std::size_t o = 0; o < g.o; ++o)
                        for (std::size_t c = 0; c < g.c; ++c)
                            dw[(o * g.c + c) * g.kh * g.kw + t] += tap(static_cast<long>(o), static_cast<long>(c));
                }
        }
        if (xn.requires_grad) {
            const auto taps = split_taps<T>(wn.value.data().data(), g);
            Mat dxp = Mat::Zero(static_cast<long>(g.c), static_cast<long>(p.cols));
            for (std::size_t ky = 0; ky < g.kh; ++ky)
                for (std::size_t kx = 0; kx < g.kw; ++kx)
                    dxp.middleCols(m + p.offset(ky, kx), span).noalias() += taps[ky * g.kw + kx].transpose() * dy;
            Tensor& dx = grad_of(xn);
            for (std::size_t n = 0; n < g.n; ++n)
                for (std::size_t c = 0; c < g.c; ++c)
                    for (std::size_t yy = 0; yy < g.h; ++yy) {
                        const T* src = dxp.data() + c * p.cols + p.pixel(n, yy, 0);
                        double* dst = dx.data().data() + ((n * g.c + c) * g.h + yy) * g.w;
                        for (std::size_t i = 0; i < g.w; ++i) dst[i] += src[i];
                    }
        }
    };
    return make_result(std::move(out), op, {x.node(), weight.node(), bias.node()}, std::move(backward_fn));
}

Var conv_impl(const Var& x, const Var& weight, const Var& bias, ConvGeometry g, const char* op) {
    if (g.kh % 2 == 0 || g.kw % 2 == 0) throw ShapeError(std::string(op) + ": kernel sides must be odd");
    if (bias.shape() != Shape{g.o}) {
        throw ShapeError(std::string(op) + ": bias shape " + shape_str(bias.shape()) + " does not match " +
                         std::to_string(g.o) + " output channels");
    }
    if (g_single_precision_conv) return conv_gemm<float>(x, weight, bias, g, op);
    return conv_gemm<double>(x, weight, bias, g, op);
}

}  // namespace

Var parameter(Tensor value) { return Var(make_leaf(std::move(value), true, "parameter")); }
Var constant(Tensor value) { return Var(make_leaf(std::move(value), false, "constant")); }

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }

SinglePrecisionConv::SinglePrecisionConv() : previous_(g_single_precision_conv) { g_single_precision_conv = true; }
SinglePrecisionConv::~SinglePrecisionConv() { g_single_precision_conv = previous_; }

Var conv1d(const Var& x, const Var& weight, const Var& bias) {
    const Shape& xs = x.shape();
    const Shape& ws = weight.shape();
    if (ws.size() != 3) throw ShapeError("conv1d: weight must be (out, in, k), got " + shape_str(ws));
    if (xs.size() != 2 && xs.size() != 3) throw ShapeError("conv1d: input must be (N, C, L) or (C, L), got " + shape_str(xs));
    const bool batched = xs.size() == 3;
    ConvGeometry g{batched ? xs[0] : 1, xs[batched ? 1 : 0], 1, xs.back(), ws[0], 1, ws[2], batched};
    if (g.c != ws[1]) {
        throw ShapeError("conv1d: input has " + std::to_string(g.c) + " channels, weight expects " +
                         std::to_string(ws[1]));
    }
    return conv_impl(x, weight, bias, g, "conv1d");
}

Var conv2d(const Var& x, const Var& weight, const Var& bias) {
    const Shape& xs = x.shape();
    const Shape& ws = weight.shape();
    if (ws.size() != 4) throw ShapeError("conv2d: weight must be (out, in, kh, kw), got " + shape_str(ws));
    if (xs.size() != 3 && xs.size() != 4) {
        throw ShapeError("conv2d: input must be (N, C, H, W) or (C, H, W), got " + shape_str(xs));
    }
    const bool batched = xs.size() == 4;
    const std::size_t off = batched ? 1 : 0;
    ConvGeometry g{batched ? xs[0] : 1, xs[off], xs[off + 1], xs[off + 2], ws[0], ws[2], ws[3], batched};
    if (g.c != ws[1]) {
        throw ShapeError("conv2d: input has " + std::to_string(g.c) + " channels, weight expects " +
                         std::to_string(ws[1]));
    }
    return conv_impl(x, weight, bias, g, "conv2d");
}

Var leaky_relu(const Var& x, double slope) {
    Tensor out = x.value();
    for (double& v : out.storage()) v = v >= 0.0 ? v : slope * v;
    return make_result(std::move(out), "leaky_relu", {x.node()}, [slope](Node& self) {
        Node& xn = *self.parents[0];
        Tensor& gx = grad_of(xn);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * (xn.value[i] >= 0.0 ? 1.0 : slope);
    });
}

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
    return make_result(std::move(out), "add", {a.node(), b.node()}, [](Node& self) {
        for (auto& p : self.parents) {
            if (!p->requires_grad) continue;
            Tensor& g = grad_of(*p);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Var scale(const Var& x, double factor) {
    Tensor out = x.value();
    for (double& v : out.storage()) v *= factor;
    return make_result(std::move(out), "scale", {x.node()}, [factor](Node& self) {
        Tensor& g = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
    });
}

Var sum(const Var& x) {
    double s = 0.0;
    for (double v : x.value().data()) s += v;
    return make_result(Tensor::scalar(s), "sum", {x.node()}, [](Node& self) {
        Tensor& g = grad_of(*self.parents[0]);
        const double up = self.grad[0];
        for (double& v : g.storage()) v += up;
    });
}

Var l1_loss(const Var& pred, const Var& target) {
    require_same_shape(pred, target, "l1_loss");
    const std::size_t n = pred.value().size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(pred.value()[i] - target.value()[i]);
    return make_result(Tensor::scalar(n ? s / static_cast<double>(n) : 0.0), "l1_loss", {pred.node(), target.node()},
                       [n](Node& self) {
                           Node& p = *self.parents[0];
                           Node& t = *self.parents[1];
                           const double up = self.grad[0] / static_cast<double>(n);
                           for (std::size_t i = 0; i < n; ++i) {
                               const double d = p.value[i] - t.value[i];
                               const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                               if (p.requires_grad) grad_of(p)[i] += up * sgn;
                               if (t.requires_grad) grad_of(t)[i] -= up * sgn;
                           }
                       });
}

Var mse_loss(const Var& pred, const Var& target) {
    require_same_shape(pred, target, "mse_loss");
    const std::size_t n = pred.value().size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pred.value()[i] - target.value()[i];
        s += d * d;
    }
    return make_result(Tensor::scalar(n ? s / static_cast<double>(n) : 0.0), "mse_loss", {pred.node(), target.node()},
                       [n](Node& self) {
                           Node& p = *self.parents[0];
                           Node& t = *self.parents[1];
                           const double up = 2.0 * self.grad[0] / static_cast<double>(n);
                           for (std::size_t i = 0; i < n; ++i) {
                               const double d = p.value[i] - t.value[i];
                               if (p.requires_grad) grad_of(p)[i] += up * d;
                               if (t.requires_grad) grad_of(t)[i] -= up * d;
                           }
                       });
}

void backward(const Var& loss) {
    if (!loss) throw Error("backward: null loss");
    if (loss.value().size() != 1) throw ShapeError("backward: loss must be a scalar, got " + shape_str(loss.shape()));
    if (!loss.requires_grad()) return;

    // Iterative DFS post-order over nodes that need gradients.
    enum class Mark : unsigned char { active, done };
    std::unordered_map<Node*, Mark> marks;
    std::vector<Node*> order;
    std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
    marks[loss.node().get()] = Mark::active;
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (!p->requires_grad) continue;
            auto it = marks.find(p);
            if (it == marks.end()) {
                marks[p] = Mark::active;
                stack.emplace_back(p, 0);
            } else if (it->second == Mark::active) {
                throw Error("backward: cycle in computation graph");
            }
        } else {
            marks[node] = Mark::done;
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior gradients start from zero on every call; leaves accumulate.
    for (Node* n : order) {
        if (n->backward) n->grad = Tensor(n->value.shape(), 0.0);
    }
    grad_of(*loss.node())[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (!n->backward) continue;
        n->backward(*n);
        for (auto& p : n->parents) {
            if (p->requires_grad) check_finite(p->grad, "gradient");
        }
        n->grad = Tensor();  // interior gradient no longer needed
    }
}

}  // namespace rainlab::ad
