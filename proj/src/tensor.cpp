// Copyright 2026 The hintaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hintaug/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hintaug/error.hpp"

namespace hintaug {

using detail::TensorNode;

std::string shape_to_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "x" : "") << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape)
{
    std::size_t n = 1;
    for (std::size_t d : shape) {
        n *= d;
    }
    return n;
}

bool all_finite(std::span<const double> values)
{
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void check_shape(const Shape& shape)
{
    if (shape.empty()) {
        throw DimensionError("tensor shape must have at least one dimension");
    }
    for (std::size_t d : shape) {
        if (d == 0) {
            throw DimensionError("tensor dimension of size 0 in " + shape_to_string(shape));
        }
    }
}

void require_rank2(const Tensor& x, const char* op)
{
    if (x.rank() != 2) {
        throw DimensionError(std::string(op) + " expects a 2-D tensor, got " + shape_to_string(x.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs "
                             + shape_to_string(b.shape()));
    }
}

// Accumulates g into node's gradient when the node participates.
TensorNode* grad_target(const std::shared_ptr<TensorNode>& n)
{
    return n->requires_grad ? n.get() : nullptr;
}

} // namespace

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor(Shape shape, double fill) : node_(std::make_shared<TensorNode>())
{
    check_shape(shape);
    node_->data.assign(shape_numel(shape), fill);
    node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : node_(std::make_shared<TensorNode>())
{
    check_shape(shape);
    if (shape_numel(shape) != data.size()) {
        throw DimensionError("shape " + shape_to_string(shape) + " does not match " + std::to_string(data.size())
                             + " values");
    }
    node_->shape = std::move(shape);
    node_->data = std::move(data);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::vector(std::initializer_list<double> values) { return vector(std::vector<double>(values)); }

Tensor Tensor::vector(std::vector<double> values)
{
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values)
{
    return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::identity(std::size_t n)
{
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        t.node_->data[i * n + i] = 1.0;
    }
    return t;
}

double Tensor::at(std::size_t row, std::size_t col) const
{
    if (rank() != 2 || row >= dim(0) || col >= dim(1)) {
        throw IndexError("index (" + std::to_string(row) + "," + std::to_string(col) + ") outside "
                         + shape_to_string(shape()));
    }
    return node_->data[row * dim(1) + col];
}

double Tensor::item() const
{
    if (numel() != 1) {
        throw ContractError("item() on tensor of shape " + shape_to_string(shape()));
    }
    return node_->data[0];
}

Tensor& Tensor::set_requires_grad(bool on)
{
    if (!node_->is_leaf) {
        throw ContractError("requires_grad can only be set on leaf tensors");
    }
    node_->requires_grad = on;
    if (!on) {
        node_->grad.clear();
    }
    return *this;
}

void Tensor::zero_grad()
{
    if (node_) {
        std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }
}

Tensor Tensor::clone() const { return Tensor(node_->shape, node_->data); }

Tensor Tensor::reshape(Shape shape) const { return Tensor(std::move(shape), node_->data); }

// ---- Tape ------------------------------------------------------------------

bool Tape::tracks(std::initializer_list<const Tensor*> inputs)
{
    return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

void Tape::record(Tensor& out, BackwardFn fn)
{
    TensorNode* n = out.node();
    n->requires_grad = true;
    n->is_leaf = false;
    entries_.push_back({out.node_ptr(), std::move(fn)});
}

void backward(const Tensor& loss, Tape& tape)
{
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward() needs a scalar loss, got "
                            + (loss.defined() ? shape_to_string(loss.shape()) : std::string("undefined")));
    }
    if (!loss.requires_grad()) {
        return;
    }
    for (auto& e : tape.entries_) {
        e.out->grad.clear();
    }
    loss.node()->ensure_grad()[0] += 1.0;
    for (auto it = tape.entries_.rbegin(); it != tape.entries_.rend(); ++it) {
        if (!it->out->grad.empty()) {
            it->fn(*it->out);
        }
    }
}

// ---- elementwise -----------------------------------------------------------

Tensor add(Tape& tape, const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] + b[i];
    }
    Tensor r(a.shape(), std::move(out));
    if (tape.active() && Tape::tracks({&a, &b})) {
        tape.record(r, [an = a.node_ptr(), bn = b.node_ptr()](TensorNode& o) {
            for (TensorNode* t : {grad_target(an), grad_target(bn)}) {
                if (t) {
                    auto& g = t->ensure_grad();
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        g[i] += o.grad[i];
                    }
                }
            }
        });
    }
    return r;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    Tensor r(a.shape(), std::move(out));
    if (tape.active() && Tape::tracks({&a, &b})) {
        tape.record(r, [an = a.node_ptr(), bn = b.node_ptr()](TensorNode& o) {
            if (TensorNode* t = grad_target(an)) {
                auto& g = t->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += o.grad[i];
                }
            }
            if (TensorNode* t = grad_target(bn)) {
                auto& g = t->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] -= o.grad[i];
                }
            }
        });
    }
    return r;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] * b[i];
    }
    Tensor r(a.shape(), std::move(out));
    if (tape.active() && Tape::tracks({&a, &b})) {
        tape.record(r, [an = a.node_ptr(), bn = b.node_ptr()](TensorNode& o) {
            if (TensorNode* t = grad_target(an)) {
                auto& g = t->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += o.grad[i] * bn->data[i];
                }
            }
            if (TensorNode* t = grad_target(bn)) {
                auto& g = t->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += o.grad[i] * an->data[i];
                }
            }
        });
    }
    return r;
}

Tensor scale(Tape& tape, const Tensor& x, double factor)
{
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[i] * factor;
    }
    Tensor r(x.shape(), std::move(out));
    if (tape.active() && Tape::tracks({&x})) {
        tape.record(r, [xn = x.node_ptr(), factor](TensorNode& o) {
            auto& g = xn->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += o.grad[i] * factor;
            }
        });
    }
    return r;
}

Tensor add_row(Tape& tape, const Tensor& x, const Tensor& bias)
{
    require_rank2(x, "add_row");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (bias.numel() != cols) {
        throw DimensionError("add_row: bias " + shape_to_string(bias.shape()) + " vs rows of "
                             + shape_to_string(x.shape()));
    }
    std::vector<double> out(x.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] = x[r * cols + c] + bias[c];
        }
    }
    Tensor res(x.shape(), std::move(out));
    if (tape.active() && Tape::tracks({&x, &bias})) {
        tape.record(res, [xn = x.node_ptr(), bn = bias.node_ptr(), rows, cols](TensorNode& o) {
            if (TensorNode* t = grad_target(xn)) {
                auto& g = t->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += o.grad[i];
                }
            }
            if (TensorNode* t = grad_target(bn)) {
                auto& g = t->ensure_grad();
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                        g[c] += o.grad[r * cols + c];
                    }
                }
            }
        });
    }
    return res;
}

// ---- linear algebra --------------------------------------------------------

namespace {

// c[m×n] += a[m×k] · b[k×n]
void gemm_nn(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m,
             std::size_t k, std::size_t n)
{
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) {
                continue;
            }
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

// c[m×k] += a[m×n] · b[k×n]^T
void gemm_nt(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m,
             std::size_t n, std::size_t k)
{
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                s += arow[j] * brow[j];
            }
            crow[p] += s;
        }
    }
}

// c[k×n] += a[m×k]^T · b[m×n]
void gemm_tn(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m,
             std::size_t k, std::size_t n)
{
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) {
                continue;
            }
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

} // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b)
{
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: cannot multiply " + shape_to_string(a.shape()) + " by "
                             + shape_to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor r({m, n});
    gemm_nn(a.data().data(), b.data().data(), r.mutable_data().data(), m, k, n);
    if (tape.active() && Tape::tracks({&a, &b})) {
        tape.record(r, [an = a.node_ptr(), bn = b.node_ptr(), m, k, n](TensorNode& o) {
            if (TensorNode* t = grad_target(an)) {
                gemm_nt(o.grad.data(), bn->data.data(), t->ensure_grad().data(), m, n, k);
            }
            if (TensorNode* t = grad_target(bn)) {
                gemm_tn(an->data.data(), o.grad.data(), t->ensure_grad().data(), m, k, n);
            }
        });
    }
    return r;
}

Tensor transpose(Tape& tape, const Tensor& x)
{
    require_rank2(x, "transpose");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    std::vector<double> out(x.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out[c * rows + r] = x[r * cols + c];
        }
    }
    Tensor res({cols, rows}, std::move(out));
    if (tape.active() && Tape::tracks({&x})) {
        tape.record(res, [xn = x.node_ptr(), rows, cols](TensorNode& o) {
            auto& g = xn->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    g[r * cols + c] += o.grad[c * rows + r];
                }
            }
        });
    }
    return res;
}

// ---- nonlinearities --------------------------------------------------------

Tensor softmax(Tape& tape, const Tensor& x, std::size_t axis)
{
    if (axis >= x.rank()) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for "
                             + shape_to_string(x.shape()));
    }
    if (!all_finite(x.data())) {
        throw NumericError("softmax: non-finite input");
    }
    const Shape& s = x.shape();
    const std::size_t n = s[axis];
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) {
        outer *= s[i];
    }
    for (std::size_t i = axis + 1; i < s.size(); ++i) {
        inner *= s[i];
    }
    std::vector<double> out(x.numel());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * n * inner + in;
            double mx = x[base];
            for (std::size_t j = 1; j < n; ++j) {
                mx = std::max(mx, x[base + j * inner]);
            }
            double z = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double e = std::exp(x[base + j * inner] - mx);
                out[base + j * inner] = e;
                z += e;
            }
            for (std::size_t j = 0; j < n; ++j) {
                out[base + j * inner] /= z;
            }
        }
    }
    Tensor r(s, std::move(out));
    if (tape.active() && Tape::tracks({&x})) {
        tape.record(r, [xn = x.node_ptr(), outer, inner, n](TensorNode& o) {
            auto& g = xn->ensure_grad();
            for (std::size_t ob = 0; ob < outer; ++ob) {
                for (std::size_t in = 0; in < inner; ++in) {
                    const std::size_t base = ob * n * inner + in;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        dot += o.grad[base + j * inner] * o.data[base + j * inner];
                    }
                    for (std::size_t j = 0; j < n; ++j) {
                        const std::size_t idx = base + j * inner;
                        g[idx] += o.data[idx] * (o.grad[idx] - dot);
                    }
                }
            }
        });
    }
    return r;
}

Tensor gelu(Tape& tape, const Tensor& x)
{
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = x[i];
        out[i] = 0.5 * v * (1.0 + std::erf(v * inv_sqrt2));
    }
    Tensor r(x.shape(), std::move(out));
    if (tape.active() && Tape::tracks({&x})) {
        tape.record(r, [xn = x.node_ptr()](TensorNode& o) {
            constexpr double inv_sqrt2pi = 0.39894228040143267794;
            auto& g = xn->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double v = xn->data[i];
                const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
                const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
                g[i] += o.grad[i] * (cdf + v * pdf);
            }
        });
    }
    return r;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps)
{
    require_rank2(x, "layer_norm");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (gamma.numel() != cols || beta.numel() != cols) {
        throw DimensionError("layer_norm: affine parameters " + shape_to_string(gamma.shape()) + "/"
                             + shape_to_string(beta.shape()) + " vs " + shape_to_string(x.shape()));
    }
    std::vector<double> out(x.numel());
    std::vector<double> xhat(x.numel());
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data().data() + r * cols;
        double mu = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            mu += xr[c];
        }
        mu /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            var += (xr[c] - mu) * (xr[c] - mu);
        }
        var /= static_cast<double>(cols);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        for (std::size_t c = 0; c < cols; ++c) {
            const double h = (xr[c] - mu) * is;
            xhat[r * cols + c] = h;
            out[r * cols + c] = h * gamma[c] + beta[c];
        }
    }
    Tensor res(x.shape(), std::move(out));
    if (tape.active() && Tape::tracks({&x, &gamma, &beta})) {
        tape.record(res, [xn = x.node_ptr(), gn = gamma.node_ptr(), bn = beta.node_ptr(), xhat = std::move(xhat),
                          inv_std = std::move(inv_std), rows, cols](TensorNode& o) {
            if (TensorNode* t = grad_target(gn)) {
                auto& g = t->ensure_grad();
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                        g[c] += o.grad[r * cols + c] * xhat[r * cols + c];
                    }
                }
            }
            if (TensorNode* t = grad_target(bn)) {
                auto& g = t->ensure_grad();
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                        g[c] += o.grad[r * cols + c];
                    }
                }
            }
            if (TensorNode* t = grad_target(xn)) {
                auto& g = t->ensure_grad();
                const double inv_n = 1.0 / static_cast<double>(cols);
                for (std::size_t r = 0; r < rows; ++r) {
                    double mean_dh = 0.0, mean_dh_h = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) {
                        const double dh = o.grad[r * cols + c] * gn->data[c];
                        mean_dh += dh;
                        mean_dh_h += dh * xhat[r * cols + c];
                    }
                    mean_dh *= inv_n;
                    mean_dh_h *= inv_n;
                    for (std::size_t c = 0; c < cols; ++c) {
                        const double dh = o.grad[r * cols + c] * gn->data[c];
                        g[r * cols + c] += inv_std[r] * (dh - mean_dh - xhat[r * cols + c] * mean_dh_h);
                    }
                }
            }
        });
    }
    return res;
}

// ---- reductions and losses -------------------------------------------------

Tensor sum(Tape& tape, const Tensor& x)
{
    double s = 0.0;
    for (double v : x.data()) {
        s += v;
    }
    Tensor r = Tensor::scalar(s);
    if (tape.active() && Tape::tracks({&x})) {
        tape.record(r, [xn = x.node_ptr()](TensorNode& o) {
            auto& g = xn->ensure_grad();
            for (double& v : g) {
                v += o.grad[0];
            }
        });
    }
    return r;
}

Tensor mean(Tape& tape, const Tensor& x) { return scale(tape, sum(tape, x), 1.0 / static_cast<double>(x.numel())); }

Tensor cross_entropy(Tape& tape, const Tensor& logits, const Tensor& target)
{
    if (logits.numel() != target.numel()) {
        throw DimensionError("cross_entropy: logits " + shape_to_string(logits.shape()) + " vs target "
                             + shape_to_string(target.shape()));
    }
    if (!all_finite(logits.data()) || !all_finite(target.data())) {
        throw NumericError("cross_entropy: non-finite input");
    }
    const std::size_t m = logits.numel();
    const double mx = *std::max_element(logits.data().begin(), logits.data().end());
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        z += std::exp(logits[i] - mx);
    }
    const double log_z = mx + std::log(z);
    double loss = 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (target[i] != 0.0) {
            loss -= target[i] * (logits[i] - log_z);
        }
        mass += target[i];
    }
    Tensor r = Tensor::scalar(loss);
    if (tape.active() && Tape::tracks({&logits})) {
        tape.record(r, [ln = logits.node_ptr(), tn = target.node_ptr(), log_z, mass, m](TensorNode& o) {
            auto& g = ln->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                const double p = std::exp(ln->data[i] - log_z);
                g[i] += o.grad[0] * (mass * p - tn->data[i]);
            }
        });
    }
    return r;
}

// ---- structural ------------------------------------------------------------

Tensor slice_rows(Tape& tape, const Tensor& x, std::size_t begin, std::size_t count)
{
    require_rank2(x, "slice_rows");
    const std::size_t cols = x.dim(1);
    if (count == 0 || begin + count > x.dim(0)) {
        throw IndexError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(begin + count)
                         + ") outside " + shape_to_string(x.shape()));
    }
    const auto first = x.data().begin() + static_cast<std::ptrdiff_t>(begin * cols);
    Tensor r({count, cols}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * cols)));
    if (tape.active() && Tape::tracks({&x})) {
        tape.record(r, [xn = x.node_ptr(), off = begin * cols](TensorNode& o) {
            auto& g = xn->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) {
                g[off + i] += o.grad[i];
            }
        });
    }
    return r;
}

Tensor slice_cols(Tape& tape, const Tensor& x, std::size_t begin, std::size_t count)
{
    require_rank2(x, "slice_cols");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (count == 0 || begin + count > cols) {
        throw IndexError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count)
                         + ") outside " + shape_to_string(x.shape()));
    }
    std::vector<double> out(rows * count);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(x.data().data() + r * cols + begin, count, out.data() + r * count);
    }
    Tensor res({rows, count}, std::move(out));
    if (tape.active() && Tape::tracks({&x})) {
        tape.record(res, [xn = x.node_ptr(), rows, cols, begin, count](TensorNode& o) {
            auto& g = xn->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < count; ++c) {
                    g[r * cols + begin + c] += o.grad[r * count + c];
                }
            }
        });
    }
    return res;
}

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts)
{
    if (parts.empty()) {
        throw ContractError("concat_rows: no inputs");
    }
    const std::size_t cols = parts.front().dim(parts.front().rank() - 1);
    std::size_t rows = 0;
    bool track = false;
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_rows");
        if (p.dim(1) != cols) {
            throw DimensionError("concat_rows: column mismatch " + shape_to_string(p.shape()) + " vs "
                                 + shape_to_string(parts.front().shape()));
        }
        rows += p.dim(0);
        track = track || p.requires_grad();
    }
    std::vector<double> out;
    out.reserve(rows * cols);
    for (const Tensor& p : parts) {
        out.insert(out.end(), p.data().begin(), p.data().end());
    }
    Tensor r({rows, cols}, std::move(out));
    if (track && tape.active()) {
        std::vector<std::shared_ptr<TensorNode>> nodes;
        for (const Tensor& p : parts) {
            nodes.push_back(p.node_ptr());
        }
        tape.record(r, [nodes = std::move(nodes)](TensorNode& o) {
            std::size_t off = 0;
            for (const auto& n : nodes) {
                if (n->requires_grad) {
                    auto& g = n->ensure_grad();
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        g[i] += o.grad[off + i];
                    }
                }
                off += n->data.size();
            }
        });
    }
    return r;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts)
{
    if (parts.empty()) {
        throw ContractError("concat_cols: no inputs");
    }
    const std::size_t rows = parts.front().dim(0);
    std::size_t cols = 0;
    bool track = false;
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_cols");
        if (p.dim(0) != rows) {
            throw DimensionError("concat_cols: row mismatch " + shape_to_string(p.shape()) + " vs "
                                 + shape_to_string(parts.front().shape()));
        }
        cols += p.dim(1);
        track = track || p.requires_grad();
    }
    std::vector<double> out(rows * cols);
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        const std::size_t pc = p.dim(1);
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(p.data().data() + r * pc, pc, out.data() + r * cols + off);
        }
        off += pc;
    }
    Tensor res({rows, cols}, std::move(out));
    if (track && tape.active()) {
        std::vector<std::shared_ptr<TensorNode>> nodes;
        for (const Tensor& p : parts) {
            nodes.push_back(p.node_ptr());
        }
        tape.record(res, [nodes = std::move(nodes), rows, cols](TensorNode& o) {
            std::size_t off = 0;
            for (const auto& n : nodes) {
                const std::size_t pc = n->shape[1];
                if (n->requires_grad) {
                    auto& g = n->ensure_grad();
                    for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t c = 0; c < pc; ++c) {
                            g[r * pc + c] += o.grad[r * cols + off + c];
                        }
                    }
                }
                off += pc;
            }
        });
    }
    return res;
}

Tensor gather(Tape& tape, const Tensor& x, std::vector<std::size_t> index, Shape out_shape)
{
    if (shape_numel(out_shape) != index.size()) {
        throw DimensionError("gather: " + std::to_string(index.size()) + " indices for output "
                             + shape_to_string(out_shape));
    }
    std::vector<double> out(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= x.numel()) {
            throw IndexError("gather: index " + std::to_string(index[i]) + " outside " + shape_to_string(x.shape()));
        }
        out[i] = x[index[i]];
    }
    Tensor r(std::move(out_shape), std::move(out));
    if (tape.active() && Tape::tracks({&x})) {
        tape.record(r, [xn = x.node_ptr(), index = std::move(index)](TensorNode& o) {
            auto& g = xn->ensure_grad();
            for (std::size_t i = 0; i < index.size(); ++i) {
                g[index[i]] += o.grad[i];
            }
        });
    }
    return r;
}

void sgd_step(Tensor& param, double lr)
{
    if (!param.has_grad()) {
        return;
    }
    auto values = param.mutable_data();
    auto grad = param.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] -= lr * grad[i];
    }
}

// ---- gradient checking -----------------------------------------------------

double finite_diff_check(const std::function<Tensor(Tape&)>& f, Tensor param, double h, FdStencil stencil)
{
    if (!(h > 0.0)) {
        throw ContractError("finite_diff_check: step must be positive");
    }
    const bool had_grad_flag = param.requires_grad();
    param.set_requires_grad(true);
    param.zero_grad();

    Tape tape;
    const Tensor loss = f(tape);
    if (!all_finite(loss.data())) {
        throw NumericError("finite_diff_check: non-finite function value");
    }
    backward(loss, tape);
    std::vector<double> analytic(param.numel(), 0.0);
    if (param.has_grad()) {
        std::copy(param.grad().begin(), param.grad().end(), analytic.begin());
    }
    tape.clear();

    auto values = param.mutable_data();
    double worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double orig = values[i];
        auto eval_at = [&](double offset) {
            values[i] = orig + offset;
            Tape probe(Tape::no_grad);
            const double v = f(probe).item();
            if (!std::isfinite(v)) {
                values[i] = orig;
                throw NumericError("finite_diff_check: non-finite function value at coordinate " + std::to_string(i));
            }
            return v;
        };
        double numeric = 0.0;
        if (stencil == FdStencil::central2) {
            numeric = (eval_at(h) - eval_at(-h)) / (2.0 * h);
        } else {
            const double d1 = eval_at(h) - eval_at(-h);
            const double d2 = eval_at(2.0 * h) - eval_at(-2.0 * h);
            numeric = (8.0 * d1 - d2) / (12.0 * h);
        }
        values[i] = orig;
        worst = std::max(worst, std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + 1e-12));
    }
    param.zero_grad();
    param.set_requires_grad(had_grad_flag);
    return worst;
}

double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x, double h,
                         FdStencil stencil)
{
    Tensor probe = x.clone();
    return finite_diff_check([&](Tape& tape) { return f(tape, probe); }, probe, h, stencil);
}

} // namespace hintaug
