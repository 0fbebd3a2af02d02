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

#pragma once

// Dense double-precision tensors with a define-by-run reverse-mode tape.
//
// A Tensor is a shared handle: copies alias the same storage. Values are
// treated as immutable once an op has produced them; the only sanctioned
// in-place writers are initializers and sgd_step. Every op takes the Tape it
// records on; nothing is recorded unless at least one input requires grad,
// so inference passes through the same code path at no extra cost.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hintaug {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad; // empty until a backward pass reaches the node
    bool requires_grad = false;
    bool is_leaf = true;

    std::vector<double>& ensure_grad()
    {
        if (grad.empty()) {
            grad.assign(data.size(), 0.0);
        }
        return grad;
    }
};

} // namespace detail

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);
    static Tensor identity(std::size_t n);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t numel() const { return node_->data.size(); }

    std::span<const double> data() const { return node_->data; }
    // In-place access for initializers and optimizers only.
    std::span<double> mutable_data() { return node_->data; }
    double operator[](std::size_t i) const { return node_->data[i]; }
    double at(std::size_t row, std::size_t col) const;
    double item() const;

    bool requires_grad() const { return node_ && node_->requires_grad; }
    // Marks a leaf as a gradient target. Only valid on leaves.
    Tensor& set_requires_grad(bool on);
    bool has_grad() const { return node_ && !node_->grad.empty(); }
    std::span<const double> grad() const { return node_->grad; }
    void zero_grad();

    // Fresh leaf holding a copy of the values; never aliases.
    Tensor clone() const;
    Tensor reshape(Shape shape) const; // leaf copy, no gradient link

    detail::TensorNode* node() const { return node_.get(); }
    const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }

private:
    std::shared_ptr<detail::TensorNode> node_;
};

// Ordered record of primitive ops for one forward pass. Single owner; rebuild
// per pass. A no_grad tape records nothing and its outputs never require grad.
class Tape {
public:
    using BackwardFn = std::function<void(detail::TensorNode& out)>;

    enum Mode { record_ops, no_grad };

    explicit Tape(Mode mode = record_ops) : active_(mode == record_ops) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    // True when an op over these inputs must be recorded.
    static bool tracks(std::initializer_list<const Tensor*> inputs);
    // Marks `out` as a non-leaf gradient carrier and appends its rule.
    void record(Tensor& out, BackwardFn fn);

    bool active() const { return active_; }
    std::size_t size() const { return entries_.size(); }
    void clear() { entries_.clear(); }

private:
    friend void backward(const Tensor& loss, Tape& tape);

    struct Entry {
        std::shared_ptr<detail::TensorNode> out;
        BackwardFn fn;
    };
    std::vector<Entry> entries_;
    bool active_ = true;
};

// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. Leaf gradients
// accumulate across calls; intermediate gradients are reset first.
void backward(const Tensor& loss, Tape& tape);

// ---- primitives -----------------------------------------------------------

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& x, double factor);
// x[r×c] + bias[c] broadcast over rows.
Tensor add_row(Tape& tape, const Tensor& x, const Tensor& bias);
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& x);
Tensor softmax(Tape& tape, const Tensor& x, std::size_t axis);
inline Tensor softmax(Tape& tape, const Tensor& x) { return softmax(tape, x, x.rank() - 1); }
Tensor gelu(Tape& tape, const Tensor& x);
// Row-wise normalization over the last axis of a 2-D tensor.
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-6);
Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);
// -sum_i q_i log softmax(logits)_i. `target` is taken as given and never
// differentiated.
Tensor cross_entropy(Tape& tape, const Tensor& logits, const Tensor& target);

Tensor slice_rows(Tape& tape, const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_cols(Tape& tape, const Tensor& x, std::size_t begin, std::size_t count);
Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts);
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
// out.flat[i] = x.flat[index[i]]; the backward pass scatter-adds.
Tensor gather(Tape& tape, const Tensor& x, std::vector<std::size_t> index, Shape out_shape);

// param -= lr * grad, in place. No-op when the parameter has no gradient.
void sgd_step(Tensor& param, double lr);

// Max over coordinates of |analytic - central difference| / (|analytic| + 1e-12).
// The two-argument form perturbs `param` in place (restored afterwards), so
// it works for tensors captured inside `f`, such as model parameters.
// central2: (f(x+h) - f(x-h)) / 2h. central4 adds the +-2h points and
// cancels the h^2 term, which lets larger h keep roundoff down.
enum class FdStencil { central2, central4 };

double finite_diff_check(const std::function<Tensor(Tape&)>& f, Tensor param, double h,
                         FdStencil stencil = FdStencil::central2);
double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x, double h,
                         FdStencil stencil = FdStencil::central2);

bool all_finite(std::span<const double> values);

} // namespace hintaug
