#pragma once

// Reverse-mode automatic differentiation over dense row-major tensors of
// doubles. Tensors are handles to graph nodes; ops record their parents and a
// backward closure unless gradient recording is disabled by a NoGradGuard.

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace mvbu::nn {

using Shape = std::vector<int>;

/// 64-byte aligned storage. Eigen picks its vectorized kernels by pointer
/// alignment, so a fixed alignment keeps results bit-identical across runs.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept
    {
    }
    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept
    {
        return true;
    }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

std::size_t numel(const Shape& s);
std::string shape_string(const Shape& s);

struct Node {
    Shape shape;
    Buffer value;
    Buffer grad; // empty until needed
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward; // reads this->grad, accumulates into parents

    void ensure_grad();
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor from(const Shape& shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    std::size_t size() const { return node_->value.size(); }

    std::span<double> values() { return node_->value; }
    std::span<const double> values() const { return node_->value; }
    std::span<double> grad();
    std::span<const double> grad() const;
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    Node& node() const { return *node_; }
    const std::shared_ptr<Node>& ptr() const { return node_; }

    /// Seeds d(this)/d(this) = 1 for a scalar and propagates to every leaf.
    void backward() const;
    void zero_grad() const;

private:
    std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

// ---------------------------------------------------------------------------
// Ops. Batch is the leading dimension everywhere.

/// x [B, in], weight [out, in], bias [out] -> [B, out]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// x [B, C, L], weight [O, C, K], bias [O] -> [B, O, L_out] with
/// L_out = (L + 2 pad - K) / stride + 1, zero padding.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad);

/// Nearest-neighbour repetition along the last axis of [B, C, L].
Tensor upsample2(const Tensor& x);

Tensor leaky_relu(const Tensor& x, double slope = 0.01);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double s);
/// Clamps values; the gradient is passed only where the input was inside.
Tensor clamp(const Tensor& x, double lo, double hi);
Tensor reshape(const Tensor& x, const Shape& shape);
/// Concatenates [B, *] tensors along the flattened feature axis.
Tensor concat(const std::vector<Tensor>& parts);
/// Columns [begin, begin + count) of a [B, n] tensor.
Tensor slice_cols(const Tensor& x, int begin, int count);
Tensor sum(const Tensor& x);

/// z = mu + exp(log_var / 2) * eps, eps given (no gradient).
Tensor reparameterize(const Tensor& mu, const Tensor& log_var, const Tensor& eps);

/// Sum over elements of -log N(x; mu, exp(log_var)). x carries no gradient.
Tensor gaussian_nll(const Tensor& x, const Tensor& mu, const Tensor& log_var);

/// Sum over elements of KL(N(mu_q, e^lv_q) || N(mu_p, e^lv_p)).
Tensor kl_diag(const Tensor& mu_q, const Tensor& lv_q, const Tensor& mu_p, const Tensor& lv_p);
/// KL against the standard normal.
Tensor kl_standard_normal(const Tensor& mu, const Tensor& log_var);

// Scalar versions on raw variances, used by oracles and latent inference.
double kl_diag_gaussians(std::span<const double> mu_q, std::span<const double> var_q, std::span<const double> mu_p,
                         std::span<const double> var_p);
double gaussian_nll_value(std::span<const double> x, std::span<const double> mu, std::span<const double> log_var);

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

} // namespace mvbu::nn
