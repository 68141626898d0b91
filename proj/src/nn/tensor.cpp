#include "mvbu/nn/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "mvbu/error.hpp"

namespace mvbu::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using ConstMapRow = Eigen::Map<const RowMat>;

thread_local bool g_grad_enabled = true;

bool any_requires_grad(std::initializer_list<const Tensor*> ts)
{
    if (!g_grad_enabled) return false;
    for (const Tensor* t : ts)
        if (t->defined() && t->requires_grad()) return true;
    return false;
}

// Creates the output node; parents and backward are attached only when a
// gradient is needed.
std::shared_ptr<Node> make_node(Shape shape, bool needs_grad)
{
    auto n = std::make_shared<Node>();
    n->value.assign(numel(shape), 0.0);
    n->shape = std::move(shape);
    n->requires_grad = needs_grad;
    return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    require(a.shape() == b.shape(),
            std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

double* grad_ptr(const std::shared_ptr<Node>& n)
{
    if (!n->requires_grad) return nullptr;
    n->ensure_grad();
    return n->grad.data();
}

double clamp_log_var(double lv) { return std::clamp(lv, kLogVarMin, kLogVarMax); }

} // namespace

std::size_t numel(const Shape& s)
{
    std::size_t n = 1;
    for (int d : s) {
        require(d >= 0, "negative tensor dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_string(const Shape& s)
{
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
    return out + "]";
}

void Node::ensure_grad()
{
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad)
{
    auto n = make_node(shape, requires_grad);
    return Tensor(n);
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values, bool requires_grad)
{
    require(values.size() == numel(shape), "tensor value count does not match shape " + shape_string(shape));
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->value.assign(values.begin(), values.end());
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

std::span<double> Tensor::grad()
{
    node_->ensure_grad();
    return node_->grad;
}

std::span<const double> Tensor::grad() const
{
    node_->ensure_grad();
    return node_->grad;
}

double Tensor::item() const
{
    require(size() == 1, "item() on a tensor with more than one element");
    return node_->value[0];
}

void Tensor::zero_grad() const
{
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const
{
    require(size() == 1, "backward() requires a scalar");
    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward) {
            n->ensure_grad();
            n->backward(*n);
        }
    }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

// ---------------------------------------------------------------------------

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias)
{
    require(x.rank() == 2 && weight.rank() == 2 && bias.rank() == 1, "linear: expects x [B, in], W [out, in], b [out]");
    const int b = x.dim(0), in = x.dim(1), out = weight.dim(0);
    require(weight.dim(1) == in && bias.dim(0) == out,
            "linear: shape mismatch " + shape_string(x.shape()) + " x " + shape_string(weight.shape()));
    const bool ng = any_requires_grad({&x, &weight, &bias});
    auto node = make_node({b, out}, ng);
    MapRow y(node->value.data(), b, out);
    const ConstMapRow xm(x.values().data(), b, in);
    const ConstMapRow wm(weight.values().data(), out, in);
    y.noalias() = xm * wm.transpose();
    const Eigen::Map<const Eigen::RowVectorXd> bv(bias.values().data(), out);
    y.rowwise() += bv;
    if (ng) {
        node->parents = {x.ptr(), weight.ptr(), bias.ptr()};
        node->backward = [b, in, out](Node& self) {
            const auto& xp = self.parents[0];
            const auto& wp = self.parents[1];
            const auto& bp = self.parents[2];
            const ConstMapRow gy(self.grad.data(), b, out);
            const ConstMapRow xm(xp->value.data(), b, in);
            const ConstMapRow wm(wp->value.data(), out, in);
            if (double* gx = grad_ptr(xp)) MapRow(gx, b, in).noalias() += gy * wm;
            if (double* gw = grad_ptr(wp)) MapRow(gw, out, in).noalias() += gy.transpose() * xm;
            if (double* gb = grad_ptr(bp)) Eigen::Map<Eigen::RowVectorXd>(gb, out) += gy.colwise().sum();
        };
    }
    return Tensor(node);
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad)
{
    require(x.rank() == 3 && weight.rank() == 3 && bias.rank() == 1,
            "conv1d: expects x [B, C, L], W [O, C, K], b [O]");
    const int bsz = x.dim(0), c = x.dim(1), len = x.dim(2);
    const int o = weight.dim(0), k = weight.dim(2);
    require(weight.dim(1) == c && bias.dim(0) == o,
            "conv1d: shape mismatch " + shape_string(x.shape()) + " * " + shape_string(weight.shape()));
    require(stride >= 1 && pad >= 0, "conv1d: invalid stride or padding");
    const int lout = (len + 2 * pad - k) / stride + 1;
    require(lout >= 1, "conv1d: input shorter than the kernel");
    const int ck = c * k;
    const int cols_n = bsz * lout;

    auto cols = std::make_shared<Eigen::MatrixXd>(ck, cols_n);
    const double* xv = x.values().data();
    for (int bi = 0; bi < bsz; ++bi)
        for (int t = 0; t < lout; ++t) {
            double* col = cols->col(bi * lout + t).data();
            for (int ci = 0; ci < c; ++ci) {
                const double* row = xv + (static_cast<std::size_t>(bi) * c + ci) * len;
                for (int ki = 0; ki < k; ++ki) {
                    const int src = t * stride + ki - pad;
                    col[ci * k + ki] = (src >= 0 && src < len) ? row[src] : 0.0;
                }
            }
        }
    const ConstMapRow wm(weight.values().data(), o, ck);
    const Eigen::MatrixXd y = wm * (*cols); // o x (B * lout)

    const bool ng = any_requires_grad({&x, &weight, &bias});
    auto node = make_node({bsz, o, lout}, ng);
    const double* bv = bias.values().data();
    for (int bi = 0; bi < bsz; ++bi)
        for (int oi = 0; oi < o; ++oi) {
            double* dst = node->value.data() + (static_cast<std::size_t>(bi) * o + oi) * lout;
            for (int t = 0; t < lout; ++t) dst[t] = y(oi, bi * lout + t) + bv[oi];
        }
    if (ng) {
        node->parents = {x.ptr(), weight.ptr(), bias.ptr()};
        node->backward = [=](Node& self) {
            const auto& xp = self.parents[0];
            const auto& wp = self.parents[1];
            const auto& bp = self.parents[2];
            Eigen::MatrixXd gy(o, cols_n);
            for (int bi = 0; bi < bsz; ++bi)
                for (int oi = 0; oi < o; ++oi) {
                    const double* src = self.grad.data() + (static_cast<std::size_t>(bi) * o + oi) * lout;
                    for (int t = 0; t < lout; ++t) gy(oi, bi * lout + t) = src[t];
                }
            if (double* gw = grad_ptr(wp)) MapRow(gw, o, ck).noalias() += gy * cols->transpose();
            if (double* gb = grad_ptr(bp)) Eigen::Map<Eigen::VectorXd>(gb, o) += gy.rowwise().sum();
            if (double* gx = grad_ptr(xp)) {
                const ConstMapRow wm(wp->value.data(), o, ck);
                const Eigen::MatrixXd gcols = wm.transpose() * gy;
                for (int bi = 0; bi < bsz; ++bi)
                    for (int t = 0; t < lout; ++t) {
                        const double* col = gcols.col(bi * lout + t).data();
                        for (int ci = 0; ci < c; ++ci) {
                            double* row = gx + (static_cast<std::size_t>(bi) * c + ci) * len;
                            for (int ki = 0; ki < k; ++ki) {
                                const int dst = t * stride + ki - pad;
                                if (dst >= 0 && dst < len) row[dst] += col[ci * k + ki];
                            }
                        }
                    }
            }
        };
    }
    return Tensor(node);
}

Tensor upsample2(const Tensor& x)
{
    require(x.rank() == 3, "upsample2: expects [B, C, L]");
    const int rows = x.dim(0) * x.dim(1), len = x.dim(2);
    const bool ng = any_requires_grad({&x});
    auto node = make_node({x.dim(0), x.dim(1), 2 * len}, ng);
    const double* xv = x.values().data();
    for (int r = 0; r < rows; ++r)
        for (int t = 0; t < len; ++t) {
            const double v = xv[static_cast<std::size_t>(r) * len + t];
            node->value[static_cast<std::size_t>(r) * 2 * len + 2 * t] = v;
            node->value[static_cast<std::size_t>(r) * 2 * len + 2 * t + 1] = v;
        }
    if (ng) {
        node->parents = {x.ptr()};
        node->backward = [rows, len](Node& self) {
            double* gx = grad_ptr(self.parents[0]);
            for (int r = 0; r < rows; ++r)
                for (int t = 0; t < len; ++t)
                    gx[static_cast<std::size_t>(r) * len + t] +=
                        self.grad[static_cast<std::size_t>(r) * 2 * len + 2 * t] +
                        self.grad[static_cast<std::size_t>(r) * 2 * len + 2 * t + 1];
        };
    }
    return Tensor(node);
}

Tensor leaky_relu(const Tensor& x, double slope)
{
    const bool ng = any_requires_grad({&x});
    auto node = make_node(x.shape(), ng);
    const auto xv = x.values();
    for (std::size_t i = 0; i < xv.size(); ++i) node->value[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
    if (ng) {
        node->parents = {x.ptr()};
        node->backward = [slope](Node& self) {
            const auto& p = self.parents[0];
            double* gx = grad_ptr(p);
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                gx[i] += p->value[i] > 0.0 ? self.grad[i] : slope * self.grad[i];
        };
    }
    return Tensor(node);
}

Tensor add(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "add");
    const bool ng = any_requires_grad({&a, &b});
    auto node = make_node(a.shape(), ng);
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) node->value[i] = av[i] + bv[i];
    if (ng) {
        node->parents = {a.ptr(), b.ptr()};
        node->backward = [](Node& self) {
            for (const auto& p : self.parents)
                if (double* g = grad_ptr(p))
                    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        };
    }
    return Tensor(node);
}

Tensor scale(const Tensor& x, double s)
{
    const bool ng = any_requires_grad({&x});
    auto node = make_node(x.shape(), ng);
    const auto xv = x.values();
    for (std::size_t i = 0; i < xv.size(); ++i) node->value[i] = s * xv[i];
    if (ng) {
        node->parents = {x.ptr()};
        node->backward = [s](Node& self) {
            double* g = grad_ptr(self.parents[0]);
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += s * self.grad[i];
        };
    }
    return Tensor(node);
}

Tensor clamp(const Tensor& x, double lo, double hi)
{
    const bool ng = any_requires_grad({&x});
    auto node = make_node(x.shape(), ng);
    const auto xv = x.values();
    for (std::size_t i = 0; i < xv.size(); ++i) node->value[i] = std::clamp(xv[i], lo, hi);
    if (ng) {
        node->parents = {x.ptr()};
        node->backward = [lo, hi](Node& self) {
            const auto& p = self.parents[0];
            double* g = grad_ptr(p);
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                if (p->value[i] >= lo && p->value[i] <= hi) g[i] += self.grad[i];
        };
    }
    return Tensor(node);
}

Tensor reshape(const Tensor& x, const Shape& shape)
{
    require(numel(shape) == x.size(), "reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
    const bool ng = any_requires_grad({&x});
    auto node = make_node(shape, ng);
    std::copy(x.values().begin(), x.values().end(), node->value.begin());
    if (ng) {
        node->parents = {x.ptr()};
        node->backward = [](Node& self) {
            double* g = grad_ptr(self.parents[0]);
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        };
    }
    return Tensor(node);
}

Tensor concat(const std::vector<Tensor>& parts)
{
    require(!parts.empty(), "concat: no inputs");
    const int b = parts.front().dim(0);
    std::vector<int> widths;
    int total = 0;
    bool ng = false;
    for (const auto& p : parts) {
        require(p.dim(0) == b, "concat: batch sizes differ");
        widths.push_back(static_cast<int>(p.size() / static_cast<std::size_t>(b)));
        total += widths.back();
        ng = ng || any_requires_grad({&p});
    }
    auto node = make_node({b, total}, ng);
    int offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto v = parts[k].values();
        for (int r = 0; r < b; ++r)
            std::copy_n(v.data() + static_cast<std::size_t>(r) * widths[k], widths[k],
                        node->value.data() + static_cast<std::size_t>(r) * total + offset);
        offset += widths[k];
    }
    if (ng) {
        for (const auto& p : parts) node->parents.push_back(p.ptr());
        node->backward = [b, total, widths](Node& self) {
            int off = 0;
            for (std::size_t k = 0; k < self.parents.size(); ++k) {
                if (double* g = grad_ptr(self.parents[k]))
                    for (int r = 0; r < b; ++r)
                        for (int j = 0; j < widths[k]; ++j)
                            g[static_cast<std::size_t>(r) * widths[k] + j] +=
                                self.grad[static_cast<std::size_t>(r) * total + off + j];
                off += widths[k];
            }
        };
    }
    return Tensor(node);
}

Tensor slice_cols(const Tensor& x, int begin, int count)
{
    require(x.rank() == 2, "slice_cols: expects [B, n]");
    const int b = x.dim(0), n = x.dim(1);
    require(begin >= 0 && count >= 0 && begin + count <= n, "slice_cols: range out of bounds");
    const bool ng = any_requires_grad({&x});
    auto node = make_node({b, count}, ng);
    for (int r = 0; r < b; ++r)
        std::copy_n(x.values().data() + static_cast<std::size_t>(r) * n + begin, count,
                    node->value.data() + static_cast<std::size_t>(r) * count);
    if (ng) {
        node->parents = {x.ptr()};
        node->backward = [b, n, begin, count](Node& self) {
            double* g = grad_ptr(self.parents[0]);
            for (int r = 0; r < b; ++r)
                for (int j = 0; j < count; ++j)
                    g[static_cast<std::size_t>(r) * n + begin + j] += self.grad[static_cast<std::size_t>(r) * count + j];
        };
    }
    return Tensor(node);
}

Tensor sum(const Tensor& x)
{
    const bool ng = any_requires_grad({&x});
    auto node = make_node({1}, ng);
    double s = 0.0;
    for (double v : x.values()) s += v;
    node->value[0] = s;
    if (ng) {
        node->parents = {x.ptr()};
        node->backward = [](Node& self) {
            double* g = grad_ptr(self.parents[0]);
            const std::size_t n = self.parents[0]->value.size();
            for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0];
        };
    }
    return Tensor(node);
}

Tensor reparameterize(const Tensor& mu, const Tensor& log_var, const Tensor& eps)
{
    require_same_shape(mu, log_var, "reparameterize");
    require_same_shape(mu, eps, "reparameterize");
    const bool ng = any_requires_grad({&mu, &log_var});
    auto node = make_node(mu.shape(), ng);
    const auto m = mu.values(), lv = log_var.values(), e = eps.values();
    for (std::size_t i = 0; i < m.size(); ++i) node->value[i] = m[i] + std::exp(0.5 * lv[i]) * e[i];
    if (ng) {
        node->parents = {mu.ptr(), log_var.ptr(), eps.ptr()};
        node->backward = [](Node& self) {
            const auto& lv = self.parents[1]->value;
            const auto& e = self.parents[2]->value;
            if (double* g = grad_ptr(self.parents[0]))
                for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
            if (double* g = grad_ptr(self.parents[1]))
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    g[i] += self.grad[i] * 0.5 * std::exp(0.5 * lv[i]) * e[i];
        };
    }
    return Tensor(node);
}

Tensor gaussian_nll(const Tensor& x, const Tensor& mu, const Tensor& log_var)
{
    require_same_shape(x, mu, "gaussian_nll");
    require_same_shape(x, log_var, "gaussian_nll");
    const bool ng = any_requires_grad({&mu, &log_var});
    auto node = make_node({1}, ng);
    node->value[0] = gaussian_nll_value(x.values(), mu.values(), log_var.values());
    if (ng) {
        node->parents = {mu.ptr(), log_var.ptr(), x.ptr()};
        node->backward = [](Node& self) {
            const auto& m = self.parents[0]->value;
            const auto& lv = self.parents[1]->value;
            const auto& xv = self.parents[2]->value;
            const double g0 = self.grad[0];
            double* gm = grad_ptr(self.parents[0]);
            double* gl = grad_ptr(self.parents[1]);
            for (std::size_t i = 0; i < m.size(); ++i) {
                const double l = clamp_log_var(lv[i]);
                const double inv = std::exp(-l);
                const double r = xv[i] - m[i];
                if (gm) gm[i] += g0 * (-r * inv);
                if (gl && lv[i] >= kLogVarMin && lv[i] <= kLogVarMax) gl[i] += g0 * 0.5 * (1.0 - r * r * inv);
            }
        };
    }
    return Tensor(node);
}

Tensor kl_diag(const Tensor& mu_q, const Tensor& lv_q, const Tensor& mu_p, const Tensor& lv_p)
{
    require_same_shape(mu_q, lv_q, "kl_diag");
    require_same_shape(mu_q, mu_p, "kl_diag");
    require_same_shape(mu_q, lv_p, "kl_diag");
    const bool ng = any_requires_grad({&mu_q, &lv_q, &mu_p, &lv_p});
    auto node = make_node({1}, ng);
    const auto mq = mu_q.values(), lq = lv_q.values(), mp = mu_p.values(), lp = lv_p.values();
    double s = 0.0;
    for (std::size_t i = 0; i < mq.size(); ++i) {
        const double d = mq[i] - mp[i];
        s += 0.5 * (lp[i] - lq[i]) + (std::exp(lq[i]) + d * d) / (2.0 * std::exp(lp[i])) - 0.5;
    }
    node->value[0] = s;
    if (ng) {
        node->parents = {mu_q.ptr(), lv_q.ptr(), mu_p.ptr(), lv_p.ptr()};
        node->backward = [](Node& self) {
            const auto& mq = self.parents[0]->value;
            const auto& lq = self.parents[1]->value;
            const auto& mp = self.parents[2]->value;
            const auto& lp = self.parents[3]->value;
            const double g0 = self.grad[0];
            double* g_mq = grad_ptr(self.parents[0]);
            double* g_lq = grad_ptr(self.parents[1]);
            double* g_mp = grad_ptr(self.parents[2]);
            double* g_lp = grad_ptr(self.parents[3]);
            for (std::size_t i = 0; i < mq.size(); ++i) {
                const double inv_vp = std::exp(-lp[i]);
                const double d = mq[i] - mp[i];
                const double vq = std::exp(lq[i]);
                if (g_mq) g_mq[i] += g0 * d * inv_vp;
                if (g_mp) g_mp[i] -= g0 * d * inv_vp;
                if (g_lq) g_lq[i] += g0 * (-0.5 + 0.5 * vq * inv_vp);
                if (g_lp) g_lp[i] += g0 * (0.5 - 0.5 * (vq + d * d) * inv_vp);
            }
        };
    }
    return Tensor(node);
}

Tensor kl_standard_normal(const Tensor& mu, const Tensor& log_var)
{
    const Tensor zero = Tensor::zeros(mu.shape());
    return kl_diag(mu, log_var, zero, zero);
}

double kl_diag_gaussians(std::span<const double> mu_q, std::span<const double> var_q, std::span<const double> mu_p,
                         std::span<const double> var_p)
{
    require(mu_q.size() == var_q.size() && mu_q.size() == mu_p.size() && mu_q.size() == var_p.size(),
            "kl_diag_gaussians: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < mu_q.size(); ++i) {
        require(var_q[i] > 0.0 && var_p[i] > 0.0, "kl_diag_gaussians: variances must be positive");
        const double d = mu_q[i] - mu_p[i];
        s += 0.5 * std::log(var_p[i] / var_q[i]) + (var_q[i] + d * d) / (2.0 * var_p[i]) - 0.5;
    }
    return s;
}

double gaussian_nll_value(std::span<const double> x, std::span<const double> mu, std::span<const double> log_var)
{
    require(x.size() == mu.size() && x.size() == log_var.size(), "gaussian_nll: size mismatch");
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double l = clamp_log_var(log_var[i]);
        const double r = x[i] - mu[i];
        s += half_log_2pi + 0.5 * l + 0.5 * r * r * std::exp(-l);
    }
    return s;
}

} // namespace mvbu::nn
