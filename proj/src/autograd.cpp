#include "seaco/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace seaco::ag {

namespace {
thread_local bool g_grad_enabled = true;

bool track(const std::vector<NodePtr>& parents) {
    if (!g_grad_enabled) return false;
    for (const auto& p : parents)
        if (p->requires_grad) return true;
    return false;
}

NodePtr make(Tensor v, std::vector<NodePtr> parents, std::function<void(Node&)> back) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    if (track(parents)) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backprop = std::move(back);
    }
    return n;
}

void accum(const NodePtr& p, const Tensor& g) {
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) p->grad.data[i] += g.data[i];
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

NodePtr constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    return n;
}

NodePtr leaf(Tensor v, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    return n;
}

NodePtr make_op(Tensor value, std::vector<NodePtr> parents,
                std::function<void(Node&)> back) {
    return make(std::move(value), std::move(parents), std::move(back));
}

namespace detail {

void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
    size_t m = a.rows(), kk = a.cols(), n = b.cols();
    for (size_t i = 0; i < m; ++i) {
        const double* ar = &a.data[i * kk];
        double* cr = &c.data[i * n];
        for (size_t k = 0; k < kk; ++k) {
            double av = ar[k];
            if (av == 0.0) continue;
            const double* br = &b.data[k * n];
            for (size_t j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
    size_t m = a.rows(), kk = a.cols(), n = b.rows();
    for (size_t i = 0; i < m; ++i) {
        const double* ar = &a.data[i * kk];
        double* cr = &c.data[i * n];
        for (size_t j = 0; j < n; ++j) {
            const double* br = &b.data[j * kk];
            double s = 0.0;
            for (size_t k = 0; k < kk; ++k) s += ar[k] * br[k];
            cr[j] += s;
        }
    }
}

void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
    size_t kk = a.rows(), m = a.cols(), n = b.cols();
    for (size_t k = 0; k < kk; ++k) {
        const double* ar = &a.data[k * m];
        const double* br = &b.data[k * n];
        for (size_t i = 0; i < m; ++i) {
            double av = ar[i];
            if (av == 0.0) continue;
            double* cr = &c.data[i * n];
            for (size_t j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

}  // namespace detail

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    if (a->value.ndim() != 2 || b->value.ndim() != 2 || a->value.cols() != b->value.rows())
        throw std::invalid_argument("matmul: shape mismatch " + a->value.shape_str() +
                                    " x " + b->value.shape_str());
    Tensor out({a->value.rows(), b->value.cols()});
    detail::gemm_nn(a->value, b->value, out);
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            a->ensure_grad();
            detail::gemm_nt(self.grad, b->value, a->grad);
        }
        if (b->requires_grad) {
            b->ensure_grad();
            detail::gemm_tn(a->value, self.grad, b->grad);
        }
    });
}

NodePtr matmul_nt(const NodePtr& a, const NodePtr& b) {
    if (a->value.ndim() != 2 || b->value.ndim() != 2 || a->value.cols() != b->value.cols())
        throw std::invalid_argument("matmul_nt: shape mismatch " + a->value.shape_str() +
                                    " x " + b->value.shape_str() + "^T");
    Tensor out({a->value.rows(), b->value.rows()});
    detail::gemm_nt(a->value, b->value, out);
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            a->ensure_grad();
            detail::gemm_nn(self.grad, b->value, a->grad);
        }
        if (b->requires_grad) {
            b->ensure_grad();
            detail::gemm_tn(self.grad, a->value, b->grad);
        }
    });
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    if (!a->value.same_shape(b->value))
        throw std::invalid_argument("add: shape mismatch " + a->value.shape_str() + " vs " +
                                    b->value.shape_str());
    Tensor out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] += b->value.data[i];
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        accum(a, self.grad);
        accum(b, self.grad);
    });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    if (!a->value.same_shape(b->value))
        throw std::invalid_argument("sub: shape mismatch " + a->value.shape_str() + " vs " +
                                    b->value.shape_str());
    Tensor out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] -= b->value.data[i];
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        accum(a, self.grad);
        if (b->requires_grad) {
            b->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                b->grad.data[i] -= self.grad.data[i];
        }
    });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    if (!a->value.same_shape(b->value))
        throw std::invalid_argument("mul: shape mismatch " + a->value.shape_str() + " vs " +
                                    b->value.shape_str());
    Tensor out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] *= b->value.data[i];
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            a->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                a->grad.data[i] += self.grad.data[i] * b->value.data[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                b->grad.data[i] += self.grad.data[i] * a->value.data[i];
        }
    });
}

NodePtr scale(const NodePtr& a, double c) {
    Tensor out = a->value;
    for (double& v : out.data) v *= c;
    return make(std::move(out), {a}, [a, c](Node& self) {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) a->grad.data[i] += c * self.grad.data[i];
    });
}

NodePtr add_const(const NodePtr& a, double c) {
    Tensor out = a->value;
    for (double& v : out.data) v += c;
    return make(std::move(out), {a}, [a](Node& self) { accum(a, self.grad); });
}

NodePtr add_rowwise(const NodePtr& x, const NodePtr& bias) {
    size_t r = x->value.rows(), c = x->value.cols();
    if (bias->value.size() != c)
        throw std::invalid_argument("add_rowwise: bias size " + bias->value.shape_str() +
                                    " vs cols " + std::to_string(c));
    Tensor out = x->value;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out.data[i * c + j] += bias->value.data[j];
    return make(std::move(out), {x, bias}, [x, bias, r, c](Node& self) {
        accum(x, self.grad);
        if (bias->requires_grad) {
            bias->ensure_grad();
            for (size_t i = 0; i < r; ++i)
                for (size_t j = 0; j < c; ++j)
                    bias->grad.data[j] += self.grad.data[i * c + j];
        }
    });
}

NodePtr sigmoid(const NodePtr& x) {
    Tensor out = x->value;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    Tensor y = out;
    return make(std::move(out), {x}, [x, y](Node& self) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            double s = y.data[i];
            x->grad.data[i] += self.grad.data[i] * s * (1.0 - s);
        }
    });
}

NodePtr tanh_(const NodePtr& x) {
    Tensor out = x->value;
    for (double& v : out.data) v = std::tanh(v);
    Tensor y = out;
    return make(std::move(out), {x}, [x, y](Node& self) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
            x->grad.data[i] += self.grad.data[i] * (1.0 - y.data[i] * y.data[i]);
    });
}

NodePtr relu(const NodePtr& x) {
    Tensor out = x->value;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return make(std::move(out), {x}, [x](Node& self) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
            if (x->value.data[i] > 0.0) x->grad.data[i] += self.grad.data[i];
    });
}

NodePtr abs_(const NodePtr& x) {
    Tensor out = x->value;
    for (double& v : out.data) v = std::fabs(v);
    return make(std::move(out), {x}, [x](Node& self) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            double v = x->value.data[i];
            double s = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
            x->grad.data[i] += self.grad.data[i] * s;
        }
    });
}

NodePtr softmax_rows(const NodePtr& x) {
    if (x->value.ndim() != 2 || x->value.cols() == 0)
        throw std::invalid_argument("softmax: needs a non-empty 2-D input, got " +
                                    x->value.shape_str());
    size_t r = x->value.rows(), c = x->value.cols();
    Tensor out({r, c});
    for (size_t i = 0; i < r; ++i) {
        const double* xr = &x->value.data[i * c];
        double m = xr[0];
        for (size_t j = 1; j < c; ++j) m = std::max(m, xr[j]);
        double z = 0.0;
        for (size_t j = 0; j < c; ++j) z += std::exp(xr[j] - m);
        for (size_t j = 0; j < c; ++j) out.data[i * c + j] = std::exp(xr[j] - m) / z;
    }
    Tensor y = out;
    return make(std::move(out), {x}, [x, y, r, c](Node& self) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (size_t i = 0; i < r; ++i) {
            const double* yr = &y.data[i * c];
            const double* gr = &self.grad.data[i * c];
            double dot = 0.0;
            for (size_t j = 0; j < c; ++j) dot += yr[j] * gr[j];
            for (size_t j = 0; j < c; ++j)
                x->grad.data[i * c + j] += yr[j] * (gr[j] - dot);
        }
    });
}

NodePtr layer_norm(const NodePtr& x, const NodePtr& gamma, const NodePtr& beta, double eps) {
    size_t r = x->value.rows(), c = x->value.cols();
    if (gamma->value.size() != c || beta->value.size() != c)
        throw std::invalid_argument("layer_norm: gain/bias size mismatch");
    Tensor out({r, c});
    Tensor xhat({r, c});
    std::vector<double> inv_std(r);
    for (size_t i = 0; i < r; ++i) {
        const double* xr = &x->value.data[i * c];
        double mu = 0.0;
        for (size_t j = 0; j < c; ++j) mu += xr[j];
        mu /= double(c);
        double var = 0.0;
        for (size_t j = 0; j < c; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= double(c);
        double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (size_t j = 0; j < c; ++j) {
            double xh = (xr[j] - mu) * is;
            xhat.data[i * c + j] = xh;
            out.data[i * c + j] = xh * gamma->value.data[j] + beta->value.data[j];
        }
    }
    return make(std::move(out), {x, gamma, beta},
                [x, gamma, beta, xhat, inv_std, r, c](Node& self) {
                    if (gamma->requires_grad) gamma->ensure_grad();
                    if (beta->requires_grad) beta->ensure_grad();
                    if (x->requires_grad) x->ensure_grad();
                    for (size_t i = 0; i < r; ++i) {
                        const double* gr = &self.grad.data[i * c];
                        const double* xh = &xhat.data[i * c];
                        for (size_t j = 0; j < c; ++j) {
                            if (gamma->requires_grad) gamma->grad.data[j] += gr[j] * xh[j];
                            if (beta->requires_grad) beta->grad.data[j] += gr[j];
                        }
                        if (!x->requires_grad) continue;
                        double sum_g = 0.0, sum_gx = 0.0;
                        for (size_t j = 0; j < c; ++j) {
                            double gh = gr[j] * gamma->value.data[j];
                            sum_g += gh;
                            sum_gx += gh * xh[j];
                        }
                        for (size_t j = 0; j < c; ++j) {
                            double gh = gr[j] * gamma->value.data[j];
                            x->grad.data[i * c + j] +=
                                inv_std[i] *
                                (gh - sum_g / double(c) - xh[j] * sum_gx / double(c));
                        }
                    }
                });
}

NodePtr cols(const NodePtr& x, size_t start, size_t n) {
    size_t r = x->value.rows(), c = x->value.cols();
    if (start + n > c) throw std::invalid_argument("cols: slice out of range");
    Tensor out({r, n});
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < n; ++j) out.data[i * n + j] = x->value.data[i * c + start + j];
    return make(std::move(out), {x}, [x, start, n, r, c](Node& self) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < n; ++j)
                x->grad.data[i * c + start + j] += self.grad.data[i * n + j];
    });
}

NodePtr rows_range(const NodePtr& x, size_t start, size_t n) {
    size_t c = x->value.cols();
    if (start + n > x->value.rows())
        throw std::invalid_argument("rows_range: slice out of range");
    Tensor out({n, c});
    std::copy_n(&x->value.data[start * c], n * c, out.data.begin());
    return make(std::move(out), {x}, [x, start, n, c](Node& self) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (size_t i = 0; i < n * c; ++i)
            x->grad.data[start * c + i] += self.grad.data[i];
    });
}

NodePtr concat_cols(const std::vector<NodePtr>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
    size_t r = parts[0]->value.rows();
    size_t c = 0;
    for (const auto& p : parts) {
        if (p->value.rows() != r) throw std::invalid_argument("concat_cols: row mismatch");
        c += p->value.cols();
    }
    Tensor out({r, c});
    size_t off = 0;
    for (const auto& p : parts) {
        size_t pc = p->value.cols();
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < pc; ++j)
                out.data[i * c + off + j] = p->value.data[i * pc + j];
        off += pc;
    }
    return make(std::move(out), parts, [parts, r, c](Node& self) {
        size_t off = 0;
        for (const auto& p : parts) {
            size_t pc = p->value.cols();
            if (p->requires_grad) {
                p->ensure_grad();
                for (size_t i = 0; i < r; ++i)
                    for (size_t j = 0; j < pc; ++j)
                        p->grad.data[i * pc + j] += self.grad.data[i * c + off + j];
            }
            off += pc;
        }
    });
}

NodePtr concat_rows(const std::vector<NodePtr>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
    size_t c = parts[0]->value.cols();
    size_t r = 0;
    for (const auto& p : parts) {
        if (p->value.cols() != c) throw std::invalid_argument("concat_rows: col mismatch");
        r += p->value.rows();
    }
    Tensor out({r, c});
    size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p->value.data.begin(), p->value.data.end(), out.data.begin() + off);
        off += p->value.size();
    }
    return make(std::move(out), parts, [parts](Node& self) {
        size_t off = 0;
        for (const auto& p : parts) {
            if (p->requires_grad) {
                p->ensure_grad();
                for (size_t i = 0; i < p->value.size(); ++i)
                    p->grad.data[i] += self.grad.data[off + i];
            }
            off += p->value.size();
        }
    });
}

NodePtr gather_rows(const NodePtr& table, const std::vector<int>& ids) {
    size_t c = table->value.cols();
    Tensor out({ids.size(), c});
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || size_t(ids[i]) >= table->value.rows())
            throw std::invalid_argument("gather_rows: id " + std::to_string(ids[i]) +
                                        " out of range");
        std::copy_n(&table->value.data[size_t(ids[i]) * c], c, &out.data[i * c]);
    }
    return make(std::move(out), {table}, [table, ids, c](Node& self) {
        if (!table->requires_grad) return;
        table->ensure_grad();
        for (size_t i = 0; i < ids.size(); ++i)
            for (size_t j = 0; j < c; ++j)
                table->grad.data[size_t(ids[i]) * c + j] += self.grad.data[i * c + j];
    });
}

NodePtr scatter_rows(const NodePtr& base, const NodePtr& src,
                     const std::vector<size_t>& positions) {
    size_t c = base->value.cols();
    if (src->value.cols() != c || src->value.rows() != positions.size())
        throw std::invalid_argument("scatter_rows: shape mismatch");
    Tensor out = base->value;
    for (size_t i = 0; i < positions.size(); ++i) {
        if (positions[i] >= base->value.rows())
            throw std::invalid_argument("scatter_rows: position out of range");
        std::copy_n(&src->value.data[i * c], c, &out.data[positions[i] * c]);
    }
    return make(std::move(out), {base, src}, [base, src, positions, c](Node& self) {
        if (base->requires_grad) {
            base->ensure_grad();
            std::vector<char> replaced(base->value.rows(), 0);
            for (size_t p : positions) replaced[p] = 1;
            for (size_t i = 0; i < base->value.rows(); ++i) {
                if (replaced[i]) continue;
                for (size_t j = 0; j < c; ++j)
                    base->grad.data[i * c + j] += self.grad.data[i * c + j];
            }
        }
        if (src->requires_grad) {
            src->ensure_grad();
            for (size_t i = 0; i < positions.size(); ++i)
                for (size_t j = 0; j < c; ++j)
                    src->grad.data[i * c + j] += self.grad.data[positions[i] * c + j];
        }
    });
}

NodePtr sum_all(const NodePtr& x) {
    double s = 0.0;
    for (double v : x->value.data) s += v;
    return make(Tensor::scalar(s), {x}, [x](Node& self) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        double g = self.grad.data[0];
        for (double& v : x->grad.data) v += g;
    });
}

NodePtr mean_all(const NodePtr& x) {
    return scale(sum_all(x), 1.0 / double(std::max<size_t>(1, x->value.size())));
}

NodePtr cross_entropy_logits(const NodePtr& logits, const std::vector<int>& targets,
                             int ignore_index) {
    size_t L = logits->value.rows(), V = logits->value.cols();
    if (targets.size() != L)
        throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for " + std::to_string(L) + " rows");
    size_t cnt = 0;
    double loss = 0.0;
    for (size_t i = 0; i < L; ++i) {
        int t = targets[i];
        if (t == ignore_index) continue;
        if (t < 0 || size_t(t) >= V)
            throw std::invalid_argument("cross_entropy: target " + std::to_string(t) +
                                        " out of vocabulary " + std::to_string(V));
        const double* lr = &logits->value.data[i * V];
        double m = lr[0];
        for (size_t j = 1; j < V; ++j) m = std::max(m, lr[j]);
        double z = 0.0;
        for (size_t j = 0; j < V; ++j) z += std::exp(lr[j] - m);
        loss += m + std::log(z) - lr[size_t(t)];
        ++cnt;
    }
    if (cnt == 0) return make(Tensor::scalar(0.0), {logits}, [](Node&) {});
    loss /= double(cnt);
    return make(Tensor::scalar(loss), {logits},
                [logits, targets, ignore_index, L, V, cnt](Node& self) {
                    if (!logits->requires_grad) return;
                    logits->ensure_grad();
                    double g = self.grad.data[0] / double(cnt);
                    for (size_t i = 0; i < L; ++i) {
                        int t = targets[i];
                        if (t == ignore_index) continue;
                        const double* lr = &logits->value.data[i * V];
                        double m = lr[0];
                        for (size_t j = 1; j < V; ++j) m = std::max(m, lr[j]);
                        double z = 0.0;
                        for (size_t j = 0; j < V; ++j) z += std::exp(lr[j] - m);
                        for (size_t j = 0; j < V; ++j) {
                            double p = std::exp(lr[j] - m) / z;
                            logits->grad.data[i * V + j] +=
                                g * (p - (j == size_t(t) ? 1.0 : 0.0));
                        }
                    }
                });
}

void backward(const NodePtr& root) {
    if (!root->requires_grad) return;
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<NodePtr, size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root.get());
    // Iterative post-order DFS.
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            NodePtr p = n->parents[idx++];
            if (p->requires_grad && p->backprop && !seen.count(p.get())) {
                seen.insert(p.get());
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n.get());
            stack.pop_back();
        }
    }
    root->ensure_grad();
    for (double& v : root->grad.data) v = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && !n->grad.data.empty()) n->backprop(*n);
    }
}

}  // namespace seaco::ag
