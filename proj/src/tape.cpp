#include "partclass/tape.hpp"

#include <algorithm>
#include <cmath>

#include "partclass/error.hpp"

namespace partclass::nd {

namespace {

// c[m x n] += a[m x k] * b[k x n]
void mm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// da[m x k] += g[m x n] * b^T  (b is [k x n])
void mm_abt_acc(const double* g, const double* b, double* da, std::size_t m, std::size_t k,
                std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        double* darow = da + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double* brow = b + kk * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            darow[kk] += acc;
        }
    }
}

// db[k x n] += a^T * g  (a is [m x k], g is [m x n])
void mm_atb_acc(const double* a, const double* g, double* db, std::size_t m, std::size_t k,
                std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* grow = g + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            double* dbrow = db + kk * n;
            for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * grow[j];
        }
    }
}

}  // namespace

BatchNormState BatchNormState::make(std::size_t d) {
    BatchNormState s;
    s.running_mean = Tensor({d});
    s.running_var = Tensor::full({d}, 1.0);
    return s;
}

Tape::Id Tape::push(Tensor value, std::function<void()> backprop) {
    TapeNode node;
    node.owned_value = std::move(value);
    node.backprop = std::move(backprop);
    nodes_.push_back(std::move(node));
    return static_cast<Id>(nodes_.size() - 1);
}

void Tape::check_id(Id id) const {
    if (id >= nodes_.size()) fail(errc::detached_tensor, "tensor id not on this tape");
}

Tensor& Tape::grad_slot(Id id) {
    TapeNode& node = nodes_[id];
    if (!node.grad_ready) {
        node.gradient = Tensor(val(id).shape());
        node.grad_ready = true;
    }
    return node.gradient;
}

Tape::Id Tape::leaf(const Tensor& external) {
    const auto it = external_ids_.find(&external);
    if (it != external_ids_.end()) return it->second;
    TapeNode node;
    node.external = &external;
    nodes_.push_back(std::move(node));
    const Id id = static_cast<Id>(nodes_.size() - 1);
    external_ids_.emplace(&external, id);
    return id;
}

Tape::Id Tape::leaf_owned(Tensor value) { return push(std::move(value), {}); }

Tape::Id Tape::leaf_id_of(const Tensor& external) const {
    const auto it = external_ids_.find(&external);
    if (it == external_ids_.end())
        fail(errc::detached_tensor, "tensor was never borrowed onto this tape");
    return it->second;
}

const Tensor& Tape::value(Id id) const {
    check_id(id);
    return val(id);
}

const Tensor& Tape::grad(Id id) {
    check_id(id);
    if (!backward_done_) fail(errc::detached_tensor, "grad read before backward()");
    return grad_slot(id);
}

Tape::Id Tape::matmul(Id a, Id b) {
    check_id(a);
    check_id(b);
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
        fail(errc::shape_mismatch, "matmul " + av.shape_string() + " * " + bv.shape_string());
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor out({m, n});
    mm_acc(av.data(), bv.data(), out.data(), m, k, n);
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, a, b, id, m, k, n]() {
        const Tensor& g = nodes_[id].gradient;
        mm_abt_acc(g.data(), val(b).data(), grad_slot(a).data(), m, k, n);
        mm_atb_acc(val(a).data(), g.data(), grad_slot(b).data(), m, k, n);
    };
    return id;
}

Tape::Id Tape::vecmat(Id x, Id w) {
    check_id(x);
    check_id(w);
    const Tensor& xv = val(x);
    const Tensor& wv = val(w);
    if (xv.rank() != 1 || wv.rank() != 2 || xv.dim(0) != wv.dim(0))
        fail(errc::shape_mismatch, "vecmat " + xv.shape_string() + " * " + wv.shape_string());
    const std::size_t k = wv.dim(0), n = wv.dim(1);
    Tensor out({n});
    mm_acc(xv.data(), wv.data(), out.data(), 1, k, n);
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, x, w, id, k, n]() {
        const Tensor& g = nodes_[id].gradient;
        mm_abt_acc(g.data(), val(w).data(), grad_slot(x).data(), 1, k, n);
        mm_atb_acc(val(x).data(), g.data(), grad_slot(w).data(), 1, k, n);
    };
    return id;
}

Tape::Id Tape::add(Id a, Id b) {
    check_id(a);
    check_id(b);
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    if (!av.same_shape(bv))
        fail(errc::shape_mismatch, "add " + av.shape_string() + " + " + bv.shape_string());
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, a, b, id]() {
        const Tensor& g = nodes_[id].gradient;
        Tensor& da = grad_slot(a);
        Tensor& db = grad_slot(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] += g[i];
            db[i] += g[i];
        }
    };
    return id;
}

Tape::Id Tape::mul(Id a, Id b) {
    check_id(a);
    check_id(b);
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    if (!av.same_shape(bv))
        fail(errc::shape_mismatch, "mul " + av.shape_string() + " * " + bv.shape_string());
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, a, b, id]() {
        const Tensor& g = nodes_[id].gradient;
        const Tensor& av2 = val(a);
        const Tensor& bv2 = val(b);
        Tensor& da = grad_slot(a);
        Tensor& db = grad_slot(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] += g[i] * bv2[i];
            db[i] += g[i] * av2[i];
        }
    };
    return id;
}

Tape::Id Tape::add_bias_rows(Id x, Id bias) {
    check_id(x);
    check_id(bias);
    const Tensor& xv = val(x);
    const Tensor& bv = val(bias);
    if (xv.rank() != 2 || bv.rank() != 1 || bv.dim(0) != xv.dim(1))
        fail(errc::shape_mismatch, "bias " + bv.shape_string() + " onto " + xv.shape_string());
    const std::size_t n = xv.dim(0), d = xv.dim(1);
    Tensor out({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) = xv(i, j) + bv[j];
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, x, bias, id, n, d]() {
        const Tensor& g = nodes_[id].gradient;
        Tensor& dx = grad_slot(x);
        Tensor& db = grad_slot(bias);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                dx[i * d + j] += g[i * d + j];
                db[j] += g[i * d + j];
            }
    };
    return id;
}

Tape::Id Tape::scale(Id x, double factor) {
    check_id(x);
    const Tensor& xv = val(x);
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, x, id, factor]() {
        const Tensor& g = nodes_[id].gradient;
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * factor;
    };
    return id;
}

Tape::Id Tape::relu(Id x) {
    check_id(x);
    const Tensor& xv = val(x);
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    const Id id = push(std::move(out), {});
    // Subgradient 0 at exactly 0.
    nodes_[id].backprop = [this, x, id]() {
        const Tensor& g = nodes_[id].gradient;
        const Tensor& xv2 = val(x);
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xv2[i] > 0.0) dx[i] += g[i];
    };
    return id;
}

Tape::Id Tape::dropout(Id x, double p, Rng& rng, bool training) {
    check_id(x);
    if (p < 0.0 || p >= 1.0)
        fail(errc::invalid_probability, "dropout p must be in [0,1), got " + std::to_string(p));
    const Tensor& xv = val(x);
    if (!training || p == 0.0) {
        // Identity; no rng draws consumed.
        Tensor out(xv.shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i];
        const Id id = push(std::move(out), {});
        nodes_[id].backprop = [this, x, id]() {
            const Tensor& g = nodes_[id].gradient;
            Tensor& dx = grad_slot(x);
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
        };
        return id;
    }
    const double keep_scale = 1.0 / (1.0 - p);
    auto mask = std::make_shared<std::vector<double>>(xv.size());
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double m = rng.uniform() >= p ? keep_scale : 0.0;
        (*mask)[i] = m;
        out[i] = xv[i] * m;
    }
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, x, id, mask]() {
        const Tensor& g = nodes_[id].gradient;
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (*mask)[i];
    };
    return id;
}

Tape::Id Tape::batchnorm(Id x, Id gamma, Id beta, BatchNormState& state, bool training,
                         const std::vector<double>* row_weight) {
    check_id(x);
    check_id(gamma);
    check_id(beta);
    const Tensor& xv = val(x);
    if (xv.rank() != 2) fail(errc::shape_mismatch, "batchnorm input must be 2-D");
    const std::size_t n = xv.dim(0), d = xv.dim(1);
    const Tensor& gv = val(gamma);
    const Tensor& bv = val(beta);
    if (gv.rank() != 1 || gv.dim(0) != d || bv.rank() != 1 || bv.dim(0) != d)
        fail(errc::shape_mismatch, "batchnorm gamma/beta must be [" + std::to_string(d) + "]");
    if (state.running_mean.size() != d || state.running_var.size() != d)
        fail(errc::shape_mismatch, "batchnorm running stats size mismatch");
    if (row_weight && row_weight->size() != n)
        fail(errc::shape_mismatch, "batchnorm row weights must match row count");

    if (!training) {
        // Pointwise affine through the running statistics.
        auto inv_sigma = std::make_shared<std::vector<double>>(d);
        auto xhat = std::make_shared<Tensor>(Tensor({n, d}));
        Tensor out({n, d});
        for (std::size_t j = 0; j < d; ++j)
            (*inv_sigma)[j] = 1.0 / std::sqrt(state.running_var[j] + state.eps);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double h = (xv(i, j) - state.running_mean[j]) * (*inv_sigma)[j];
                (*xhat)(i, j) = h;
                out(i, j) = gv[j] * h + bv[j];
            }
        const Id id = push(std::move(out), {});
        nodes_[id].backprop = [this, x, gamma, beta, id, n, d, inv_sigma, xhat]() {
            const Tensor& g = nodes_[id].gradient;
            const Tensor& gv2 = val(gamma);
            Tensor& dx = grad_slot(x);
            Tensor& dgamma = grad_slot(gamma);
            Tensor& dbeta = grad_slot(beta);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    const double gij = g(i, j);
                    dx[i * d + j] += gij * gv2[j] * (*inv_sigma)[j];
                    dgamma[j] += gij * (*xhat)(i, j);
                    dbeta[j] += gij;
                }
        };
        return id;
    }

    // Training: weighted batch statistics. Row i stands for w_i identical
    // rows, so sums weight by w_i while the incoming gradient per row is
    // already the aggregate over those copies. Weight 0 marks a row that is
    // normalized by the batch statistics without contributing to them.
    double total_weight = 0.0;
    if (row_weight) {
        for (const double w : *row_weight) {
            if (w < 0.0) fail(errc::invalid_batch, "batchnorm row weight must be >= 0");
            total_weight += w;
        }
    } else {
        total_weight = static_cast<double>(n);
    }
    if (total_weight < 2.0)
        fail(errc::invalid_batch, "batchnorm in training mode needs an effective batch of >= 2");

    auto weights = std::make_shared<std::vector<double>>();
    if (row_weight) *weights = *row_weight;

    std::vector<double> mu(d, 0.0), var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = row_weight ? (*row_weight)[i] : 1.0;
        for (std::size_t j = 0; j < d; ++j) mu[j] += w * xv(i, j);
    }
    for (std::size_t j = 0; j < d; ++j) mu[j] /= total_weight;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = row_weight ? (*row_weight)[i] : 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = xv(i, j) - mu[j];
            var[j] += w * c * c;
        }
    }
    for (std::size_t j = 0; j < d; ++j) var[j] /= total_weight;

    for (std::size_t j = 0; j < d; ++j) {
        state.running_mean[j] = state.momentum * state.running_mean[j] + (1.0 - state.momentum) * mu[j];
        state.running_var[j] = state.momentum * state.running_var[j] + (1.0 - state.momentum) * var[j];
    }

    auto inv_sigma = std::make_shared<std::vector<double>>(d);
    auto xhat = std::make_shared<Tensor>(Tensor({n, d}));
    Tensor out({n, d});
    for (std::size_t j = 0; j < d; ++j) (*inv_sigma)[j] = 1.0 / std::sqrt(var[j] + state.eps);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xv(i, j) - mu[j]) * (*inv_sigma)[j];
            (*xhat)(i, j) = h;
            out(i, j) = gv[j] * h + bv[j];
        }

    const Id id = push(std::move(out), {});
    const double inv_total = 1.0 / total_weight;
    nodes_[id].backprop = [this, x, gamma, beta, id, n, d, inv_sigma, xhat, weights, inv_total]() {
        const Tensor& g = nodes_[id].gradient;
        const Tensor& gv2 = val(gamma);
        Tensor& dx = grad_slot(x);
        Tensor& dgamma = grad_slot(gamma);
        Tensor& dbeta = grad_slot(beta);
        std::vector<double> s1(d, 0.0), s2(d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                s1[j] += g(i, j);
                s2[j] += g(i, j) * (*xhat)(i, j);
            }
        for (std::size_t j = 0; j < d; ++j) {
            dgamma[j] += s2[j];
            dbeta[j] += s1[j];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double w = weights->empty() ? 1.0 : (*weights)[i];
            for (std::size_t j = 0; j < d; ++j) {
                const double term =
                    g(i, j) - w * inv_total * (s1[j] + (*xhat)(i, j) * s2[j]);
                dx[i * d + j] += gv2[j] * (*inv_sigma)[j] * term;
            }
        }
    };
    return id;
}

Tape::Id Tape::graph_conv(const Graph& graph, const NormCoeff& coeffs, Id h, Id w, Id b) {
    check_id(h);
    const Tensor& hv = val(h);
    if (hv.rank() != 2 || hv.dim(0) != graph.n_nodes)
        fail(errc::shape_mismatch, "graph_conv features " + hv.shape_string() + " for " +
                                       std::to_string(graph.n_nodes) + " nodes");
    if (coeffs.coeff.size() != graph.edges.size())
        fail(errc::coeff_graph_mismatch,
             "coefficient count " + std::to_string(coeffs.coeff.size()) + " != edge count " +
                 std::to_string(graph.edges.size()));

    const Id msg = matmul(h, w);
    const std::size_t n = graph.n_nodes, d = val(msg).dim(1);

    // out[i] = sum_j A_ij msg[j] with A_ij = 1/c_ij; A is symmetric, so the
    // backward pass is the same edge sweep applied to the gradient.
    auto aggregate = [&graph, &coeffs, n, d](const Tensor& src, Tensor& dst) {
        for (std::size_t e = 0; e < graph.edges.size(); ++e) {
            const auto [a, bn] = graph.edges[e];
            const double inv_c = 1.0 / coeffs.coeff[e];
            const double* srow = src.data() + bn * d;
            double* drow = dst.data() + a * d;
            for (std::size_t j = 0; j < d; ++j) drow[j] += inv_c * srow[j];
            if (a != bn) {
                const double* srow2 = src.data() + a * d;
                double* drow2 = dst.data() + bn * d;
                for (std::size_t j = 0; j < d; ++j) drow2[j] += inv_c * srow2[j];
            }
        }
    };

    Tensor out({n, d});
    aggregate(val(msg), out);
    const Id agg = push(std::move(out), {});
    nodes_[agg].backprop = [this, msg, agg, aggregate]() {
        const Tensor& g = nodes_[agg].gradient;
        aggregate(g, grad_slot(msg));
    };
    return add_bias_rows(agg, b);
}

Tape::Id Tape::readout_max(Id h, const std::vector<std::uint8_t>* mask) {
    check_id(h);
    const Tensor& hv = val(h);
    if (hv.rank() != 2) fail(errc::shape_mismatch, "readout over non-matrix");
    const std::size_t n = hv.dim(0), d = hv.dim(1);
    if (mask && mask->size() != n) fail(errc::shape_mismatch, "mask length != row count");
    bool any = false;
    for (std::size_t i = 0; i < n && !any; ++i) any = !mask || (*mask)[i];
    if (n == 0 || !any) fail(errc::empty_mask, "readout needs at least one valid row");

    auto argmax = std::make_shared<std::vector<std::size_t>>(d);
    Tensor out({d});
    bool first = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && !(*mask)[i]) continue;
        for (std::size_t j = 0; j < d; ++j) {
            if (first || hv(i, j) > out[j]) {
                out[j] = hv(i, j);
                (*argmax)[j] = i;
            }
        }
        first = false;
    }
    const Id id = push(std::move(out), {});
    // Ties route to the first argmax row in index order.
    nodes_[id].backprop = [this, h, id, argmax, d]() {
        const Tensor& g = nodes_[id].gradient;
        Tensor& dh = grad_slot(h);
        const std::size_t cols = d;
        for (std::size_t j = 0; j < cols; ++j) dh[(*argmax)[j] * cols + j] += g[j];
    };
    return id;
}

Tape::Id Tape::readout_mean(Id h, const std::vector<std::uint8_t>* mask) {
    check_id(h);
    const Tensor& hv = val(h);
    if (hv.rank() != 2) fail(errc::shape_mismatch, "readout over non-matrix");
    const std::size_t n = hv.dim(0), d = hv.dim(1);
    if (mask && mask->size() != n) fail(errc::shape_mismatch, "mask length != row count");
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (!mask || (*mask)[i]) ++count;
    if (count == 0) fail(errc::empty_mask, "readout needs at least one valid row");

    Tensor out({d});
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && !(*mask)[i]) continue;
        for (std::size_t j = 0; j < d; ++j) out[j] += hv(i, j);
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t j = 0; j < d; ++j) out[j] *= inv;

    auto valid = std::make_shared<std::vector<std::uint8_t>>();
    if (mask) *valid = *mask;
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, h, id, valid, n, d, inv]() {
        const Tensor& g = nodes_[id].gradient;
        Tensor& dh = grad_slot(h);
        for (std::size_t i = 0; i < n; ++i) {
            if (!valid->empty() && !(*valid)[i]) continue;
            for (std::size_t j = 0; j < d; ++j) dh[i * d + j] += g[j] * inv;
        }
    };
    return id;
}

Tape::Id Tape::flatten_pad(Id x, std::size_t max_rows) {
    check_id(x);
    const Tensor& xv = val(x);
    if (xv.rank() != 2) fail(errc::shape_mismatch, "flatten_pad expects a matrix");
    const std::size_t n = xv.dim(0), d = xv.dim(1);
    if (n > max_rows)
        fail(errc::shape_mismatch,
             "flatten_pad: " + std::to_string(n) + " rows exceed " + std::to_string(max_rows));
    Tensor out({max_rows * d});
    for (std::size_t i = 0; i < n * d; ++i) out[i] = xv[i];
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, x, id, n, d]() {
        const Tensor& g = nodes_[id].gradient;
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < n * d; ++i) dx[i] += g[i];
    };
    return id;
}

Tape::Id Tape::pad_rows(Id x, std::size_t max_rows) {
    const Id flat = flatten_pad(x, max_rows);
    return reshape(flat, {max_rows, val(x).dim(1)});
}

Tape::Id Tape::reshape(Id x, std::vector<std::size_t> shape) {
    check_id(x);
    const Tensor& xv = val(x);
    std::size_t total = 1;
    for (const std::size_t s : shape) total *= s;
    if (total != xv.size())
        fail(errc::shape_mismatch, "reshape " + xv.shape_string() + " to incompatible size");
    Tensor out(shape);
    for (std::size_t i = 0; i < total; ++i) out[i] = xv[i];
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, x, id]() {
        const Tensor& g = nodes_[id].gradient;
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    };
    return id;
}

Tape::Id Tape::rows_slice(Id x, std::size_t begin, std::size_t count) {
    check_id(x);
    const Tensor& xv = val(x);
    if (xv.rank() != 2 || begin + count > xv.dim(0))
        fail(errc::shape_mismatch, "rows_slice [" + std::to_string(begin) + "," +
                                       std::to_string(begin + count) + ") of " +
                                       xv.shape_string());
    const std::size_t d = xv.dim(1);
    Tensor out({count, d});
    for (std::size_t i = 0; i < count * d; ++i) out[i] = xv[begin * d + i];
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, x, id, begin, count, d]() {
        const Tensor& g = nodes_[id].gradient;
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < count * d; ++i) dx[begin * d + i] += g[i];
    };
    return id;
}

Tape::Id Tape::concat_rows(const std::vector<Id>& blocks) {
    if (blocks.empty()) fail(errc::shape_mismatch, "concat_rows of nothing");
    std::size_t rows = 0;
    const std::size_t d = val(blocks[0]).dim(1);
    for (const Id b : blocks) {
        check_id(b);
        if (val(b).rank() != 2 || val(b).dim(1) != d)
            fail(errc::shape_mismatch, "concat_rows column mismatch");
        rows += val(b).dim(0);
    }
    Tensor out({rows, d});
    std::size_t at = 0;
    for (const Id b : blocks) {
        const Tensor& bv = val(b);
        for (std::size_t i = 0; i < bv.size(); ++i) out[at + i] = bv[i];
        at += bv.size();
    }
    auto parts = std::make_shared<std::vector<Id>>(blocks);
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, id, parts]() {
        const Tensor& g = nodes_[id].gradient;
        std::size_t at = 0;
        for (const Id b : *parts) {
            Tensor& db = grad_slot(b);
            for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[at + i];
            at += db.size();
        }
    };
    return id;
}

Tape::Id Tape::softmax(Id x) {
    check_id(x);
    const Tensor& xv = val(x);
    if (xv.rank() != 1 || xv.size() == 0) fail(errc::shape_mismatch, "softmax expects a vector");
    double mx = xv[0];
    for (std::size_t i = 1; i < xv.size(); ++i) mx = std::max(mx, xv[i]);
    Tensor out(xv.shape());
    double denom = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
        out[i] = std::exp(xv[i] - mx);
        denom += out[i];
    }
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] /= denom;
    const Id id = push(std::move(out), {});
    nodes_[id].backprop = [this, x, id]() {
        const Tensor& g = nodes_[id].gradient;
        const Tensor& y = nodes_[id].owned_value;
        Tensor& dx = grad_slot(x);
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += y[i] * (g[i] - dot);
    };
    return id;
}

Tape::Id Tape::cross_entropy(Id logits, std::size_t label) {
    check_id(logits);
    const Tensor& lv = val(logits);
    if (lv.rank() != 1 || lv.size() == 0) fail(errc::shape_mismatch, "cross_entropy expects logits vector");
    if (label >= lv.size())
        fail(errc::label_out_of_range,
             "label " + std::to_string(label) + " for " + std::to_string(lv.size()) + " classes");
    // Log-sum-exp; never through an explicit softmax.
    double mx = lv[0];
    for (std::size_t i = 1; i < lv.size(); ++i) mx = std::max(mx, lv[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) sum += std::exp(lv[i] - mx);
    const double lse = mx + std::log(sum);
    const Id id = push(Tensor::scalar(lse - lv[label]), {});
    nodes_[id].backprop = [this, logits, id, label, mx, sum]() {
        const double g = nodes_[id].gradient[0];
        const Tensor& lv2 = val(logits);
        Tensor& dl = grad_slot(logits);
        for (std::size_t i = 0; i < lv2.size(); ++i) {
            const double p = std::exp(lv2[i] - mx) / sum;
            dl[i] += g * (p - (i == label ? 1.0 : 0.0));
        }
    };
    return id;
}

Tape::Id Tape::sum(Id x) {
    check_id(x);
    const Tensor& xv = val(x);
    double s = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
    const Id id = push(Tensor::scalar(s), {});
    nodes_[id].backprop = [this, x, id]() {
        const double g = nodes_[id].gradient[0];
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
    };
    return id;
}

void Tape::backward(Id loss) {
    check_id(loss);
    if (backward_done_) fail(errc::detached_tensor, "backward already run on this tape");
    if (val(loss).size() != 1) fail(errc::shape_mismatch, "loss must be a scalar");
    grad_slot(loss)[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        TapeNode& node = nodes_[i];
        if (node.grad_ready && node.backprop) node.backprop();
    }
    backward_done_ = true;
}

}  // namespace partclass::nd
