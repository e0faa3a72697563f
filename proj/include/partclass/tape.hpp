#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "partclass/graph_build.hpp"
#include "partclass/rng.hpp"
#include "partclass/tensor.hpp"

namespace partclass::nd {

// Running batchnorm statistics; owned by the model, updated as a side effect
// of training-mode forwards with momentum 0.9 and read back in inference.
struct BatchNormState {
    Tensor running_mean;  // [d]
    Tensor running_var;   // [d], population (1/N) variance
    double momentum = 0.9;
    double eps = 1e-5;

    static BatchNormState make(std::size_t d);
};

// Reverse-mode tape. Every op records its parents and a backward closure;
// insertion order is a topological order, so backward() is a single reverse
// sweep that visits each node exactly once. One backward per tape.
//
// All kernels reduce sequentially in row-major index order, which makes
// results bit-deterministic for a given input.
class Tape {
  public:
    using Id = std::uint32_t;

    // Differentiable leaf borrowing external storage. The referenced tensor
    // must outlive the tape (model parameters, prepared inputs). Borrowing
    // the same tensor again returns the same node, so callers can look up
    // parameter gradients by tensor identity after backward().
    Id leaf(const Tensor& external);
    // Differentiable leaf owned by the tape.
    Id leaf_owned(Tensor value);
    // Node id of a previously borrowed leaf (DetachedTensor if it never
    // entered this tape).
    Id leaf_id_of(const Tensor& external) const;

    const Tensor& value(Id id) const;
    // Gradient of the loss w.r.t. node id; valid only after backward().
    // Zero for leaves the loss never touched.
    const Tensor& grad(Id id);

    // a[m x k] * b[k x n] -> [m x n]
    Id matmul(Id a, Id b);
    // x[k] * w[k x n] -> [n] (row vector through a dense layer)
    Id vecmat(Id x, Id w);
    // Same-shape elementwise sum / product.
    Id add(Id a, Id b);
    Id mul(Id a, Id b);
    // x[n x d] + bias[d] broadcast over rows.
    Id add_bias_rows(Id x, Id bias);
    Id scale(Id x, double factor);
    Id relu(Id x);
    // Inverted dropout: keep with probability 1-p and scale by 1/(1-p);
    // identity when not training. p in [0,1).
    Id dropout(Id x, double p, Rng& rng, bool training);
    // Per-feature batch normalization over the rows of x[n x d], with an
    // optional per-row weight w_i (row i stands for w_i identical copies;
    // weight 0 normalizes the row without counting it in the statistics).
    // Training mode uses batch statistics and updates `state`; inference
    // applies running statistics pointwise.
    Id batchnorm(Id x, Id gamma, Id beta, BatchNormState& state, bool training,
                 const std::vector<double>* row_weight = nullptr);
    // Pre-activation graph convolution: out[i] = b + sum_{j in N(i)} (1/c_ij) h[j] W.
    // Self-loops are part of the edge set, so j = i is included.
    Id graph_conv(const Graph& graph, const NormCoeff& coeffs, Id h, Id w, Id b);
    // Column-wise max / mean over rows of h[n x d]; mask (when given) marks
    // valid rows. Max gradient routes to the first argmax row in index order.
    Id readout_max(Id h, const std::vector<std::uint8_t>* mask = nullptr);
    Id readout_mean(Id h, const std::vector<std::uint8_t>* mask = nullptr);
    // Row-major flatten of x[n x d] zero-padded to [max_rows * d].
    Id flatten_pad(Id x, std::size_t max_rows);
    // Rows of x[n x d] zero-padded to [max_rows x d].
    Id pad_rows(Id x, std::size_t max_rows);
    Id reshape(Id x, std::vector<std::size_t> shape);
    // Copy of rows [begin, begin+count) of x.
    Id rows_slice(Id x, std::size_t begin, std::size_t count);
    // Stack matrices with equal column counts on top of each other.
    Id concat_rows(const std::vector<Id>& blocks);
    // Max-shifted softmax over a vector [c].
    Id softmax(Id x);
    // -log softmax(logits)[label] via log-sum-exp; scalar [1].
    Id cross_entropy(Id logits, std::size_t label);
    Id sum(Id x);  // scalar [1]

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. loss must be
    // a scalar.
    void backward(Id loss);

    std::size_t node_count() const { return nodes_.size(); }

  private:
    struct TapeNode {
        Tensor owned_value;
        const Tensor* external = nullptr;  // set for borrowed leaves
        Tensor gradient;
        bool grad_ready = false;
        std::function<void()> backprop;  // empty for leaves
    };

    std::vector<TapeNode> nodes_;
    std::unordered_map<const Tensor*, Id> external_ids_;
    bool backward_done_ = false;

    Id push(Tensor value, std::function<void()> backprop);
    const Tensor& val(Id id) const { return nodes_[id].external ? *nodes_[id].external : nodes_[id].owned_value; }
    Tensor& grad_slot(Id id);
    void check_id(Id id) const;
};

}  // namespace partclass::nd
