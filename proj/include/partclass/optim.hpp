#pragma once

#include <functional>
#include <string>
#include <vector>

#include "partclass/tensor.hpp"

namespace partclass::nd {

// A trainable tensor with its stable checkpoint name.
struct NamedTensor {
    std::string name;
    Tensor* tensor = nullptr;
};

struct SgdConfig {
    double lr = 1e-2;
    double momentum = 0.0;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class SgdOptimizer {
  public:
    SgdOptimizer(std::vector<NamedTensor> params, SgdConfig cfg);
    void step(const std::vector<Tensor>& grads);
    void set_lr(double lr) { cfg_.lr = lr; }
    double lr() const { return cfg_.lr; }

  private:
    std::vector<NamedTensor> params_;
    std::vector<Tensor> velocity_;
    SgdConfig cfg_;
};

class AdamOptimizer {
  public:
    AdamOptimizer(std::vector<NamedTensor> params, AdamConfig cfg);
    // Bias-corrected Adam update; step count t starts at 1.
    void step(const std::vector<Tensor>& grads);
    std::uint64_t steps_taken() const { return t_; }
    void set_lr(double lr) { cfg_.lr = lr; }
    double lr() const { return cfg_.lr; }

  private:
    std::vector<NamedTensor> params_;
    std::vector<Tensor> m_, v_;
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
};

// Central finite-difference gradient check.
//
// For each parameter coordinate the loss is evaluated at +/-h and +/-h/1
// one-sided estimates are compared; coordinates where forward and backward
// differences disagree sit on a kink (ReLU boundary, max-pool tie) and are
// reported as non-differentiable rather than failed.
struct GradCheckParam {
    std::string name;
    double max_rel_err = 0.0;   // over smooth coordinates
    std::size_t kink_count = 0; // coordinates flagged non-differentiable
};

struct GradCheckReport {
    std::vector<GradCheckParam> params;
    double max_rel_err = 0.0;
    std::size_t total_kinks = 0;
    bool passed(double tolerance) const { return max_rel_err < tolerance; }
    std::string to_string() const;
};

// `loss` re-evaluates the model end to end at the current parameter values
// (restoring any internal state it touches); `analytic` holds d(loss)/d(param)
// in the same order as `params`, computed once by the caller.
GradCheckReport gradcheck(const std::vector<NamedTensor>& params,
                          const std::vector<Tensor>& analytic,
                          const std::function<double()>& loss, double step = 1e-5);

}  // namespace partclass::nd
