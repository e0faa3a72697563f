#include "partclass/optim.hpp"

#include <cmath>
#include <cstdio>

#include "partclass/error.hpp"

namespace partclass::nd {

namespace {
void check_grads(const std::vector<NamedTensor>& params, const std::vector<Tensor>& grads) {
    if (grads.size() != params.size())
        fail(errc::detached_tensor, "gradient list does not match parameter list");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (!params[i].tensor->same_shape(grads[i]))
            fail(errc::detached_tensor, "gradient shape mismatch for " + params[i].name);
}
}  // namespace

SgdOptimizer::SgdOptimizer(std::vector<NamedTensor> params, SgdConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    velocity_.reserve(params_.size());
    for (const auto& p : params_) velocity_.emplace_back(p.tensor->shape());
}

void SgdOptimizer::step(const std::vector<Tensor>& grads) {
    check_grads(params_, grads);
    for (std::size_t p = 0; p < params_.size(); ++p) {
        Tensor& w = *params_[p].tensor;
        Tensor& vel = velocity_[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            vel[i] = cfg_.momentum * vel[i] + grads[p][i];
            w[i] -= cfg_.lr * vel[i];
        }
    }
}

AdamOptimizer::AdamOptimizer(std::vector<NamedTensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor->shape());
        v_.emplace_back(p.tensor->shape());
    }
}

void AdamOptimizer::step(const std::vector<Tensor>& grads) {
    check_grads(params_, grads);
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        Tensor& w = *params_[p].tensor;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double g = grads[p][i];
            m_[p][i] = cfg_.beta1 * m_[p][i] + (1.0 - cfg_.beta1) * g;
            v_[p][i] = cfg_.beta2 * v_[p][i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[p][i] / bc1;
            const double vhat = v_[p][i] / bc2;
            w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

std::string GradCheckReport::to_string() const {
    std::string out;
    char line[160];
    for (const auto& p : params) {
        std::snprintf(line, sizeof(line), "%-24s max rel err %.3e%s\n", p.name.c_str(),
                      p.max_rel_err,
                      p.kink_count ? (" (" + std::to_string(p.kink_count) + " at kinks)").c_str()
                                   : "");
        out += line;
    }
    std::snprintf(line, sizeof(line), "overall max rel err %.3e, %zu kink coordinate(s)\n",
                  max_rel_err, total_kinks);
    out += line;
    return out;
}

GradCheckReport gradcheck(const std::vector<NamedTensor>& params,
                          const std::vector<Tensor>& analytic,
                          const std::function<double()>& loss, double step) {
    check_grads(params, analytic);
    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        GradCheckParam entry;
        entry.name = params[p].name;
        Tensor& w = *params[p].tensor;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double saved = w[i];
            w[i] = saved + step;
            const double fp = loss();
            w[i] = saved - step;
            const double fm = loss();
            w[i] = saved;
            const double f0 = loss();

            const double central = (fp - fm) / (2.0 * step);
            const double fwd = (fp - f0) / step;
            const double bwd = (f0 - fm) / step;
            // One-sided estimates disagreeing by more than curvature could
            // explain means the interval straddles a kink.
            const double gap = std::abs(fwd - bwd) /
                               std::max({1.0, std::abs(fwd), std::abs(bwd)});
            if (gap > 1e-2) {
                ++entry.kink_count;
                continue;
            }
            const double a = analytic[p][i];
            const double rel =
                std::abs(central - a) / std::max({1.0, std::abs(central), std::abs(a)});
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.total_kinks += entry.kink_count;
        report.params.push_back(std::move(entry));
    }
    return report;
}

}  // namespace partclass::nd
