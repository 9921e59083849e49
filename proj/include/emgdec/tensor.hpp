#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace emgdec {

// Shape-carrying double tensor participating in reverse-mode
// differentiation. Copies are shallow: they alias the same node.
class Tensor {
public:
    struct Node {
        std::vector<int> shape;
        std::vector<double> data;
        std::vector<double> grad;   // allocated lazily, same size as data
        bool requires_grad = false;
    };

    Tensor() = default;

    explicit Tensor(std::vector<int> shape, bool requires_grad = false)
        : node_(std::make_shared<Node>()) {
        node_->shape = std::move(shape);
        node_->data.assign(count(node_->shape), 0.0);
        node_->requires_grad = requires_grad;
    }

    static Tensor from(std::vector<int> shape, std::vector<double> values,
                       bool requires_grad = false) {
        Tensor t;
        t.node_ = std::make_shared<Node>();
        if (count(shape) != values.size())
            throw std::invalid_argument("Tensor::from: data length does not match shape");
        t.node_->shape = std::move(shape);
        t.node_->data = std::move(values);
        t.node_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return from({1}, {v}, requires_grad);
    }

    bool valid() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape.at(static_cast<size_t>(i)); }
    size_t numel() const { return node_->data.size(); }
    bool is_scalar() const { return numel() == 1; }

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }

    double value() const {
        if (!is_scalar()) throw std::logic_error("Tensor::value: not a scalar");
        return node_->data[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool f) { node_->requires_grad = f; }

    bool has_grad() const { return !node_->grad.empty(); }
    std::vector<double>& grad() {
        if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
        return node_->grad;
    }
    const std::vector<double>& grad() const { return node_->grad; }
    void zero_grad() { node_->grad.clear(); }

    std::shared_ptr<Node> node() const { return node_; }

    bool same_node(const Tensor& other) const { return node_ == other.node_; }

    static size_t count(const std::vector<int>& shape) {
        size_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw std::invalid_argument("Tensor: nonpositive dimension");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

private:
    std::shared_ptr<Node> node_;
};

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Ordered record of executed operations. Each op pushes a closure that
// propagates output grads to input grads; backward() replays them in
// reverse. One backward per forward: a second backward on the same tape
// throws until the tape is reset.
class Tape {
public:
    void record(std::function<void()> fn) { ops_.push_back(std::move(fn)); }

    size_t size() const { return ops_.size(); }

    void backward(Tensor& loss) {
        if (consumed_)
            throw std::logic_error("Tape::backward: tape already consumed; run a new forward pass");
        if (!loss.is_scalar())
            throw std::invalid_argument("Tape::backward: loss must be scalar");
        if (!std::isfinite(loss.value()))
            throw std::runtime_error("Tape::backward: non-finite loss");
        loss.grad()[0] = 1.0;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
        consumed_ = true;
    }

    void reset() {
        ops_.clear();
        consumed_ = false;
    }

private:
    std::vector<std::function<void()>> ops_;
    bool consumed_ = false;
};

// Checks output values for NaN/Inf as they come off an op.
inline void check_finite_forward(const Tensor& t, const char* op_name) {
    if (!all_finite(t.data()))
        throw std::runtime_error(std::string(op_name) + ": non-finite forward values");
}

struct GradCheckReport {
    double max_rel_err = 0.0;   // where |grad| >= small_threshold
    double max_abs_err = 0.0;   // where |grad| < small_threshold
    bool pass = false;
};

// Central finite differences against analytic grads. `f` builds a full
// forward pass over `params` on the given tape and returns the scalar
// loss; it must be deterministic.
inline GradCheckReport grad_check(const std::function<Tensor(Tape&)>& f,
                                  std::vector<Tensor> params,
                                  double eps = 1e-5, double tolerance = 1e-4,
                                  double small_threshold = 1e-4,
                                  double abs_tolerance = 1e-7) {
    for (auto& p : params) p.zero_grad();
    Tape tape;
    Tensor loss = f(tape);
    tape.backward(loss);
    std::vector<std::vector<double>> analytic_grads;
    for (auto& p : params)
        analytic_grads.push_back(p.has_grad() ? p.grad()
                                              : std::vector<double>(p.numel(), 0.0));
    GradCheckReport report;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        const std::vector<double>& analytic = analytic_grads[pi];
        for (size_t i = 0; i < p.numel(); ++i) {
            double saved = p.data()[i];
            p.data()[i] = saved + eps;
            Tape tp;
            double lp = f(tp).value();
            p.data()[i] = saved - eps;
            Tape tm;
            double lm = f(tm).value();
            p.data()[i] = saved;
            double fd = (lp - lm) / (2.0 * eps);
            double a = analytic[i];
            double mag = std::max(std::abs(a), std::abs(fd));
            if (mag < small_threshold) {
                report.max_abs_err = std::max(report.max_abs_err, std::abs(a - fd));
            } else {
                report.max_rel_err = std::max(report.max_rel_err, std::abs(a - fd) / mag);
            }
        }
    }
    report.pass = report.max_rel_err < tolerance && report.max_abs_err < abs_tolerance;
    return report;
}

} // namespace emgdec
