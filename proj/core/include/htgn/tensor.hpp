#ifndef HTGN_TENSOR_HPP
#define HTGN_TENSOR_HPP

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

namespace htgn {

class Tape;

namespace detail {
struct TensorData {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;  // allocated (zero) iff requires_grad
    bool requires_grad = false;
    Tape* tape = nullptr;
};
}  // namespace detail

/// Reject non-finite values at tensor creation. On by default; heavy inner
/// loops may switch it off.
void set_checked_mode(bool on);
bool checked_mode();

/// Dense real matrix handle; vectors are (n,1). Copying shares the
/// underlying buffer (graph-node semantics).
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Eigen::MatrixXd v);
    static Tensor scalar(double v);
    static Tensor zeros(Eigen::Index rows, Eigen::Index cols = 1);
    static Tensor from_vector(const std::vector<double>& v);
    /// Leaf with gradient storage, recorded against `tape`.
    static Tensor parameter(Eigen::MatrixXd v, Tape& tape);

    bool defined() const { return d_ != nullptr; }
    const Eigen::MatrixXd& value() const { return d_->value; }
    const Eigen::MatrixXd& grad() const;
    bool requires_grad() const { return d_ && d_->requires_grad; }
    Eigen::Index rows() const { return d_->value.rows(); }
    Eigen::Index cols() const { return d_->value.cols(); }
    double item() const;  // value of a 1x1 tensor

    void zero_grad();
    /// Overwrite the stored value in place (same shape). Used by the
    /// optimizer and by finite-difference probes; never recorded.
    void set_value(const Eigen::MatrixXd& v);

    std::shared_ptr<detail::TensorData> data() const { return d_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorData> d) : d_(std::move(d)) {}
    std::shared_ptr<detail::TensorData> d_;

    friend class Tape;
    friend struct OpBuilder;
};

/// Execution-ordered record of differentiable operations for one training
/// context. Single-threaded; distinct contexts own distinct tapes.
class Tape {
public:
    std::size_t size() const { return entries_.size(); }
    void clear() { entries_.clear(); }
    bool recording() const { return pause_depth_ == 0; }

    /// RAII no-grad scope: ops executed while a guard lives produce plain
    /// constants and record nothing.
    class PauseGuard {
    public:
        explicit PauseGuard(Tape& t) : tape_(t) { ++tape_.pause_depth_; }
        ~PauseGuard() { --tape_.pause_depth_; }
        PauseGuard(const PauseGuard&) = delete;
        PauseGuard& operator=(const PauseGuard&) = delete;

    private:
        Tape& tape_;
    };

private:
    struct Entry {
        std::shared_ptr<detail::TensorData> out;
        std::function<void()> backward;
    };
    std::vector<Entry> entries_;
    int pause_depth_ = 0;

    friend struct OpBuilder;
    friend void backward(const Tensor& loss);
};

// Primitives. Each validates shapes (mismatches report both shapes) and
// registers its backward rule when any input requires grad.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor elemwise_mul(const Tensor& a, const Tensor& b);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor sum(const Tensor& a);
Tensor reduce_mean(const Tensor& a);
/// Elementwise numerically-stable binary cross-entropy on logits;
/// `targets` are constants in [0,1].
Tensor bce_with_logits(const Tensor& logits, const Eigen::MatrixXd& targets);

/// Reverse pass from a scalar loss: accumulates (+=) d loss / d tensor into
/// every requires-grad tensor reachable from it, then clears the tape.
void backward(const Tensor& loss);

/// Max relative error between reverse-mode and central finite differences of
/// a scalar-valued function at x. Leaves x's value intact; clobbers grads.
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x, double eps);

}  // namespace htgn

#endif  // HTGN_TENSOR_HPP
