#include "htgn/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace htgn {

namespace {

bool g_checked = true;

std::string shape_str(const Eigen::MatrixXd& m) {
    return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

void check_finite(const Eigen::MatrixXd& m, const char* where) {
    if (g_checked && !m.allFinite())
        throw std::invalid_argument(std::string(where) + ": non-finite values");
}

using DataPtr = std::shared_ptr<detail::TensorData>;

}  // namespace

void set_checked_mode(bool on) { g_checked = on; }
bool checked_mode() { return g_checked; }

Tensor Tensor::constant(Eigen::MatrixXd v) {
    check_finite(v, "Tensor::constant");
    auto d = std::make_shared<detail::TensorData>();
    d->value = std::move(v);
    return Tensor(std::move(d));
}

Tensor Tensor::scalar(double v) { return constant(Eigen::MatrixXd::Constant(1, 1, v)); }

Tensor Tensor::zeros(Eigen::Index rows, Eigen::Index cols) {
    return constant(Eigen::MatrixXd::Zero(rows, cols));
}

Tensor Tensor::from_vector(const std::vector<double>& v) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, 0) = v[static_cast<std::size_t>(i)];
    return constant(std::move(m));
}

Tensor Tensor::parameter(Eigen::MatrixXd v, Tape& tape) {
    check_finite(v, "Tensor::parameter");
    auto d = std::make_shared<detail::TensorData>();
    d->grad = Eigen::MatrixXd::Zero(v.rows(), v.cols());
    d->value = std::move(v);
    d->requires_grad = true;
    d->tape = &tape;
    return Tensor(std::move(d));
}

const Eigen::MatrixXd& Tensor::grad() const {
    if (!requires_grad()) throw std::logic_error("grad() on a tensor without gradient storage");
    return d_->grad;
}

double Tensor::item() const {
    if (rows() != 1 || cols() != 1)
        throw std::logic_error("item() requires a 1x1 tensor, got " + shape_str(d_->value));
    return d_->value(0, 0);
}

void Tensor::zero_grad() {
    if (requires_grad()) d_->grad.setZero();
}

void Tensor::set_value(const Eigen::MatrixXd& v) {
    if (v.rows() != rows() || v.cols() != cols())
        throw std::invalid_argument("set_value shape mismatch: " + shape_str(d_->value) + " vs " +
                                    shape_str(v));
    check_finite(v, "Tensor::set_value");
    d_->value = v;
}

// Shared machinery: build the op output and record the backward closure when
// any input participates in a live tape.
struct OpBuilder {
    static Tensor make(Eigen::MatrixXd value, const std::vector<Tensor>& inputs,
                       std::function<void(const DataPtr&)> backward) {
        check_finite(value, "forward op");
        auto out = std::make_shared<detail::TensorData>();
        out->value = std::move(value);

        Tape* tape = nullptr;
        for (const Tensor& in : inputs) {
            if (!in.defined()) throw std::invalid_argument("op input is an empty tensor");
            if (!in.requires_grad()) continue;
            Tape* t = in.data()->tape;
            if (tape && t && tape != t)
                throw std::logic_error("op inputs belong to different tapes");
            if (t) tape = t;
        }
        if (tape && tape->recording()) {
            out->requires_grad = true;
            out->tape = tape;
            out->grad = Eigen::MatrixXd::Zero(out->value.rows(), out->value.cols());
            DataPtr out_ptr = out;
            tape->entries_.push_back(
                {out_ptr, [out_ptr, backward = std::move(backward)]() { backward(out_ptr); }});
        }
        return Tensor(std::move(out));
    }
};

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.value()) +
                                    " vs " + shape_str(b.value()));
}

void accumulate(const DataPtr& d, const Eigen::MatrixXd& g) {
    if (d->requires_grad) d->grad += g;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: shape mismatch " + shape_str(a.value()) + " vs " +
                                    shape_str(b.value()));
    auto da = a.data(), db = b.data();
    return OpBuilder::make(da->value * db->value, {a, b}, [da, db](const DataPtr& out) {
        if (da->requires_grad) da->grad.noalias() += out->grad * db->value.transpose();
        if (db->requires_grad) db->grad.noalias() += da->value.transpose() * out->grad;
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    auto da = a.data(), db = b.data();
    return OpBuilder::make(da->value + db->value, {a, b}, [da, db](const DataPtr& out) {
        accumulate(da, out->grad);
        accumulate(db, out->grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    auto da = a.data(), db = b.data();
    return OpBuilder::make(da->value - db->value, {a, b}, [da, db](const DataPtr& out) {
        accumulate(da, out->grad);
        if (db->requires_grad) db->grad -= out->grad;
    });
}

Tensor elemwise_mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "elemwise_mul");
    auto da = a.data(), db = b.data();
    return OpBuilder::make(da->value.cwiseProduct(db->value), {a, b},
                           [da, db](const DataPtr& out) {
                               if (da->requires_grad)
                                   da->grad += out->grad.cwiseProduct(db->value);
                               if (db->requires_grad)
                                   db->grad += out->grad.cwiseProduct(da->value);
                           });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    Eigen::Index cols = -1, rows = 0;
    for (const Tensor& p : parts) {
        if (p.rows() == 0) continue;  // empty segments vanish (e.g. d_e = 0)
        if (cols == -1) cols = p.cols();
        if (p.cols() != cols)
            throw std::invalid_argument("concat_rows: column mismatch " +
                                        shape_str(parts.front().value()) + " vs " +
                                        shape_str(p.value()));
        rows += p.rows();
    }
    if (cols == -1) cols = 1;
    Eigen::MatrixXd value(rows, cols);
    Eigen::Index at = 0;
    std::vector<DataPtr> ds;
    ds.reserve(parts.size());
    for (const Tensor& p : parts) {
        ds.push_back(p.data());
        if (p.rows() == 0) continue;
        value.middleRows(at, p.rows()) = p.value();
        at += p.rows();
    }
    return OpBuilder::make(std::move(value), parts, [ds](const DataPtr& out) {
        Eigen::Index at = 0;
        for (const auto& d : ds) {
            Eigen::Index r = d->value.rows();
            if (r == 0) continue;
            if (d->requires_grad) d->grad += out->grad.middleRows(at, r);
            at += r;
        }
    });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) { return concat_rows(std::vector<Tensor>{a, b}); }

Tensor relu(const Tensor& a) {
    auto da = a.data();
    return OpBuilder::make(da->value.cwiseMax(0.0), {a}, [da](const DataPtr& out) {
        if (!da->requires_grad) return;
        da->grad += out->grad.cwiseProduct(
            (da->value.array() > 0.0).cast<double>().matrix());
    });
}

Tensor sigmoid(const Tensor& a) {
    auto da = a.data();
    Eigen::MatrixXd s =
        da->value.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    return OpBuilder::make(s, {a}, [da, s](const DataPtr& out) {
        if (!da->requires_grad) return;
        da->grad += out->grad.cwiseProduct(s.cwiseProduct(Eigen::MatrixXd::Ones(s.rows(), s.cols()) - s));
    });
}

Tensor tanh(const Tensor& a) {
    auto da = a.data();
    Eigen::MatrixXd th = da->value.array().tanh().matrix();
    return OpBuilder::make(th, {a}, [da, th](const DataPtr& out) {
        if (!da->requires_grad) return;
        da->grad += out->grad.cwiseProduct(
            (1.0 - th.array().square()).matrix());
    });
}

Tensor cos(const Tensor& a) {
    auto da = a.data();
    return OpBuilder::make(da->value.array().cos().matrix(), {a}, [da](const DataPtr& out) {
        if (!da->requires_grad) return;
        da->grad -= out->grad.cwiseProduct(da->value.array().sin().matrix());
    });
}

Tensor scale(const Tensor& a, double c) {
    if (g_checked && !std::isfinite(c)) throw std::invalid_argument("scale: non-finite factor");
    auto da = a.data();
    return OpBuilder::make(da->value * c, {a}, [da, c](const DataPtr& out) {
        if (da->requires_grad) da->grad += out->grad * c;
    });
}

Tensor sum(const Tensor& a) {
    auto da = a.data();
    return OpBuilder::make(Eigen::MatrixXd::Constant(1, 1, da->value.sum()), {a},
                           [da](const DataPtr& out) {
                               if (da->requires_grad) da->grad.array() += out->grad(0, 0);
                           });
}

Tensor reduce_mean(const Tensor& a) {
    if (a.rows() == 0 || a.cols() == 0)
        throw std::invalid_argument("reduce_mean: empty tensor");
    auto da = a.data();
    double n = static_cast<double>(a.rows() * a.cols());
    return OpBuilder::make(Eigen::MatrixXd::Constant(1, 1, da->value.sum() / n), {a},
                           [da, n](const DataPtr& out) {
                               if (da->requires_grad) da->grad.array() += out->grad(0, 0) / n;
                           });
}

Tensor bce_with_logits(const Tensor& logits, const Eigen::MatrixXd& targets) {
    if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
        throw std::invalid_argument("bce_with_logits: shape mismatch " +
                                    shape_str(logits.value()) + " vs " + shape_str(targets));
    if (g_checked && ((targets.array() < 0.0).any() || (targets.array() > 1.0).any()))
        throw std::invalid_argument("bce_with_logits: targets must lie in [0,1]");
    auto dl = logits.data();
    // loss = max(s,0) - s*y + log(1 + exp(-|s|)), stable for large |s|
    Eigen::MatrixXd value =
        dl->value.binaryExpr(targets, [](double s, double y) {
            return std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::abs(s)));
        });
    return OpBuilder::make(std::move(value), {logits}, [dl, targets](const DataPtr& out) {
        if (!dl->requires_grad) return;
        Eigen::MatrixXd sig =
            dl->value.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
        dl->grad += out->grad.cwiseProduct(sig - targets);
    });
}

void backward(const Tensor& loss) {
    if (!loss.defined()) throw std::invalid_argument("backward: empty tensor");
    if (loss.rows() != 1 || loss.cols() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got " +
                                    shape_str(loss.value()));
    if (!loss.requires_grad() || loss.data()->tape == nullptr)
        throw std::logic_error("backward: loss was not produced on a tape");
    Tape* tape = loss.data()->tape;
    loss.data()->grad(0, 0) += 1.0;
    for (auto it = tape->entries_.rbegin(); it != tape->entries_.rend(); ++it) {
        if (it->out->grad.isZero(0.0)) continue;  // unreachable from the loss
        it->backward();
    }
    tape->clear();
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x, double eps) {
    if (!x.requires_grad() || x.data()->tape == nullptr)
        throw std::invalid_argument("grad_check: x must be a tape-registered parameter");
    Tape& tape = *x.data()->tape;
    x.zero_grad();
    Tensor y = f(x);
    if (y.rows() != 1 || y.cols() != 1)
        throw std::invalid_argument("grad_check: f must return a scalar");
    backward(y);
    Eigen::MatrixXd analytic = x.grad();

    double max_rel = 0.0;
    {
        Tape::PauseGuard guard(tape);
        Eigen::MatrixXd& v = x.data()->value;
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            for (Eigen::Index i = 0; i < v.rows(); ++i) {
                double orig = v(i, j);
                v(i, j) = orig + eps;
                double up = f(x).item();
                v(i, j) = orig - eps;
                double dn = f(x).item();
                v(i, j) = orig;
                double fd = (up - dn) / (2.0 * eps);
                double a = analytic(i, j);
                double rel = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
                max_rel = std::max(max_rel, rel);
            }
        }
    }
    x.zero_grad();
    return max_rel;
}

}  // namespace htgn
