#include "west/autodiff.hpp"

#include <cmath>

#include "west/errors.hpp"

namespace west {

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows_init) {
    rows = static_cast<int>(rows_init.size());
    cols = rows > 0 ? static_cast<int>(rows_init.begin()->size()) : 0;
    data.reserve(static_cast<std::size_t>(rows) * cols);
    for (const auto& row : rows_init) {
        if (static_cast<int>(row.size()) != cols) throw ShapeMismatch("ragged initializer");
        for (double v : row) data.push_back(v);
    }
}

Tensor Tensor::full(int r, int c, double v) {
    Tensor t(r, c);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
}

std::string Tensor::shape_str() const {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

namespace {

void require_equal_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw ShapeMismatch(std::string(op) + ": " + a.shape_str() + " vs " + b.shape_str());
    }
}

bool row_bias_onto(const Tensor& big, const Tensor& bias) {
    return bias.rows == 1 && big.rows > 1 && bias.cols == big.cols;
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) throw ShapeMismatch("matmul: " + a.shape_str() + " vs " + b.shape_str());
    Tensor c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    }
    return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (row_bias_onto(a, b)) {
        Tensor c = a;
        for (int i = 0; i < a.rows; ++i)
            for (int j = 0; j < a.cols; ++j) c.at(i, j) += b.at(0, j);
        return c;
    }
    if (row_bias_onto(b, a)) return add(b, a);
    require_equal_shape("add", a, b);
    Tensor c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_equal_shape("hadamard", a, b);
    Tensor c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= b.data[i];
    return c;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows) throw ShapeMismatch("concat_cols: " + a.shape_str() + " vs " + b.shape_str());
    Tensor c(a.rows, a.cols + b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < a.cols; ++j) c.at(i, j) = a.at(i, j);
        for (int j = 0; j < b.cols; ++j) c.at(i, a.cols + j) = b.at(i, j);
    }
    return c;
}

Tensor slice_cols(const Tensor& a, int from, int to) {
    if (from < 0 || to > a.cols || from >= to) {
        throw ShapeMismatch("slice_cols: [" + std::to_string(from) + "," + std::to_string(to) +
                            ") of " + a.shape_str());
    }
    Tensor c(a.rows, to - from);
    for (int i = 0; i < a.rows; ++i)
        for (int j = from; j < to; ++j) c.at(i, j - from) = a.at(i, j);
    return c;
}

namespace {

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = sigmoid_scalar(v);
    return y;
}

Tensor tanh_(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = std::tanh(v);
    return y;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    require_equal_shape("mse_loss", pred, target);
    double total = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        total += d * d;
    }
    Tensor out(1, 1);
    out.data[0] = total / static_cast<double>(pred.data.size());
    return out;
}

void Parameter::reset_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }

// Tape ------------------------------------------------------------------------

Var Tape::push(Node node) {
    node.grad = Tensor(node.value.rows, node.value.cols);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
    if (v.slot < 0 || v.slot >= static_cast<int>(nodes_.size())) throw Error("bad Var handle");
    return nodes_[static_cast<std::size_t>(v.slot)];
}

Var Tape::leaf(Tensor value) {
    Node n;
    n.op = Op::leaf;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::param(Parameter& p) {
    Node n;
    n.op = Op::leaf;
    n.value = p.value;
    n.bound = &p;
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    Node n;
    n.op = Op::matmul;
    n.a = a.slot;
    n.b = b.slot;
    n.value = west::matmul(node(a).value, node(b).value);
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    Node n;
    n.op = Op::add;
    n.a = a.slot;
    n.b = b.slot;
    n.value = west::add(node(a).value, node(b).value);
    return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
    Node n;
    n.op = Op::hadamard;
    n.a = a.slot;
    n.b = b.slot;
    n.value = west::hadamard(node(a).value, node(b).value);
    return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
    Node n;
    n.op = Op::concat_cols;
    n.a = a.slot;
    n.b = b.slot;
    n.value = west::concat_cols(node(a).value, node(b).value);
    return push(std::move(n));
}

Var Tape::slice_cols(Var a, int from, int to) {
    Node n;
    n.op = Op::slice_cols;
    n.a = a.slot;
    n.i0 = from;
    n.i1 = to;
    n.value = west::slice_cols(node(a).value, from, to);
    return push(std::move(n));
}

Var Tape::sigmoid(Var x) {
    Node n;
    n.op = Op::sigmoid;
    n.a = x.slot;
    n.value = west::sigmoid(node(x).value);
    return push(std::move(n));
}

Var Tape::tanh_(Var x) {
    Node n;
    n.op = Op::tanh_fn;
    n.a = x.slot;
    n.value = west::tanh_(node(x).value);
    return push(std::move(n));
}

Var Tape::relu(Var x) {
    Node n;
    n.op = Op::relu;
    n.a = x.slot;
    n.value = west::relu(node(x).value);
    return push(std::move(n));
}

Var Tape::mse_loss(Var pred, Var target) {
    Node n;
    n.op = Op::mse;
    n.a = pred.slot;
    n.b = target.slot;
    n.value = west::mse_loss(node(pred).value, node(target).value);
    return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

void Tape::backward(Var loss) {
    if (consumed_) throw StaleTape("backward already ran on this tape");
    const Node& top = node(loss);
    if (top.value.rows != 1 || top.value.cols != 1) {
        throw NotScalar("backward: loss is " + top.value.shape_str());
    }
    consumed_ = true;
    nodes_[static_cast<std::size_t>(loss.slot)].grad.data[0] = 1.0;

    for (int idx = loss.slot; idx >= 0; --idx) {
        Node& n = nodes_[static_cast<std::size_t>(idx)];
        bool any = false;
        for (double g : n.grad.data) {
            if (g != 0.0) {
                any = true;
                break;
            }
        }
        if (!any) continue;

        switch (n.op) {
        case Op::leaf:
            break;
        case Op::matmul: {
            Node& a = nodes_[static_cast<std::size_t>(n.a)];
            Node& b = nodes_[static_cast<std::size_t>(n.b)];
            // dA += dC * B^T ; dB += A^T * dC
            for (int i = 0; i < a.value.rows; ++i)
                for (int k = 0; k < a.value.cols; ++k) {
                    double s = 0.0;
                    for (int j = 0; j < b.value.cols; ++j) s += n.grad.at(i, j) * b.value.at(k, j);
                    a.grad.at(i, k) += s;
                }
            for (int k = 0; k < b.value.rows; ++k)
                for (int j = 0; j < b.value.cols; ++j) {
                    double s = 0.0;
                    for (int i = 0; i < a.value.rows; ++i) s += a.value.at(i, k) * n.grad.at(i, j);
                    b.grad.at(k, j) += s;
                }
            break;
        }
        case Op::add: {
            Node& a = nodes_[static_cast<std::size_t>(n.a)];
            Node& b = nodes_[static_cast<std::size_t>(n.b)];
            auto accumulate = [&](Node& operand) {
                if (operand.value.rows == n.value.rows) {
                    for (std::size_t i = 0; i < operand.grad.data.size(); ++i)
                        operand.grad.data[i] += n.grad.data[i];
                } else { // 1xC bias: column sums
                    for (int i = 0; i < n.value.rows; ++i)
                        for (int j = 0; j < n.value.cols; ++j) operand.grad.at(0, j) += n.grad.at(i, j);
                }
            };
            accumulate(a);
            accumulate(b);
            break;
        }
        case Op::hadamard: {
            Node& a = nodes_[static_cast<std::size_t>(n.a)];
            Node& b = nodes_[static_cast<std::size_t>(n.b)];
            for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
                a.grad.data[i] += n.grad.data[i] * b.value.data[i];
                b.grad.data[i] += n.grad.data[i] * a.value.data[i];
            }
            break;
        }
        case Op::concat_cols: {
            Node& a = nodes_[static_cast<std::size_t>(n.a)];
            Node& b = nodes_[static_cast<std::size_t>(n.b)];
            for (int i = 0; i < n.value.rows; ++i) {
                for (int j = 0; j < a.value.cols; ++j) a.grad.at(i, j) += n.grad.at(i, j);
                for (int j = 0; j < b.value.cols; ++j) b.grad.at(i, j) += n.grad.at(i, a.value.cols + j);
            }
            break;
        }
        case Op::slice_cols: {
            Node& a = nodes_[static_cast<std::size_t>(n.a)];
            for (int i = 0; i < n.value.rows; ++i)
                for (int j = 0; j < n.value.cols; ++j) a.grad.at(i, n.i0 + j) += n.grad.at(i, j);
            break;
        }
        case Op::sigmoid: {
            Node& a = nodes_[static_cast<std::size_t>(n.a)];
            for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
                const double s = n.value.data[i];
                a.grad.data[i] += n.grad.data[i] * s * (1.0 - s);
            }
            break;
        }
        case Op::tanh_fn: {
            Node& a = nodes_[static_cast<std::size_t>(n.a)];
            for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
                const double t = n.value.data[i];
                a.grad.data[i] += n.grad.data[i] * (1.0 - t * t);
            }
            break;
        }
        case Op::relu: {
            Node& a = nodes_[static_cast<std::size_t>(n.a)];
            for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
                if (a.value.data[i] > 0.0) a.grad.data[i] += n.grad.data[i];
            }
            break;
        }
        case Op::mse: {
            Node& a = nodes_[static_cast<std::size_t>(n.a)];
            Node& b = nodes_[static_cast<std::size_t>(n.b)];
            const double scale = 2.0 * n.grad.data[0] / static_cast<double>(a.value.data.size());
            for (std::size_t i = 0; i < a.value.data.size(); ++i) {
                const double d = a.value.data[i] - b.value.data[i];
                a.grad.data[i] += scale * d;
                b.grad.data[i] -= scale * d;
            }
            break;
        }
        }
    }

    for (auto& n : nodes_) {
        if (n.bound != nullptr) {
            for (std::size_t i = 0; i < n.grad.data.size(); ++i) n.bound->grad.data[i] += n.grad.data[i];
        }
    }
}

double finite_diff_check(const std::function<Var(Tape&)>& build_loss,
                         const std::vector<Parameter*>& params, double h) {
    if (!(h > 0.0)) throw InvalidConfig("finite_diff_check: h must be positive");
    for (auto* p : params) p->reset_grad();
    {
        Tape tape;
        Var loss = build_loss(tape);
        tape.backward(loss);
    }
    auto eval = [&]() {
        Tape tape;
        Var loss = build_loss(tape);
        const Tensor& v = tape.value(loss);
        if (v.rows != 1 || v.cols != 1) throw NotScalar("finite_diff_check: loss is " + v.shape_str());
        return v.data[0];
    };

    double max_rel = 0.0;
    for (auto* p : params) {
        for (std::size_t i = 0; i < p->value.data.size(); ++i) {
            const double orig = p->value.data[i];
            p->value.data[i] = orig + h;
            const double fp = eval();
            p->value.data[i] = orig - h;
            const double fm = eval();
            p->value.data[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = p->grad.data[i];
            const double rel = std::fabs(analytic - numeric) /
                               std::max(1e-8, std::fabs(analytic) + std::fabs(numeric));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace west
