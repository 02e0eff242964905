#pragma once

#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace west {

/// Dense row-major 2-D array of doubles.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    Tensor(std::initializer_list<std::initializer_list<double>> rows_init);

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double v);

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
    std::size_t size() const { return data.size(); }
    std::string shape_str() const;
};

// value-level kernels (the tape records the same semantics)
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b); // equal shapes, or 1xC row bias on either side
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, int from, int to);
Tensor sigmoid(const Tensor& x);
Tensor tanh_(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor mse_loss(const Tensor& pred, const Tensor& target); // 1x1

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string name_, Tensor value_)
        : name(std::move(name_)), value(std::move(value_)), grad(value.rows, value.cols) {}

    void reset_grad();
};

/// Handle to a value slot on a Tape.
struct Var {
    int slot = -1;
};

/// Records a forward pass and replays it in reverse for gradients. One
/// backward per tape; parameters registered via param() receive accumulated
/// gradients.
class Tape {
public:
    Var leaf(Tensor value);
    Var param(Parameter& p);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var concat_cols(Var a, Var b);
    Var slice_cols(Var a, int from, int to);
    Var sigmoid(Var x);
    Var tanh_(Var x);
    Var relu(Var x);
    Var mse_loss(Var pred, Var target);

    const Tensor& value(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }

    /// Accumulates d(loss)/d(param) into every registered parameter.
    void backward(Var loss);

private:
    enum class Op { leaf, matmul, add, hadamard, concat_cols, slice_cols, sigmoid, tanh_fn, relu, mse };

    struct Node {
        Op op = Op::leaf;
        int a = -1;
        int b = -1;
        int i0 = 0; // slice bounds
        int i1 = 0;
        Tensor value;
        Tensor grad;
        Parameter* bound = nullptr;
    };

    Var push(Node node);
    const Node& node(Var v) const;

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

/// Max over all parameter coordinates of the relative disagreement between
/// tape gradients and central finite differences of the rebuilt loss.
double finite_diff_check(const std::function<Var(Tape&)>& build_loss,
                         const std::vector<Parameter*>& params, double h);

} // namespace west
