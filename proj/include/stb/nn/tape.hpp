#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "stb/nn/params.hpp"

namespace stb::nn {

/// Reverse-mode autodiff over Eigen matrices. Nodes are appended in
/// evaluation order, so creation order is already a topological order and
/// backward() is a single reverse sweep. Gradients of Param leaves are
/// accumulated into ParamStore grads.
class Tape {
public:
    using Ref = int;

    Ref constant(const Mat& v);
    Ref param(Param& p);

    const Mat& value(Ref r) const { return nodes_[r].value; }
    const Mat& grad(Ref r) const { return nodes_[r].grad; }

    // --- elementwise / broadcasting ---
    Ref add(Ref a, Ref b);
    Ref sub(Ref a, Ref b);
    Ref add_rowwise(Ref a, Ref bias);       // bias: 1 x C, broadcast over rows
    Ref scale(Ref a, double s);
    Ref cmul(Ref a, const Mat& c);          // elementwise by constant
    Ref mul_elem(Ref a, Ref b);
    Ref scale_by(Ref a, Ref s);             // s is 1x1
    Ref relu(Ref a);
    Ref tanh_(Ref a);
    Ref sigmoid(Ref a);

    // --- linear algebra ---
    Ref matmul(Ref a, Ref b);               // A * B
    Ref matmul_nt(Ref a, Ref b);            // A * B^T
    Ref matmul_tn(Ref a, Ref b);            // A^T * B

    // --- shape ---
    Ref transpose(Ref a);
    Ref concat_cols(Ref a, Ref b);
    Ref concat_rows(Ref a, Ref b);
    Ref slice_cols(Ref a, int start, int n);
    Ref gather_rows(Ref a, std::vector<int> idx);   // also embedding lookup
    Ref mean_rows(Ref a);                   // N x C -> 1 x C
    Ref weighted_rows(Ref a, const Eigen::VectorXd& w);  // w^T * A -> 1 x C

    // --- reductions / losses ---
    Ref sum_all(Ref a);                     // -> 1 x 1
    Ref mse(Ref a, const Mat& target);      // mean squared error -> 1 x 1
    // Mean over rows of -log softmax(row)[target[row]]; rows with target < 0
    // are skipped. -> 1 x 1
    Ref nll_rows(Ref logits, std::vector<int> targets);

    // --- normalization / attention pieces ---
    Ref softmax_rows(Ref a);
    Ref layer_norm_rows(Ref a, Ref gain, Ref bias);  // gain/bias: 1 x C

    // Pairwise additive attention bias: out(i,j) = table(buckets(i,j), col).
    Ref bucket_bias(Ref table, const Eigen::MatrixXi& buckets, int col);

    // Seeds d(scalar)/d(scalar) = 1 and sweeps backward, accumulating into
    // Param grads. `scalar` must be 1 x 1.
    void backward(Ref scalar);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void(Tape&, const Node&)> back;  // pulls from node.grad
        Param* leaf = nullptr;
    };

    Ref push(Mat v) {
        nodes_.push_back(Node{std::move(v), Mat(), nullptr, nullptr});
        return static_cast<Ref>(nodes_.size() - 1);
    }
    Mat& g(Ref r);  // lazily-zeroed gradient accumulator

    std::vector<Node> nodes_;
};

}  // namespace stb::nn
