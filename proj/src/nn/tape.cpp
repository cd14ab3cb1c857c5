#include "stb/nn/tape.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace stb::nn {

Mat& Tape::g(Ref r) {
    Node& n = nodes_[r];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

Tape::Ref Tape::constant(const Mat& v) { return push(v); }

Tape::Ref Tape::param(Param& p) {
    Ref r = push(p.value);
    nodes_[r].leaf = &p;
    return r;
}

Tape::Ref Tape::add(Ref a, Ref b) {
    assert(nodes_[a].value.rows() == nodes_[b].value.rows() &&
           nodes_[a].value.cols() == nodes_[b].value.cols());
    Ref r = push(nodes_[a].value + nodes_[b].value);
    nodes_[r].back = [a, b](Tape& t, const Node& n) {
        t.g(a) += n.grad;
        t.g(b) += n.grad;
    };
    return r;
}

Tape::Ref Tape::sub(Ref a, Ref b) {
    Ref r = push(nodes_[a].value - nodes_[b].value);
    nodes_[r].back = [a, b](Tape& t, const Node& n) {
        t.g(a) += n.grad;
        t.g(b) -= n.grad;
    };
    return r;
}

Tape::Ref Tape::add_rowwise(Ref a, Ref bias) {
    assert(nodes_[bias].value.rows() == 1);
    Mat v = nodes_[a].value;
    v.rowwise() += nodes_[bias].value.row(0);
    Ref r = push(std::move(v));
    nodes_[r].back = [a, bias](Tape& t, const Node& n) {
        t.g(a) += n.grad;
        t.g(bias) += n.grad.colwise().sum();
    };
    return r;
}

Tape::Ref Tape::scale(Ref a, double s) {
    Ref r = push(nodes_[a].value * s);
    nodes_[r].back = [a, s](Tape& t, const Node& n) { t.g(a) += s * n.grad; };
    return r;
}

Tape::Ref Tape::cmul(Ref a, const Mat& c) {
    Ref r = push(nodes_[a].value.cwiseProduct(c));
    nodes_[r].back = [a, c](Tape& t, const Node& n) {
        t.g(a) += n.grad.cwiseProduct(c);
    };
    return r;
}

Tape::Ref Tape::mul_elem(Ref a, Ref b) {
    Ref r = push(nodes_[a].value.cwiseProduct(nodes_[b].value));
    nodes_[r].back = [a, b](Tape& t, const Node& n) {
        t.g(a) += n.grad.cwiseProduct(t.nodes_[b].value);
        t.g(b) += n.grad.cwiseProduct(t.nodes_[a].value);
    };
    return r;
}

Tape::Ref Tape::scale_by(Ref a, Ref s) {
    assert(nodes_[s].value.size() == 1);
    double sv = nodes_[s].value(0, 0);
    Ref r = push(nodes_[a].value * sv);
    nodes_[r].back = [a, s, sv](Tape& t, const Node& n) {
        t.g(a) += sv * n.grad;
        t.g(s)(0, 0) += n.grad.cwiseProduct(t.nodes_[a].value).sum();
    };
    return r;
}

Tape::Ref Tape::relu(Ref a) {
    Ref r = push(nodes_[a].value.cwiseMax(0.0));
    nodes_[r].back = [a](Tape& t, const Node& n) {
        t.g(a) += n.grad.cwiseProduct(
            (t.nodes_[a].value.array() > 0.0).cast<double>().matrix());
    };
    return r;
}

Tape::Ref Tape::tanh_(Ref a) {
    Ref r = push(nodes_[a].value.array().tanh().matrix());
    nodes_[r].back = [a, r](Tape& t, const Node& n) {
        const Mat& y = t.nodes_[r].value;
        t.g(a) += n.grad.cwiseProduct((1.0 - y.array().square()).matrix());
    };
    return r;
}

Tape::Ref Tape::sigmoid(Ref a) {
    Mat v = (1.0 / (1.0 + (-nodes_[a].value.array()).exp())).matrix();
    Ref r = push(std::move(v));
    nodes_[r].back = [a, r](Tape& t, const Node& n) {
        const Mat& y = t.nodes_[r].value;
        t.g(a) += n.grad.cwiseProduct((y.array() * (1.0 - y.array())).matrix());
    };
    return r;
}

Tape::Ref Tape::matmul(Ref a, Ref b) {
    Ref r = push(nodes_[a].value * nodes_[b].value);
    nodes_[r].back = [a, b](Tape& t, const Node& n) {
        t.g(a) += n.grad * t.nodes_[b].value.transpose();
        t.g(b) += t.nodes_[a].value.transpose() * n.grad;
    };
    return r;
}

Tape::Ref Tape::matmul_nt(Ref a, Ref b) {
    Ref r = push(nodes_[a].value * nodes_[b].value.transpose());
    nodes_[r].back = [a, b](Tape& t, const Node& n) {
        t.g(a) += n.grad * t.nodes_[b].value;
        t.g(b) += n.grad.transpose() * t.nodes_[a].value;
    };
    return r;
}

Tape::Ref Tape::matmul_tn(Ref a, Ref b) {
    Ref r = push(nodes_[a].value.transpose() * nodes_[b].value);
    nodes_[r].back = [a, b](Tape& t, const Node& n) {
        t.g(a) += t.nodes_[b].value * n.grad.transpose();
        t.g(b) += t.nodes_[a].value * n.grad;
    };
    return r;
}

Tape::Ref Tape::transpose(Ref a) {
    Ref r = push(nodes_[a].value.transpose());
    nodes_[r].back = [a](Tape& t, const Node& n) {
        t.g(a) += n.grad.transpose();
    };
    return r;
}

Tape::Ref Tape::concat_cols(Ref a, Ref b) {
    const Mat& A = nodes_[a].value;
    const Mat& B = nodes_[b].value;
    assert(A.rows() == B.rows());
    Mat v(A.rows(), A.cols() + B.cols());
    v << A, B;
    int ca = static_cast<int>(A.cols());
    Ref r = push(std::move(v));
    nodes_[r].back = [a, b, ca](Tape& t, const Node& n) {
        t.g(a) += n.grad.leftCols(ca);
        t.g(b) += n.grad.rightCols(n.grad.cols() - ca);
    };
    return r;
}

Tape::Ref Tape::concat_rows(Ref a, Ref b) {
    const Mat& A = nodes_[a].value;
    const Mat& B = nodes_[b].value;
    assert(A.cols() == B.cols());
    Mat v(A.rows() + B.rows(), A.cols());
    v << A, B;
    int ra = static_cast<int>(A.rows());
    Ref r = push(std::move(v));
    nodes_[r].back = [a, b, ra](Tape& t, const Node& n) {
        t.g(a) += n.grad.topRows(ra);
        t.g(b) += n.grad.bottomRows(n.grad.rows() - ra);
    };
    return r;
}

Tape::Ref Tape::slice_cols(Ref a, int start, int n) {
    Ref r = push(nodes_[a].value.middleCols(start, n));
    nodes_[r].back = [a, start, n](Tape& t, const Node& nd) {
        t.g(a).middleCols(start, n) += nd.grad;
    };
    return r;
}

Tape::Ref Tape::gather_rows(Ref a, std::vector<int> idx) {
    const Mat& A = nodes_[a].value;
    Mat v(static_cast<int>(idx.size()), A.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) v.row(i) = A.row(idx[i]);
    Ref r = push(std::move(v));
    nodes_[r].back = [a, idx = std::move(idx)](Tape& t, const Node& n) {
        Mat& ga = t.g(a);
        for (std::size_t i = 0; i < idx.size(); ++i)
            ga.row(idx[i]) += n.grad.row(i);
    };
    return r;
}

Tape::Ref Tape::mean_rows(Ref a) {
    const Mat& A = nodes_[a].value;
    double inv = 1.0 / static_cast<double>(A.rows());
    Ref r = push(A.colwise().sum() * inv);
    nodes_[r].back = [a, inv](Tape& t, const Node& n) {
        t.g(a).rowwise() += (n.grad.row(0) * inv).eval();
    };
    return r;
}

Tape::Ref Tape::weighted_rows(Ref a, const Eigen::VectorXd& w) {
    assert(w.size() == nodes_[a].value.rows());
    Ref r = push(w.transpose() * nodes_[a].value);
    nodes_[r].back = [a, w](Tape& t, const Node& n) {
        t.g(a) += w * n.grad.row(0);
    };
    return r;
}

Tape::Ref Tape::sum_all(Ref a) {
    Mat v(1, 1);
    v(0, 0) = nodes_[a].value.sum();
    Ref r = push(std::move(v));
    nodes_[r].back = [a](Tape& t, const Node& n) {
        t.g(a).array() += n.grad(0, 0);
    };
    return r;
}

Tape::Ref Tape::mse(Ref a, const Mat& target) {
    const Mat& A = nodes_[a].value;
    assert(A.rows() == target.rows() && A.cols() == target.cols());
    Mat diff = A - target;
    double inv = 1.0 / static_cast<double>(A.size());
    Mat v(1, 1);
    v(0, 0) = diff.squaredNorm() * inv;
    Ref r = push(std::move(v));
    nodes_[r].back = [a, diff = std::move(diff), inv](Tape& t, const Node& n) {
        t.g(a) += (2.0 * inv * n.grad(0, 0)) * diff;
    };
    return r;
}

Tape::Ref Tape::nll_rows(Ref logits, std::vector<int> targets) {
    const Mat& Z = nodes_[logits].value;
    assert(static_cast<int>(targets.size()) == Z.rows());
    Mat S(Z.rows(), Z.cols());
    double loss = 0.0;
    int counted = 0;
    for (int i = 0; i < Z.rows(); ++i) {
        Eigen::RowVectorXd row = Z.row(i);
        double m = row.maxCoeff();
        Eigen::RowVectorXd e = (row.array() - m).exp();
        double s = e.sum();
        S.row(i) = e / s;
        if (targets[i] >= 0) {
            loss -= std::log(S(i, targets[i]));
            ++counted;
        }
    }
    if (counted == 0) throw std::invalid_argument("nll_rows: no targets");
    Mat v(1, 1);
    v(0, 0) = loss / counted;
    Ref r = push(std::move(v));
    nodes_[r].back = [logits, targets = std::move(targets), S = std::move(S),
                      counted](Tape& t, const Node& n) {
        double scale = n.grad(0, 0) / counted;
        Mat& gz = t.g(logits);
        for (int i = 0; i < S.rows(); ++i) {
            if (targets[i] < 0) continue;
            gz.row(i) += scale * S.row(i);
            gz(i, targets[i]) -= scale;
        }
    };
    return r;
}

Tape::Ref Tape::softmax_rows(Ref a) {
    const Mat& Z = nodes_[a].value;
    Mat S(Z.rows(), Z.cols());
    for (int i = 0; i < Z.rows(); ++i) {
        Eigen::RowVectorXd row = Z.row(i);
        double m = row.maxCoeff();
        Eigen::RowVectorXd e = (row.array() - m).exp();
        S.row(i) = e / e.sum();
    }
    Ref r = push(S);
    nodes_[r].back = [a, r](Tape& t, const Node& n) {
        const Mat& S = t.nodes_[r].value;
        Mat gs = n.grad.cwiseProduct(S);
        Eigen::VectorXd rowsum = gs.rowwise().sum();
        t.g(a) += gs - S.cwiseProduct(rowsum.replicate(1, S.cols()));
    };
    return r;
}

Tape::Ref Tape::layer_norm_rows(Ref a, Ref gain, Ref bias) {
    constexpr double kEps = 1e-5;
    const Mat& X = nodes_[a].value;
    int C = static_cast<int>(X.cols());
    Eigen::VectorXd mu = X.rowwise().mean();
    Mat centered = X - mu.replicate(1, C);
    Eigen::VectorXd var = centered.array().square().rowwise().mean();
    Eigen::VectorXd inv_sigma = (var.array() + kEps).rsqrt();
    Mat xhat = centered.cwiseProduct(inv_sigma.replicate(1, C));
    Mat v = xhat;
    v.array().rowwise() *= nodes_[gain].value.row(0).array();
    v.rowwise() += nodes_[bias].value.row(0);
    Ref r = push(std::move(v));
    nodes_[r].back = [a, gain, bias, xhat = std::move(xhat),
                      inv_sigma = std::move(inv_sigma)](Tape& t, const Node& n) {
        int C = static_cast<int>(xhat.cols());
        Mat gy = n.grad;
        t.g(bias) += gy.colwise().sum();
        t.g(gain) += gy.cwiseProduct(xhat).colwise().sum();
        Mat gxhat = gy;
        gxhat.array().rowwise() *= t.nodes_[gain].value.row(0).array();
        Eigen::VectorXd m1 = gxhat.rowwise().mean();
        Eigen::VectorXd m2 = gxhat.cwiseProduct(xhat).rowwise().mean();
        Mat gx = gxhat - m1.replicate(1, C) - xhat.cwiseProduct(m2.replicate(1, C));
        gx.array().colwise() *= inv_sigma.array();
        t.g(a) += gx;
    };
    return r;
}

Tape::Ref Tape::bucket_bias(Ref table, const Eigen::MatrixXi& buckets, int col) {
    const Mat& T = nodes_[table].value;
    Mat v(buckets.rows(), buckets.cols());
    for (int i = 0; i < buckets.rows(); ++i)
        for (int j = 0; j < buckets.cols(); ++j) v(i, j) = T(buckets(i, j), col);
    Ref r = push(std::move(v));
    nodes_[r].back = [table, buckets, col](Tape& t, const Node& n) {
        Mat& gt = t.g(table);
        for (int i = 0; i < buckets.rows(); ++i)
            for (int j = 0; j < buckets.cols(); ++j)
                gt(buckets(i, j), col) += n.grad(i, j);
    };
    return r;
}

void Tape::backward(Ref scalar) {
    assert(nodes_[scalar].value.size() == 1);
    g(scalar)(0, 0) = 1.0;
    for (int i = scalar; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.grad.size() == 0) continue;  // not on any path to the loss
        if (n.back) n.back(*this, n);
        if (n.leaf) n.leaf->grad += n.grad;
    }
}

}  // namespace stb::nn
