#pragma once

// Independent scalar implementation of the network, used as a test oracle.

#include "lstmtrade/lstm.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace lstm_oracle {

using lstmtrade::NetworkParams;
using Eigen::MatrixXd;
using Eigen::VectorXd;

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Tensors in for_each order: per layer w_x, w_h, bias; then dense w and b.
template <typename S>
std::vector<Mat<S>> tensors(const NetworkParams& p) {
    std::vector<Mat<S>> out;
    p.for_each([&](const std::string&, const MatrixXd& m) { out.push_back(m.cast<S>()); });
    return out;
}

template <typename S>
S sigmoid(S x) {
    return S(1) / (S(1) + std::exp(-x));
}

// Straight-line scalar reimplementation of the cell and the dense head.
template <typename S>
std::vector<S> oracle_forward(const std::vector<Mat<S>>& p, const MatrixXd& x) {
    const int T = static_cast<int>(x.rows());
    const std::size_t n_layers = (p.size() - 2) / 3;
    std::vector<std::vector<S>> input(T);
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < x.cols(); ++j) input[t].push_back(static_cast<S>(x(t, j)));
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& wx = p[3 * l];
        const auto& wh = p[3 * l + 1];
        const auto& b = p[3 * l + 2];
        const int H = static_cast<int>(wh.rows());
        const int in = static_cast<int>(wx.rows());
        std::vector<S> h(H, S(0)), c(H, S(0));
        std::vector<std::vector<S>> out(T, std::vector<S>(H));
        for (int t = 0; t < T; ++t) {
            std::vector<S> hn(H), cn(H);
            for (int u = 0; u < H; ++u) {
                S z[4];
                for (int g = 0; g < 4; ++g) {
                    S acc = b(0, g * H + u);
                    for (int j = 0; j < in; ++j) acc += input[t][j] * wx(j, g * H + u);
                    for (int j = 0; j < H; ++j) acc += h[j] * wh(j, g * H + u);
                    z[g] = acc;
                }
                const S i = sigmoid(z[0]);
                const S o = sigmoid(z[1]);
                const S f = sigmoid(z[2]);
                const S cand = std::tanh(z[3]);
                cn[u] = f * c[u] + i * cand;
                hn[u] = o * std::tanh(cn[u]);
            }
            h = hn;
            c = cn;
            out[t] = h;
        }
        input = out;
    }
    const auto& w_out = p[p.size() - 2];
    const auto& b_out = p[p.size() - 1];
    std::vector<S> y(T);
    for (int t = 0; t < T; ++t) {
        S acc = b_out.rows() == 1 ? b_out(0, 0) : b_out(t, 0);
        for (std::size_t u = 0; u < input[t].size(); ++u) acc += input[t][u] * w_out(static_cast<Eigen::Index>(u), 0);
        y[t] = acc;
    }
    return y;
}

template <typename S>
S oracle_loss(const std::vector<Mat<S>>& p, const MatrixXd& x, const VectorXd& y) {
    const auto out = oracle_forward(p, x);
    S acc = 0;
    for (std::size_t t = 0; t < out.size(); ++t) {
        const S d = out[t] - static_cast<S>(y(static_cast<Eigen::Index>(t)));
        acc += d * d;
    }
    return acc / static_cast<S>(out.size());
}

}  // namespace lstm_oracle
