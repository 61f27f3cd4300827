#pragma once

#include "gtlogic/nn.hpp"

namespace gtlogic {

// Small weight-matrix builders shared by the logic-to-network compilers.
// Entries are set from integers or backend fractions; everything else is 0.

template <class B>
Mat<typename B::Value> zeros(const B& b, int rows, int cols) {
  return Mat<typename B::Value>(rows, cols, b.zero());
}

template <class B>
Mat<typename B::Value> eye(const B& b, int d) {
  auto m = zeros(b, d, d);
  for (int i = 0; i < d; ++i) m.at(i, i) = b.one();
  return m;
}

template <class B>
std::vector<typename B::Value> zero_vec(const B& b, int d) {
  return std::vector<typename B::Value>((size_t)d, b.zero());
}

template <class B>
Perceptron<typename B::Value> perceptron(const B& b, Mat<typename B::Value> W,
                                         std::vector<typename B::Value> bias, Activation act) {
  return Perceptron<typename B::Value>{std::move(W), std::move(bias), act};
}

// identity map as a one-layer MLP (exact on every backend)
template <class B>
Mlp<typename B::Value> identity_mlp(const B& b, int d) {
  Mlp<typename B::Value> m;
  m.layers.push_back(perceptron(b, eye(b, d), zero_vec(b, d), Activation::identity));
  return m;
}

// simple (relu then identity) identity map; inputs must be non-negative
template <class B>
Mlp<typename B::Value> simple_identity_mlp(const B& b, int d) {
  Mlp<typename B::Value> m;
  m.layers.push_back(perceptron(b, eye(b, d), zero_vec(b, d), Activation::relu));
  m.layers.push_back(perceptron(b, eye(b, d), zero_vec(b, d), Activation::identity));
  return m;
}

// simple MLP that outputs the zero matrix
template <class B>
Mlp<typename B::Value> zero_mlp(const B& b, int in, int out) {
  Mlp<typename B::Value> m;
  m.layers.push_back(perceptron(b, zeros(b, 1, in), zero_vec(b, 1), Activation::relu));
  m.layers.push_back(perceptron(b, zeros(b, out, 1), zero_vec(b, out), Activation::identity));
  return m;
}

// attention module whose single head and output matrix are all zero
template <class B>
AttnModule<typename B::Value> zero_attention(const B& b, int d, AttnKind kind) {
  AttnModule<typename B::Value> sa;
  sa.heads.push_back({zeros(b, d, 1), zeros(b, d, 1), zeros(b, d, 1)});
  sa.wo = zeros(b, 1, d);
  sa.kind = kind;
  return sa;
}

// classifier head reading one column: bit = [x_col > 0]
template <class B>
Mlp<typename B::Value> column_classifier(const B& b, int d, int col) {
  Mlp<typename B::Value> m;
  auto W = zeros(b, 1, d);
  W.at(0, col) = b.one();
  m.layers.push_back(perceptron(b, W, zero_vec(b, 1), Activation::relu));
  m.layers.push_back(perceptron(b, eye(b, 1), zero_vec(b, 1), Activation::identity));
  return m;
}

}  // namespace gtlogic
