#pragma once

#include <vector>

#include "ousb/rng.hpp"

namespace ousb {

// Fully connected net with rectifier hidden layers and identity output.
// Training works on batches (one row per sample); layers are stored as
// W (out x in) and b (out).
struct FeedForwardNet {
  std::vector<int> widths;  // [in, hidden..., out]
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static FeedForwardNet create(const std::vector<int>& widths, Rng& rng);

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
};

struct NetGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static NetGrads zeros_like(const FeedForwardNet& net);
};

// Pre-activations and activations from the forward pass, needed by backward.
struct NetTape {
  std::vector<Matrix> activations;  // activations[0] = input batch
};

Matrix net_forward(const FeedForwardNet& net, const Matrix& batch, NetTape* tape = nullptr);
Vector net_forward(const FeedForwardNet& net, double t, const Vector& x);

// Reverse pass; `upstream` is dLoss/dOutput for the batch of the tape.
NetGrads net_backward(const FeedForwardNet& net, const NetTape& tape, const Matrix& upstream);

// Decoupled weight decay Adam.
struct AdamW {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;

  void init(const FeedForwardNet& net);
  void update(FeedForwardNet& net, const NetGrads& grads);

  int64_t step = 0;
  NetGrads first_moment, second_moment;
};

}  // namespace ousb
