#include "ousb/net.hpp"

#include <cmath>

namespace ousb {

FeedForwardNet FeedForwardNet::create(const std::vector<int>& widths, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("FeedForwardNet: need at least two widths");
  FeedForwardNet net;
  net.widths = widths;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l], fan_out = widths[l + 1];
    if (fan_in <= 0 || fan_out <= 0)
      throw std::invalid_argument("FeedForwardNet: widths must be positive");
    // He-style uniform fan-in init, deterministic given the stream.
    const double limit = std::sqrt(6.0 / fan_in);
    Matrix w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = limit * (2.0 * rng.uniform() - 1.0);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(fan_out));
  }
  return net;
}

NetGrads NetGrads::zeros_like(const FeedForwardNet& net) {
  NetGrads g;
  for (int l = 0; l < net.layer_count(); ++l) {
    g.weights.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.push_back(Vector::Zero(net.biases[l].size()));
  }
  return g;
}

Matrix net_forward(const FeedForwardNet& net, const Matrix& batch, NetTape* tape) {
  if (batch.cols() != net.input_dim())
    throw std::invalid_argument("net_forward: batch width does not match input dim");
  if (tape) {
    tape->activations.clear();
    tape->activations.push_back(batch);
  }
  Matrix h = batch;
  const int layers = net.layer_count();
  for (int l = 0; l < layers; ++l) {
    Matrix z = (h * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    h = std::move(z);
    if (tape) tape->activations.push_back(h);
  }
  return h;
}

Vector net_forward(const FeedForwardNet& net, double t, const Vector& x) {
  Matrix batch(1, x.size() + 1);
  batch(0, 0) = t;
  batch.block(0, 1, 1, x.size()) = x.transpose();
  return net_forward(net, batch).row(0).transpose();
}

NetGrads net_backward(const FeedForwardNet& net, const NetTape& tape, const Matrix& upstream) {
  const int layers = net.layer_count();
  if (static_cast<int>(tape.activations.size()) != layers + 1)
    throw std::invalid_argument("net_backward: tape does not match net");
  if (upstream.rows() != tape.activations[0].rows() || upstream.cols() != net.output_dim())
    throw std::invalid_argument("net_backward: upstream shape mismatch");
  NetGrads grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  Matrix delta = upstream;
  for (int l = layers - 1; l >= 0; --l) {
    if (l + 1 < layers) {
      // Rectifier mask from the stored post-activation.
      delta = delta.cwiseProduct(
          (tape.activations[l + 1].array() > 0.0).cast<double>().matrix());
    }
    grads.weights[l] = delta.transpose() * tape.activations[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) delta = delta * net.weights[l];
  }
  return grads;
}

void AdamW::init(const FeedForwardNet& net) {
  step = 0;
  first_moment = NetGrads::zeros_like(net);
  second_moment = NetGrads::zeros_like(net);
}

void AdamW::update(FeedForwardNet& net, const NetGrads& grads) {
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (int l = 0; l < net.layer_count(); ++l) {
    auto& mw = first_moment.weights[l];
    auto& vw = second_moment.weights[l];
    mw = beta1 * mw + (1.0 - beta1) * grads.weights[l];
    vw = beta2 * vw + (1.0 - beta2) * grads.weights[l].cwiseProduct(grads.weights[l]);
    net.weights[l].array() -=
        lr * ((mw.array() / bc1) / ((vw.array() / bc2).sqrt() + eps) +
              weight_decay * net.weights[l].array());

    auto& mb = first_moment.biases[l];
    auto& vb = second_moment.biases[l];
    mb = beta1 * mb + (1.0 - beta1) * grads.biases[l];
    vb = beta2 * vb + (1.0 - beta2) * grads.biases[l].cwiseProduct(grads.biases[l]);
    net.biases[l].array() -=
        lr * ((mb.array() / bc1) / ((vb.array() / bc2).sqrt() + eps) +
              weight_decay * net.biases[l].array());
  }
}

}  // namespace ousb
