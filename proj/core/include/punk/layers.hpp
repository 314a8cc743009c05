#pragma once

#include <string>
#include <vector>

#include "punk/tensor.hpp"

namespace punk {

enum class EncoderKind { bow, cnn, lstm, gru, mlp };

std::string_view to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::bow;
  std::vector<int> widths = {3, 4, 5, 6};  // cnn
  int kernels_per_width = 192;             // cnn
  int hidden = 384;                        // lstm/gru per direction, mlp width
  int layers = 3;                          // mlp hidden layers
  double dropout = 0.0;

  // bow: input_dim; cnn: |widths| * kernels; rnn: 2 * hidden; mlp: hidden.
  int output_dim(int input_dim) const;
  void validate() const;
};

class Linear {
 public:
  Linear() = default;
  Linear(int in_dim, int out_dim, Rng& rng);

  int in_dim() const { return static_cast<int>(weight.value.cols()); }
  int out_dim() const { return static_cast<int>(weight.value.rows()); }

  Vector forward(const Vector& x) const;
  // Accumulates dW, db; returns dL/dx.
  Vector backward(const Vector& x, const Vector& grad_out);

  void visit(const ParamVisitor& f, const std::string& prefix);

  Param weight;  // out x in
  Param bias;    // out x 1
};

// Affine + ReLU for each hidden layer, then a final affine with no
// activation (the caller's head applies its own).
class Mlp {
 public:
  struct Trace {
    std::vector<Vector> inputs;  // input of every affine layer
    std::vector<Vector> pre;     // pre-activations of hidden layers
  };

  Mlp() = default;
  Mlp(int in_dim, const std::vector<int>& hidden, int out_dim, Rng& rng);

  Vector forward(const Vector& x, Trace* trace = nullptr) const;
  Vector backward(const Trace& trace, const Vector& grad_out);

  std::vector<int> hidden_dims() const;
  int in_dim() const { return layers_.front().in_dim(); }
  int out_dim() const { return layers_.back().out_dim(); }
  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }

  // Smallest |pre-activation| of any hidden unit (distance to a ReLU kink).
  static double kink_margin(const Trace& trace);

  void visit(const ParamVisitor& f, const std::string& prefix);

 private:
  std::vector<Linear> layers_;
};

// Multi-width 1-D convolution over token rows, ReLU, max over time.
// Output is ordered (width, kernel).
class ConvTextEncoder {
 public:
  struct Trace {
    Matrix input;                  // right zero-padded to the widest filter
    int tokens = 0;                // unpadded length
    std::vector<std::vector<int>> argmax;   // [width][kernel] window index
    std::vector<Vector> best;      // [width] max window score per kernel
    std::vector<Vector> runner_up; // [width] second-best score (or +inf)
  };

  ConvTextEncoder() = default;
  ConvTextEncoder(int input_dim, std::vector<int> widths, int kernels, Rng& rng);

  int input_dim() const { return input_dim_; }
  int output_dim() const {
    return static_cast<int>(widths_.size()) * kernels_;
  }
  const std::vector<int>& widths() const { return widths_; }
  int kernels() const { return kernels_; }

  Vector forward(const Matrix& tokens, Trace* trace = nullptr) const;
  void backward(const Trace& trace, const Vector& grad_out,
                Matrix* grad_tokens = nullptr);

  // Distance to the nearest ReLU or max-pooling switch.
  static double kink_margin(const Trace& trace);

  void visit(const ParamVisitor& f, const std::string& prefix);

  std::vector<Param> weights;  // per width: kernels x (width * input_dim)
  std::vector<Param> biases;   // per width: kernels x 1

 private:
  int input_dim_ = 0;
  std::vector<int> widths_;
  int kernels_ = 0;
};

enum class CellKind { lstm, gru };

// One-layer bidirectional LSTM/GRU; returns [forward final h; backward
// final h]. LSTM gates are stacked (input, forget, cell, output); GRU gates
// (update, reset, candidate) with n = tanh(W_n x + b_n + r * (U_n h)).
class RecurrentEncoder {
 public:
  struct Direction {
    Param w;  // gates*hidden x input
    Param u;  // gates*hidden x hidden
    Param b;  // gates*hidden x 1
  };
  struct DirectionTrace {
    std::vector<Vector> h;      // T+1 states, h[0] = 0
    std::vector<Vector> c;      // LSTM cell states, T+1
    std::vector<Vector> gates;  // activated gates per step
    std::vector<Vector> recur;  // GRU: U_n h_{t-1} per step
  };
  struct Trace {
    Matrix input;
    DirectionTrace fwd;
    DirectionTrace bwd;
  };

  RecurrentEncoder() = default;
  RecurrentEncoder(CellKind cell, int input_dim, int hidden, Rng& rng);

  int output_dim() const { return 2 * hidden_; }
  int hidden() const { return hidden_; }
  CellKind cell() const { return cell_; }

  Vector forward(const Matrix& tokens, Trace* trace = nullptr) const;
  void backward(const Trace& trace, const Vector& grad_out,
                Matrix* grad_tokens = nullptr);

  void visit(const ParamVisitor& f, const std::string& prefix);

  Direction forward_dir;
  Direction backward_dir;

 private:
  int gates() const { return cell_ == CellKind::lstm ? 4 : 3; }
  Vector run(const Direction& d, const Matrix& tokens, bool reverse,
             DirectionTrace* trace) const;
  void backprop(Direction& d, const Matrix& tokens, bool reverse,
                const DirectionTrace& trace, const Vector& grad_h,
                Matrix* grad_tokens);

  CellKind cell_ = CellKind::lstm;
  int input_dim_ = 0;
  int hidden_ = 0;
};

// Sequence-to-vector encoder selected by EncoderConfig (bow, cnn, lstm, gru).
class TextEncoder {
 public:
  struct Trace {
    ConvTextEncoder::Trace conv;
    RecurrentEncoder::Trace rnn;
    int tokens = 0;
  };

  TextEncoder() = default;
  TextEncoder(const EncoderConfig& config, int input_dim, Rng& rng);

  const EncoderConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return config_.output_dim(input_dim_); }

  Vector forward(const Matrix& tokens, Trace* trace = nullptr) const;
  void backward(const Trace& trace, const Vector& grad_out,
                Matrix* grad_tokens = nullptr);
  double kink_margin(const Trace& trace) const;

  void visit(const ParamVisitor& f, const std::string& prefix);

  ConvTextEncoder& conv() { return conv_; }
  RecurrentEncoder& rnn() { return rnn_; }

 private:
  EncoderConfig config_;
  int input_dim_ = 0;
  ConvTextEncoder conv_;
  RecurrentEncoder rnn_;
};

// Inverted dropout on encoder outputs. Returns x unchanged when rate == 0;
// otherwise draws a keep mask from `rng` and scales kept units by 1/(1-rate).
Vector dropout(const Vector& x, double rate, Rng& rng, Vector* mask);

}  // namespace punk
