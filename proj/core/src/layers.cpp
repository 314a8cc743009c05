#include "punk/layers.hpp"

#include <cmath>
#include <limits>

#include "punk/error.hpp"

namespace punk {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_input(const Matrix& tokens, int input_dim, const char* who) {
  if (tokens.rows() < 1) {
    throw ValidationError(std::string(who) + ": empty token sequence");
  }
  if (tokens.cols() != input_dim) {
    throw ValidationError(std::string(who) + ": token dim " +
                          std::to_string(tokens.cols()) + " != " +
                          std::to_string(input_dim));
  }
}

Vector sigmoid(const Vector& z) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = punk::sigmoid(z[i]);
  return out;
}

}  // namespace

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::bow: return "bow";
    case EncoderKind::cnn: return "cnn";
    case EncoderKind::lstm: return "lstm";
    case EncoderKind::gru: return "gru";
    case EncoderKind::mlp: return "mlp";
  }
  return "bow";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "bow") return EncoderKind::bow;
  if (name == "cnn") return EncoderKind::cnn;
  if (name == "lstm") return EncoderKind::lstm;
  if (name == "gru") return EncoderKind::gru;
  if (name == "mlp") return EncoderKind::mlp;
  throw ValidationError("unknown encoder kind '" + std::string(name) + "'");
}

int EncoderConfig::output_dim(int input_dim) const {
  switch (kind) {
    case EncoderKind::bow: return input_dim;
    case EncoderKind::cnn:
      return static_cast<int>(widths.size()) * kernels_per_width;
    case EncoderKind::lstm:
    case EncoderKind::gru: return 2 * hidden;
    case EncoderKind::mlp: return hidden;
  }
  return input_dim;
}

void EncoderConfig::validate() const {
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ValidationError("dropout must lie in [0, 1)");
  }
  if (kind == EncoderKind::cnn) {
    if (widths.empty() || kernels_per_width < 1) {
      throw ValidationError("cnn needs at least one width and one kernel");
    }
    for (int w : widths) {
      if (w < 1) throw ValidationError("cnn widths must be >= 1");
    }
  }
  if ((kind == EncoderKind::lstm || kind == EncoderKind::gru ||
       kind == EncoderKind::mlp) &&
      hidden <= 0) {
    throw ValidationError("hidden size must be positive");
  }
  if (kind == EncoderKind::mlp && layers < 1) {
    throw ValidationError("mlp needs at least one hidden layer");
  }
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_dim, int out_dim, Rng& rng)
    : weight(out_dim, in_dim), bias(out_dim, 1) {
  glorot_uniform(weight, rng);
}

Vector Linear::forward(const Vector& x) const {
  if (x.size() != weight.value.cols()) {
    throw ValidationError("linear: input dim " + std::to_string(x.size()) +
                          " != " + std::to_string(weight.value.cols()));
  }
  return weight.value * x + bias.vec();
}

Vector Linear::backward(const Vector& x, const Vector& grad_out) {
  weight.grad.noalias() += grad_out * x.transpose();
  bias.grad_vec() += grad_out;
  return weight.value.transpose() * grad_out;
}

void Linear::visit(const ParamVisitor& f, const std::string& prefix) {
  f(prefix + ".weight", weight);
  f(prefix + ".bias", bias);
}

// ---------------------------------------------------------------- Mlp

Mlp::Mlp(int in_dim, const std::vector<int>& hidden, int out_dim, Rng& rng) {
  int prev = in_dim;
  for (int h : hidden) {
    layers_.emplace_back(prev, h, rng);
    prev = h;
  }
  layers_.emplace_back(prev, out_dim, rng);
}

std::vector<int> Mlp::hidden_dims() const {
  std::vector<int> dims;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    dims.push_back(layers_[i].out_dim());
  }
  return dims;
}

Vector Mlp::forward(const Vector& x, Trace* trace) const {
  if (trace) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  Vector h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (trace) trace->inputs.push_back(h);
    Vector z = layers_[i].forward(h);
    if (i + 1 == layers_.size()) return z;
    if (trace) trace->pre.push_back(z);
    h = z.cwiseMax(0.0);
  }
  return h;
}

Vector Mlp::backward(const Trace& trace, const Vector& grad_out) {
  Vector g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size()) {
      const Vector& z = trace.pre[i];
      for (Eigen::Index k = 0; k < g.size(); ++k) {
        if (z[k] <= 0.0) g[k] = 0.0;
      }
    }
    g = layers_[i].backward(trace.inputs[i], g);
  }
  return g;
}

double Mlp::kink_margin(const Trace& trace) {
  double m = kInf;
  for (const auto& z : trace.pre) m = std::min(m, z.cwiseAbs().minCoeff());
  return m;
}

void Mlp::visit(const ParamVisitor& f, const std::string& prefix) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].visit(f, prefix + ".layer" + std::to_string(i));
  }
}

// ---------------------------------------------------------------- Conv

ConvTextEncoder::ConvTextEncoder(int input_dim, std::vector<int> widths,
                                 int kernels, Rng& rng)
    : input_dim_(input_dim), widths_(std::move(widths)), kernels_(kernels) {
  for (int w : widths_) {
    weights.emplace_back(kernels_, w * input_dim_);
    biases.emplace_back(kernels_, 1);
    glorot_uniform(weights.back(), rng);
  }
}

Vector ConvTextEncoder::forward(const Matrix& tokens, Trace* trace) const {
  check_input(tokens, input_dim_, "conv_text_encode");
  int max_w = 1;
  for (int w : widths_) max_w = std::max(max_w, w);
  const auto T = static_cast<int>(tokens.rows());
  const int padded = std::max(T, max_w);

  Matrix local;
  Matrix& input = trace ? trace->input : local;
  if (padded == T) {
    input = tokens;
  } else {
    input = Matrix::Zero(padded, input_dim_);
    input.topRows(T) = tokens;
  }
  if (trace) {
    trace->tokens = T;
    trace->argmax.assign(widths_.size(), std::vector<int>(kernels_, 0));
    trace->best.assign(widths_.size(), Vector());
    trace->runner_up.assign(widths_.size(), Vector());
  }

  Vector out(output_dim());
  for (std::size_t wi = 0; wi < widths_.size(); ++wi) {
    const int k = widths_[wi];
    const int n = padded - k + 1;
    Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> windows(
        input.data(), n, static_cast<Eigen::Index>(k) * input_dim_,
        Eigen::OuterStride<>(input_dim_));
    Matrix scores = windows * weights[wi].value.transpose();
    scores.rowwise() += biases[wi].vec().transpose();
    for (int c = 0; c < kernels_; ++c) {
      Eigen::Index arg = 0;
      double best = scores.col(c).maxCoeff(&arg);
      out[static_cast<Eigen::Index>(wi) * kernels_ + c] = std::max(best, 0.0);
      if (trace) {
        trace->argmax[wi][c] = static_cast<int>(arg);
        double second = -kInf;
        for (int t = 0; t < n; ++t) {
          if (t != arg) second = std::max(second, scores(t, c));
        }
        if (trace->best[wi].size() == 0) {
          trace->best[wi].resize(kernels_);
          trace->runner_up[wi].resize(kernels_);
        }
        trace->best[wi][c] = best;
        trace->runner_up[wi][c] = second;
      }
    }
  }
  return out;
}

void ConvTextEncoder::backward(const Trace& trace, const Vector& grad_out,
                               Matrix* grad_tokens) {
  const Matrix& input = trace.input;
  if (grad_tokens && (grad_tokens->rows() != trace.tokens ||
                      grad_tokens->cols() != input_dim_)) {
    *grad_tokens = Matrix::Zero(trace.tokens, input_dim_);
  }
  for (std::size_t wi = 0; wi < widths_.size(); ++wi) {
    const int k = widths_[wi];
    const Eigen::Index span = static_cast<Eigen::Index>(k) * input_dim_;
    for (int c = 0; c < kernels_; ++c) {
      double g = grad_out[static_cast<Eigen::Index>(wi) * kernels_ + c];
      if (g == 0.0 || trace.best[wi][c] <= 0.0) continue;
      const int t = trace.argmax[wi][c];
      Eigen::Map<const Vector> window(input.data() + static_cast<Eigen::Index>(t) * input_dim_, span);
      weights[wi].grad.row(c) += g * window.transpose();
      biases[wi].grad(c, 0) += g;
      if (grad_tokens) {
        for (int r = 0; r < k && t + r < trace.tokens; ++r) {
          grad_tokens->row(t + r) +=
              g * weights[wi].value.row(c).segment(static_cast<Eigen::Index>(r) * input_dim_, input_dim_);
        }
      }
    }
  }
}

double ConvTextEncoder::kink_margin(const Trace& trace) {
  double m = kInf;
  for (std::size_t wi = 0; wi < trace.best.size(); ++wi) {
    for (Eigen::Index c = 0; c < trace.best[wi].size(); ++c) {
      double best = trace.best[wi][c];
      m = std::min(m, std::abs(best));
      if (best > 0.0) m = std::min(m, best - trace.runner_up[wi][c]);
    }
  }
  return m;
}

void ConvTextEncoder::visit(const ParamVisitor& f, const std::string& prefix) {
  for (std::size_t i = 0; i < widths_.size(); ++i) {
    std::string p = prefix + ".w" + std::to_string(widths_[i]);
    f(p + ".weight", weights[i]);
    f(p + ".bias", biases[i]);
  }
}

// ---------------------------------------------------------------- RNN

RecurrentEncoder::RecurrentEncoder(CellKind cell, int input_dim, int hidden,
                                   Rng& rng)
    : cell_(cell), input_dim_(input_dim), hidden_(hidden) {
  if (hidden <= 0) throw ValidationError("rnn hidden size must be positive");
  for (Direction* d : {&forward_dir, &backward_dir}) {
    d->w = Param(gates() * hidden, input_dim);
    d->u = Param(gates() * hidden, hidden);
    d->b = Param(gates() * hidden, 1);
    glorot_uniform(d->w, rng);
    glorot_uniform(d->u, rng);
  }
}

Vector RecurrentEncoder::run(const Direction& d, const Matrix& tokens,
                             bool reverse, DirectionTrace* trace) const {
  const auto T = static_cast<int>(tokens.rows());
  const int H = hidden_;
  Matrix xw = tokens * d.w.value.transpose();
  xw.rowwise() += d.b.vec().transpose();
  Vector h = Vector::Zero(H);
  Vector c = Vector::Zero(H);
  if (trace) {
    trace->h.assign(1, h);
    trace->c.assign(1, c);
    trace->gates.clear();
    trace->recur.clear();
  }
  for (int s = 0; s < T; ++s) {
    const int t = reverse ? T - 1 - s : s;
    Vector uh = d.u.value * h;
    Vector z = xw.row(t).transpose();
    if (cell_ == CellKind::lstm) {
      z += uh;
      Vector i = sigmoid(z.segment(0, H));
      Vector f = sigmoid(z.segment(H, H));
      Vector g = z.segment(2 * H, H).array().tanh().matrix();
      Vector o = sigmoid(z.segment(3 * H, H));
      c = f.cwiseProduct(c) + i.cwiseProduct(g);
      h = o.cwiseProduct(c.array().tanh().matrix());
      if (trace) {
        Vector gates(4 * H);
        gates << i, f, g, o;
        trace->gates.push_back(std::move(gates));
        trace->c.push_back(c);
      }
    } else {
      Vector zu = sigmoid(z.segment(0, H) + uh.segment(0, H));
      Vector r = sigmoid(z.segment(H, H) + uh.segment(H, H));
      Vector a = uh.segment(2 * H, H);
      Vector n = (z.segment(2 * H, H) + r.cwiseProduct(a)).array().tanh().matrix();
      h = (Vector::Ones(H) - zu).cwiseProduct(n) + zu.cwiseProduct(h);
      if (trace) {
        Vector gates(3 * H);
        gates << zu, r, n;
        trace->gates.push_back(std::move(gates));
        trace->recur.push_back(std::move(a));
      }
    }
    if (trace) trace->h.push_back(h);
  }
  return h;
}

Vector RecurrentEncoder::forward(const Matrix& tokens, Trace* trace) const {
  check_input(tokens, input_dim_, "rnn_encode");
  if (trace) trace->input = tokens;
  Vector out(2 * hidden_);
  out.head(hidden_) = run(forward_dir, tokens, false, trace ? &trace->fwd : nullptr);
  out.tail(hidden_) = run(backward_dir, tokens, true, trace ? &trace->bwd : nullptr);
  return out;
}

void RecurrentEncoder::backprop(Direction& d, const Matrix& tokens, bool reverse,
                                const DirectionTrace& trace,
                                const Vector& grad_h, Matrix* grad_tokens) {
  const auto T = static_cast<int>(tokens.rows());
  const int H = hidden_;
  Vector dh = grad_h;
  Vector dc = Vector::Zero(H);
  for (int s = T - 1; s >= 0; --s) {
    const int t = reverse ? T - 1 - s : s;
    const Vector& h_prev = trace.h[s];
    const Vector& gates = trace.gates[s];
    Vector dz(gates.size());
    if (cell_ == CellKind::lstm) {
      auto i = gates.segment(0, H);
      auto f = gates.segment(H, H);
      auto g = gates.segment(2 * H, H);
      auto o = gates.segment(3 * H, H);
      Vector tc = trace.c[s + 1].array().tanh().matrix();
      Vector d_o = dh.cwiseProduct(tc);
      dc += dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix());
      Vector di = dc.cwiseProduct(g);
      Vector dg = dc.cwiseProduct(i);
      Vector df = dc.cwiseProduct(trace.c[s]);
      dz.segment(0, H) = di.array() * i.array() * (1.0 - i.array());
      dz.segment(H, H) = df.array() * f.array() * (1.0 - f.array());
      dz.segment(2 * H, H) = dg.array() * (1.0 - g.array().square());
      dz.segment(3 * H, H) = d_o.array() * o.array() * (1.0 - o.array());
      dc = dc.cwiseProduct(f);
      d.u.grad.noalias() += dz * h_prev.transpose();
      dh = d.u.value.transpose() * dz;
    } else {
      auto zu = gates.segment(0, H);
      auto r = gates.segment(H, H);
      auto n = gates.segment(2 * H, H);
      const Vector& a = trace.recur[s];
      Vector dn = dh.cwiseProduct((Vector::Ones(H) - zu));
      Vector dzu = dh.cwiseProduct(h_prev - n);
      Vector dh_prev = dh.cwiseProduct(zu);
      Vector dn_pre = (dn.array() * (1.0 - n.array().square())).matrix();
      Vector dr = dn_pre.cwiseProduct(a);
      Vector da = dn_pre.cwiseProduct(r);
      dz.segment(0, H) = dzu.array() * zu.array() * (1.0 - zu.array());
      dz.segment(H, H) = dr.array() * r.array() * (1.0 - r.array());
      dz.segment(2 * H, H) = dn_pre;
      Vector du(3 * H);
      du << dz.segment(0, 2 * H), da;
      d.u.grad.noalias() += du * h_prev.transpose();
      dh = dh_prev + d.u.value.transpose() * du;
    }
    d.w.grad.noalias() += dz * tokens.row(t);
    d.b.grad_vec() += dz;
    if (grad_tokens) grad_tokens->row(t) += (d.w.value.transpose() * dz).transpose();
  }
}

void RecurrentEncoder::backward(const Trace& trace, const Vector& grad_out,
                                Matrix* grad_tokens) {
  if (grad_tokens && (grad_tokens->rows() != trace.input.rows() ||
                      grad_tokens->cols() != input_dim_)) {
    *grad_tokens = Matrix::Zero(trace.input.rows(), input_dim_);
  }
  backprop(forward_dir, trace.input, false, trace.fwd, grad_out.head(hidden_), grad_tokens);
  backprop(backward_dir, trace.input, true, trace.bwd, grad_out.tail(hidden_), grad_tokens);
}

void RecurrentEncoder::visit(const ParamVisitor& f, const std::string& prefix) {
  const char* names[2] = {".fwd", ".bwd"};
  Direction* dirs[2] = {&forward_dir, &backward_dir};
  for (int i = 0; i < 2; ++i) {
    f(prefix + names[i] + ".w", dirs[i]->w);
    f(prefix + names[i] + ".u", dirs[i]->u);
    f(prefix + names[i] + ".b", dirs[i]->b);
  }
}

// ---------------------------------------------------------------- TextEncoder

TextEncoder::TextEncoder(const EncoderConfig& config, int input_dim, Rng& rng)
    : config_(config), input_dim_(input_dim) {
  config_.validate();
  switch (config_.kind) {
    case EncoderKind::bow: break;
    case EncoderKind::cnn:
      conv_ = ConvTextEncoder(input_dim, config_.widths, config_.kernels_per_width, rng);
      break;
    case EncoderKind::lstm:
      rnn_ = RecurrentEncoder(CellKind::lstm, input_dim, config_.hidden, rng);
      break;
    case EncoderKind::gru:
      rnn_ = RecurrentEncoder(CellKind::gru, input_dim, config_.hidden, rng);
      break;
    case EncoderKind::mlp:
      throw ValidationError("mlp is a head over pooled vectors, not a sequence encoder");
  }
}

Vector TextEncoder::forward(const Matrix& tokens, Trace* trace) const {
  if (trace) trace->tokens = static_cast<int>(tokens.rows());
  switch (config_.kind) {
    case EncoderKind::bow:
      check_input(tokens, input_dim_, "bow");
      return tokens.colwise().mean().transpose();
    case EncoderKind::cnn: return conv_.forward(tokens, trace ? &trace->conv : nullptr);
    default: return rnn_.forward(tokens, trace ? &trace->rnn : nullptr);
  }
}

void TextEncoder::backward(const Trace& trace, const Vector& grad_out,
                           Matrix* grad_tokens) {
  switch (config_.kind) {
    case EncoderKind::bow:
      if (grad_tokens) {
        *grad_tokens = (grad_out / static_cast<double>(trace.tokens))
                           .transpose()
                           .replicate(trace.tokens, 1);
      }
      return;
    case EncoderKind::cnn: conv_.backward(trace.conv, grad_out, grad_tokens); return;
    default: rnn_.backward(trace.rnn, grad_out, grad_tokens); return;
  }
}

double TextEncoder::kink_margin(const Trace& trace) const {
  return config_.kind == EncoderKind::cnn ? ConvTextEncoder::kink_margin(trace.conv)
                                          : kInf;
}

void TextEncoder::visit(const ParamVisitor& f, const std::string& prefix) {
  if (config_.kind == EncoderKind::cnn) conv_.visit(f, prefix + ".cnn");
  if (config_.kind == EncoderKind::lstm || config_.kind == EncoderKind::gru)
    rnn_.visit(f, prefix + "." + std::string(to_string(config_.kind)));
}

Vector dropout(const Vector& x, double rate, Rng& rng, Vector* mask) {
  if (rate <= 0.0) {
    if (mask) *mask = Vector::Ones(x.size());
    return x;
  }
  Vector m(x.size());
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < x.size(); ++i) m[i] = rng.bernoulli(rate) ? 0.0 : scale;
  Vector out = x.cwiseProduct(m);
  if (mask) *mask = std::move(m);
  return out;
}

// ---------------------------------------------------------------- init

void glorot_uniform(Param& param, Rng& rng) {
  const double fan_out = static_cast<double>(param.value.rows());
  const double fan_in = static_cast<double>(param.value.cols());
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index i = 0; i < param.value.size(); ++i) {
    param.value.data()[i] = rng.uniform(-a, a);
  }
}

}  // namespace punk
