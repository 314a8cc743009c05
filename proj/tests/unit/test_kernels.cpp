#include <doctest.h>

#include <cmath>

#include "checks.hpp"
#include "helpers.hpp"
#include "punk/adam.hpp"
#include "punk/checkpoint.hpp"
#include "punk/error.hpp"
#include "punk/layers.hpp"

using namespace punk;
using namespace punk::testing;

TEST_CASE("encoder output dims") {
  Rng rng(1);
  ConvTextEncoder big(8, {3, 4, 5, 6}, 192, rng);
  CHECK(big.output_dim() == 768);
  CHECK(big.forward(random_matrix(rng, 2, 8)).size() == 768);  // padded to width 6
  RecurrentEncoder lstm(CellKind::lstm, 4, 384, rng);
  CHECK(lstm.output_dim() == 768);
  CHECK(lstm.forward(random_matrix(rng, 3, 4)).size() == 768);

  for (EncoderKind kind : {EncoderKind::bow, EncoderKind::cnn, EncoderKind::lstm, EncoderKind::gru}) {
    EncoderConfig cfg;
    cfg.kind = kind;
    cfg.widths = {1, 2};
    cfg.kernels_per_width = 5;
    cfg.hidden = 3;
    TextEncoder e(cfg, 6, rng);
    const int expect = kind == EncoderKind::bow ? 6 : kind == EncoderKind::cnn ? 10 : 6;
    CHECK(cfg.output_dim(6) == expect);
    CHECK(e.forward(random_matrix(rng, 4, 6)).size() == expect);
  }
}

TEST_CASE("conv_text_encode hand values") {
  Rng rng(2);
  ConvTextEncoder e(3, {1}, 1, rng);
  e.weights[0].value << 1, 0, 0;
  e.biases[0].value << 0;
  Matrix x(3, 3);
  x << 0.2, 5, 5, 0.9, -5, 1, 0.1, 2, 2;
  CHECK(e.forward(x)(0) == doctest::Approx(0.9));

  e.weights[0].value << 0.5, -1, 2;
  e.biases[0].value << -0.25;
  Matrix one(1, 3);
  one << 1, 2, 0.5;
  CHECK(e.forward(one)(0) == doctest::Approx(std::max(0.0, 0.5 - 2 + 1 - 0.25)));
  one << 1, -2, 0.5;
  CHECK(e.forward(one)(0) == doctest::Approx(0.5 + 2 + 1 - 0.25));
  CHECK_THROWS(e.forward(Matrix::Zero(2, 4)));
}

TEST_CASE("rnn_encode") {
  Rng rng(3);
  RecurrentEncoder lstm(CellKind::lstm, 3, 4, rng);
  lstm.visit([](const std::string&, Param& p) { p.value.setZero(); }, "x");
  CHECK(lstm.forward(random_matrix(rng, 5, 3)).cwiseAbs().maxCoeff() == 0.0);

  // Scalar GRU, hand-unrolled for two steps.
  RecurrentEncoder gru(CellKind::gru, 1, 1, rng);
  for (auto* d : {&gru.forward_dir, &gru.backward_dir}) {
    d->w.value << 0.5, -0.3, 0.8;
    d->u.value << 0.2, 0.4, -0.6;
    d->b.value << 0.1, 0.0, -0.2;
  }
  auto sig = [](double v) { return 1 / (1 + std::exp(-v)); };
  auto step = [&](double h, double x) {
    const double z = sig(0.5 * x + 0.1 + 0.2 * h);
    const double r = sig(-0.3 * x + 0.4 * h);
    const double n = std::tanh(0.8 * x - 0.2 + r * (-0.6 * h));
    return (1 - z) * n + z * h;
  };
  Matrix x(2, 1);
  x << 1.0, -2.0;
  Vector out = gru.forward(x);
  CHECK(out(0) == doctest::Approx(step(step(0, 1.0), -2.0)).epsilon(1e-12));
  CHECK(out(1) == doctest::Approx(step(step(0, -2.0), 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(RecurrentEncoder(CellKind::gru, 1, 0, rng), ValidationError);
}

TEST_CASE("mlp_forward") {
  Rng rng(4);
  Mlp id(3, {3}, 3, rng);
  for (auto& l : id.layers()) {
    l.weight.value = Matrix::Identity(3, 3);
    l.bias.value.setZero();
  }
  Vector x(3);
  x << 0.5, 0, 2;
  CHECK(id.forward(x) == x);

  Mlp deep(1536, {512, 512, 512}, 1, rng);
  CHECK(deep.hidden_dims() == std::vector<int>{512, 512, 512});

  Mlp two(4, {6}, 2, rng);
  Vector in = random_vector(rng, 4);
  const auto& L = two.layers();
  Vector h(6);
  for (int o = 0; o < 6; ++o) {
    double s = L[0].bias.value(o, 0);
    for (int i = 0; i < 4; ++i) s += L[0].weight.value(o, i) * in(i);
    h(o) = std::max(0.0, s);
  }
  Vector expect(2);
  for (int o = 0; o < 2; ++o) {
    double s = L[1].bias.value(o, 0);
    for (int i = 0; i < 6; ++i) s += L[1].weight.value(o, i) * h(i);
    expect(o) = s;
  }
  CHECK((two.forward(in) - expect).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS(two.forward(random_vector(rng, 5)));
}

namespace {
struct Scalar {
  Param p{1, 1};
  void visit(const ParamVisitor& f) { f("p", p); }
};
}  // namespace

TEST_CASE("adam_step") {
  Scalar s;
  s.p.value(0, 0) = 1.0;
  Adam adam;
  adam.step(s);
  CHECK(s.p.value(0, 0) == 1.0);

  s.p.grad(0, 0) = 1.0;
  Adam fresh;
  fresh.step(s);
  CHECK(s.p.value(0, 0) == doctest::Approx(1 - 1e-3 / (1 + 1e-8)).epsilon(1e-14));

  Scalar a, b;
  Adam oa, ob;
  for (int i = 0; i < 20; ++i) {
    a.p.grad(0, 0) = b.p.grad(0, 0) = std::sin(i);
    oa.step(a);
    ob.step(b);
  }
  CHECK(a.p.value(0, 0) == b.p.value(0, 0));

  s.p.grad(0, 0) = std::nan("");
  const double before = s.p.value(0, 0);
  CHECK_THROWS_WITH(fresh.step(s), doctest::Contains("p"));
  CHECK(s.p.value(0, 0) == before);
}

TEST_CASE("grad_check basics") {
  std::vector<double> point = {0.3, -1.2};
  std::vector<double> zero = {0, 0};
  auto r = grad_check([](std::span<const double>) { return 4.0; }, point, zero);
  CHECK(r.max_rel_error == 0.0);
  std::vector<double> wrong = {1, 1};
  auto bad = grad_check([](std::span<const double> x) { return x[0] * x[1]; }, point, wrong);
  CHECK(bad.max_rel_error > 0.1);
}

TEST_CASE("gradients of every building block") {
  for (const auto& s : run_grad_checks(3, 17)) {
    CAPTURE(s.name);
    CHECK(s.compared > 0);
    CHECK(s.max_error < 1e-4);
  }
}

TEST_CASE("gradient with respect to inputs") {
  Rng rng(8);
  for (EncoderKind kind : {EncoderKind::bow, EncoderKind::cnn, EncoderKind::lstm, EncoderKind::gru}) {
    EncoderConfig cfg;
    cfg.kind = kind;
    cfg.widths = {1, 2};
    cfg.kernels_per_width = 3;
    cfg.hidden = 3;
    TextEncoder e(cfg, 4, rng);
    Matrix x = random_matrix(rng, 4, 4);
    Vector c = random_vector(rng, e.output_dim());
    TextEncoder::Trace tr;
    e.forward(x, &tr);
    Matrix gx;
    e.backward(tr, c, &gx);
    std::vector<double> point(x.data(), x.data() + x.size());
    std::vector<double> analytic(gx.data(), gx.data() + gx.size());
    GradCheckOptions opt;
    opt.kink_margin = [&](std::span<const double> v) {
      Matrix m = Eigen::Map<const Matrix>(v.data(), x.rows(), x.cols());
      TextEncoder::Trace t;
      e.forward(m, &t);
      return e.kink_margin(t);
    };
    auto r = grad_check(
        [&](std::span<const double> v) {
          return c.dot(e.forward(Eigen::Map<const Matrix>(v.data(), x.rows(), x.cols())));
        },
        point, analytic, opt);
    CAPTURE(to_string(kind));
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("dropout") {
  Rng a(5), b(5);
  Vector x = Vector::Ones(1000);
  Vector m1, m2;
  Vector y1 = dropout(x, 0.2, a, &m1), y2 = dropout(x, 0.2, b, &m2);
  CHECK(y1 == y2);
  const double dropped = (y1.array() == 0).count();
  CHECK(dropped > 150);
  CHECK(dropped < 250);
  CHECK((y1.array() == 0 || y1.array() == 1.25).all());
  Rng c(1);
  CHECK(dropout(x, 0.0, c, nullptr) == x);
}

TEST_CASE("checkpoint round trip") {
  TempDir dir("ckpt");
  Rng rng(6);
  Mlp m(3, {4}, 2, rng);
  Wrapped<Mlp> w{m};
  round_to_storage(w);
  Checkpoint ck = Checkpoint::capture({{"kind", "mlp"}, {"note", "x"}}, w);
  save_checkpoint(ck, dir / "m.ckpt");
  Checkpoint back = load_checkpoint(dir / "m.ckpt");
  CHECK(back.kind() == "mlp");
  Rng other(99);
  Mlp m2(3, {4}, 2, other);
  Wrapped<Mlp> w2{m2};
  back.restore(w2);
  Vector x = random_vector(rng, 3);
  CHECK(m.forward(x) == m2.forward(x));
  Mlp wrong(3, {5}, 2, other);
  Wrapped<Mlp> w3{wrong};
  CHECK_THROWS_AS(back.restore(w3), ValidationError);
}
