#include <doctest.h>

#include <cmath>
#include <vector>

#include "nargis/tensor.hpp"
#include "support/compositions.hpp"

using namespace nargis;

namespace {

// Independent slow-path oracle used before trusting backward(): analytic
// gradient of f(x) = sum(x * x) is 2x.
TEST_CASE("finite difference harness agrees with a hand-derived gradient") {
  Rng rng = make_rng(11);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::vector<double> data(12);
  for (double& v : data) v = val(rng);
  Tensor x = Tensor::from_rows(3, 4, data);

  auto f = [](Tape& tape, const Tensor& t) {
    return ops::sum(tape, ops::mul(tape, t, t));
  };
  const FdReport report = finite_difference_check(f, x, 1e-5);
  CHECK(report.max_rel_error < 1e-6);

  Tensor leaf = x.clone();
  leaf.set_requires_grad(true);
  Tape tape;
  GradMap grads = tape.backward(f(tape, leaf));
  const Tensor& g = grads.at(leaf.key());
  for (int i = 0; i < x.size(); ++i)
    CHECK(g.values()[i] == doctest::Approx(2.0 * data[i]).epsilon(1e-12));
}

TEST_CASE("gradient of a constant function is zero") {
  auto f = [](Tape& tape, const Tensor& t) {
    (void)t;
    return ops::sum(tape, Tensor::full(2, 2, 3.0));
  };
  const FdReport report = finite_difference_check(f, Tensor::full(2, 3, 1.0));
  CHECK(report.max_rel_error == doctest::Approx(0.0));
}

TEST_CASE("elementwise forward values") {
  Tape tape;
  const Tensor r = ops::relu(tape, Tensor::row_vector({-1.0, 2.0}));
  CHECK(r.at(0, 0) == 0.0);
  CHECK(r.at(0, 1) == 2.0);

  const Tensor s = ops::row_softmax(tape, Tensor::zeros(1, 4));
  for (int j = 0; j < 4; ++j) CHECK(s.at(0, j) == doctest::Approx(0.25).epsilon(1e-15));

  const Tensor l = ops::log(tape, Tensor::scalar(0.0));
  CHECK(l.item() == doctest::Approx(std::log(1e-12)));
}

TEST_CASE("softmax rows are distributions") {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> val(-30.0, 30.0);
  std::vector<double> data(35);
  for (double& v : data) v = val(rng);
  Tape tape;
  const Tensor s = ops::row_softmax(tape, Tensor::from_rows(5, 7, data));
  for (int i = 0; i < 5; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 7; ++j) {
      CHECK(s.at(i, j) > 0.0);
      acc += s.at(i, j);
    }
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("matmul shapes and mismatch") {
  Tape tape;
  const Tensor a = Tensor::full(2, 3, 1.0);
  const Tensor b = Tensor::full(3, 1, 2.0);
  const Tensor c = ops::matmul(tape, a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 1);
  CHECK(c.at(0, 0) == doctest::Approx(6.0));
  CHECK_THROWS_AS(ops::matmul(tape, a, a), ShapeMismatch);
}

TEST_CASE("product rule through backward") {
  Tensor x = Tensor::scalar(3.0);
  Tensor y = Tensor::scalar(-2.5);
  x.set_requires_grad(true);
  y.set_requires_grad(true);
  Tape tape;
  GradMap grads = tape.backward(ops::mul(tape, x, y));
  CHECK(grads.at(x.key()).item() == doctest::Approx(-2.5));
  CHECK(grads.at(y.key()).item() == doctest::Approx(3.0));
}

TEST_CASE("relu gradient vanishes on the negative side") {
  Tensor x = Tensor::scalar(-3.0);
  x.set_requires_grad(true);
  Tape tape;
  GradMap grads = tape.backward(ops::sum(tape, ops::relu(tape, x)));
  CHECK(grads.at(x.key()).item() == 0.0);
}

TEST_CASE("composite chain matches finite differences") {
  Rng rng = make_rng(29);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<double> xd(25), wd(25);
  for (double& v : xd) v = val(rng);
  for (double& v : wd) v = val(rng);
  const Tensor w = Tensor::from_rows(5, 5, wd);

  auto f = [w](Tape& tape, const Tensor& x) {
    Tensor h = ops::matmul(tape, x, w);
    h = ops::relu(tape, h);
    h = ops::row_softmax(tape, h);
    h = ops::log(tape, h);
    return ops::sum(tape, h);
  };
  const FdReport report = finite_difference_check(f, Tensor::from_rows(5, 5, xd));
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("fifty random op compositions match finite differences") {
  auto cases = testsupport::random_compositions(50, 20240717);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CAPTURE(i);
    const FdReport report = finite_difference_check(cases[i].fn, cases[i].point);
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("slice, gather and concat round trips with gradients") {
  Rng rng = make_rng(7);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<double> data(12);
  for (double& v : data) v = val(rng);
  const Tensor x = Tensor::from_rows(4, 3, data);

  Tape tape;
  const Tensor top = ops::row_slice(tape, x, 0, 2);
  const Tensor bottom = ops::row_slice(tape, x, 2, 2);
  const Tensor glued = ops::concat_rows(tape, top, bottom);
  CHECK(glued.values() == x.values());

  const Tensor picked = ops::gather_rows(tape, x, {3, 0, 3});
  CHECK(picked.at(0, 0) == x.at(3, 0));
  CHECK(picked.at(1, 2) == x.at(0, 2));

  auto f = [](Tape& t, const Tensor& in) {
    Tensor g = ops::gather_rows(t, in, {1, 1, 2});
    Tensor s = ops::row_slice(t, in, 0, 2);
    return ops::add(t, ops::mean(t, g), ops::sum(t, ops::mul(t, s, s)));
  };
  CHECK(finite_difference_check(f, x).max_rel_error < 1e-4);
}

TEST_CASE("dropout identity paths") {
  Rng rng = make_rng(3);
  Tape tape;
  const Tensor x = Tensor::full(3, 3, 2.0);
  CHECK(ops::dropout(tape, x, 0.0, rng, true).values() == x.values());
  CHECK(ops::dropout(tape, x, 0.5, rng, false).values() == x.values());
  CHECK_THROWS_AS(ops::dropout(tape, x, 1.0, rng, true), BadParams);
}

TEST_CASE("dropout keeps or scales each entry") {
  Rng rng = make_rng(41);
  Tape tape;
  const Tensor x = Tensor::full(20, 20, 1.0);
  const Tensor y = ops::dropout(tape, x, 0.5, rng, true);
  int kept = 0;
  for (double v : y.values()) {
    const bool zero = v == 0.0;
    const bool scaled = v == doctest::Approx(2.0);
    CHECK((zero || scaled));
    kept += scaled ? 1 : 0;
  }
  // 400 coin flips at p = 0.5: 4 sigma is 40.
  CHECK(std::abs(kept - 200) < 40);
}

TEST_CASE("adam leaves parameters alone with zero gradients and no decay") {
  Tensor p = Tensor::from_rows(2, 2, {1.0, -2.0, 3.0, 0.5});
  const std::vector<double> before = p.values();
  AdamState state(AdamConfig{.lr = 0.01});
  GradMap grads;
  grads.emplace(p.key(), Tensor::zeros(2, 2));
  Tensor* params[] = {&p};
  adam_step(params, grads, state);
  CHECK(p.values() == before);
}

TEST_CASE("first adam step moves by roughly lr times sign of gradient") {
  Tensor p = Tensor::from_rows(1, 3, {0.0, 0.0, 0.0});
  AdamState state(AdamConfig{.lr = 0.01});
  GradMap grads;
  grads.emplace(p.key(), Tensor::from_rows(1, 3, {0.3, -2.0, 0.01}));
  Tensor* params[] = {&p};
  adam_step(params, grads, state);
  CHECK(std::abs(p.values()[0] - (-0.01)) < 1e-6);
  CHECK(std::abs(p.values()[1] - 0.01) < 1e-6);
  CHECK(std::abs(p.values()[2] - (-0.01)) < 1e-6);
}

TEST_CASE("adam with zero learning rate is bit stable") {
  Tensor p = Tensor::from_rows(1, 2, {0.25, -0.75});
  const std::vector<double> before = p.values();
  AdamState state(AdamConfig{.lr = 0.0, .weight_decay = 5e-4});
  GradMap grads;
  grads.emplace(p.key(), Tensor::from_rows(1, 2, {1.0, 1.0}));
  Tensor* params[] = {&p};
  adam_step(params, grads, state);
  adam_step(params, grads, state);
  CHECK(p.values() == before);
}

TEST_CASE("coupled weight decay pulls parameters toward zero") {
  Tensor p = Tensor::from_rows(1, 1, {10.0});
  AdamState state(AdamConfig{.lr = 0.1, .weight_decay = 1.0});
  GradMap grads;  // no entry: zero gradient, decay only
  Tensor* params[] = {&p};
  for (int i = 0; i < 50; ++i) adam_step(params, grads, state);
  CHECK(std::abs(p.values()[0]) < 10.0 * 0.7);
  CHECK(p.values()[0] > 0.0);
}

TEST_CASE("tape guards") {
  Tensor x = Tensor::full(2, 2, 1.0);
  x.set_requires_grad(true);
  Tape tape;
  const Tensor y = ops::mul(tape, x, x);
  CHECK_THROWS_AS(tape.backward(y), NotScalar);

  CHECK_THROWS_AS(tape.backward(Tensor::scalar(1.0)), DetachedTensor);

  const Tensor loss = ops::sum(tape, y);
  (void)tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), Error);

  tape.reset();
  // After reset the old handle is stale; ops treat it as a constant.
  Tape tape2;
  const Tensor z = ops::scale(tape2, y.detached(), 2.0);
  CHECK(z.at(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("scalar access and construction guards") {
  CHECK_THROWS_AS(Tensor::full(2, 2, 0.0).item(), NotScalar);
  CHECK_THROWS_AS(Tensor::from_rows(2, 2, {1.0}), ShapeMismatch);
  CHECK(Tensor::scalar(4.5).item() == 4.5);
}

TEST_CASE("glorot uniform respects its bound") {
  Rng rng = make_rng(9);
  const Tensor w = Tensor::glorot_uniform(30, 10, rng);
  const double bound = std::sqrt(6.0 / 40.0);
  for (double v : w.values()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("same seed gives identical initialization") {
  Rng a = make_rng(123), b = make_rng(123);
  CHECK(Tensor::glorot_uniform(4, 4, a).values() ==
        Tensor::glorot_uniform(4, 4, b).values());
}

}  // namespace
