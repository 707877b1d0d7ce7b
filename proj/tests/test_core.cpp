// Copyright 2026 The segfoley Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "segfoley/checkpoint.hpp"
#include "segfoley/nn.hpp"
#include "segfoley/optim.hpp"
#include "test_util.hpp"

using namespace segfoley;
using testutil::gradcheck;

TEST_CASE("rng determinism and serialization") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(5);
  c.normal();
  c.uniform();
  std::ostringstream os;
  os << c;
  Rng d;
  std::istringstream is(os.str());
  is >> d;
  for (int i = 0; i < 50; ++i) CHECK(c.next_u64() == d.next_u64());
}

TEST_CASE("rng derive gives independent reproducible streams") {
  Rng a = Rng::derive(7, 1, 2);
  Rng b = Rng::derive(7, 1, 2);
  Rng c = Rng::derive(7, 1, 3);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("rng uniform bounds and normal moments") {
  Rng rng(99);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::fabs(sum / n) < 0.03);
  CHECK(std::fabs(sq / n - 1.0) < 0.05);
}

TEST_CASE("autograd matmul all transpose combinations") {
  Rng rng(1);
  for (const auto [ta, tb] : {std::pair{false, false}, {true, false},
                              {false, true}, {true, true}}) {
    // product is always 4x5 with inner dimension 3
    Param<double> lhs("lhs", ta ? 3 : 4, ta ? 4 : 3);
    Param<double> rhs("rhs", tb ? 5 : 3, tb ? 3 : 5);
    ParamList<double> ps = {&lhs, &rhs};
    testutil::randomize(ps, rng);
    const MatD target = MatD::Constant(4, 5, 0.2);
    auto run = [&](bool backward) {
      Tape<double> t(backward);
      auto y = t.matmul(t.param(lhs), t.param(rhs), ta, tb);
      auto loss = t.mse(y, target);
      if (backward) t.backward(loss);
      return t.val(loss)(0, 0);
    };
    const double err = gradcheck(ps, [&] { return run(true); },
                                 [&] { return run(false); });
    CAPTURE(ta);
    CAPTURE(tb);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("autograd elementwise and reduction ops") {
  Rng rng(2);
  Param<double> a("a", 5, 6), b("b", 5, 6), row("row", 1, 6), gate("g", 1, 1);
  ParamList<double> ps = {&a, &b, &row, &gate};
  testutil::randomize(ps, rng);
  MatD target = MatD::Zero(1, 6);

  auto run = [&](bool backward) {
    Tape<double> t(backward);
    auto va = t.param(a);
    auto vb = t.param(b);
    auto x = t.hadamard(t.add(va, vb), t.sub(va, vb));
    x = t.scale(x, 0.7);
    x = t.add_rowvec(x, t.param(row));
    x = t.gelu(x);
    x = t.softmax_rows(x);
    x = t.tanh_gate(t.param(gate), x);
    auto pooled = t.mean_rows(x);
    auto loss = t.mse(pooled, target);
    if (backward) t.backward(loss);
    return t.val(loss)(0, 0);
  };
  const double err =
      gradcheck(ps, [&] { return run(true); }, [&] { return run(false); });
  CHECK(err < 1e-6);
}

TEST_CASE("autograd layernorm, slicing, concat, select_row") {
  Rng rng(3);
  Param<double> a("a", 6, 8), gain("gain", 1, 8), bias("bias", 1, 8);
  Param<double> table("table", 4, 4);
  ParamList<double> ps = {&a, &gain, &bias, &table};
  testutil::randomize(ps, rng);
  MatD target = MatD::Constant(4, 4, 0.1);

  auto run = [&](bool backward) {
    Tape<double> t(backward);
    auto x = t.layernorm_rows(t.param(a), t.param(gain), t.param(bias));
    auto left = t.slice_cols(x, 0, 4);
    auto right = t.slice_cols(x, 4, 4);
    auto top = t.slice_rows(t.add(left, right), 0, 3);
    auto tv = t.param(table);
    auto picked = t.select_row(tv, 2);
    auto stacked = t.concat_rows({top, picked});
    auto both = t.concat_cols({t.slice_cols(stacked, 0, 2), t.slice_cols(stacked, 2, 2)});
    auto loss = t.mse(both, target);
    if (backward) t.backward(loss);
    return t.val(loss)(0, 0);
  };
  const double err =
      gradcheck(ps, [&] { return run(true); }, [&] { return run(false); });
  CHECK(err < 1e-6);
}

TEST_CASE("multi-head attention matches finite differences") {
  Rng rng(4);
  MultiHeadAttention<double> mha("mha", 8, 2, rng);
  Param<double> q("q", 5, 8), kv("kv", 7, 8);
  ParamList<double> ps = {&q, &kv};
  mha.collect(ps);
  testutil::randomize({&q, &kv}, rng);
  MatD target = MatD::Zero(5, 8);

  auto run = [&](bool backward) {
    Tape<double> t(backward);
    auto y = mha.forward(t, t.param(q), t.param(kv));
    auto loss = t.mse(y, target);
    if (backward) t.backward(loss);
    return t.val(loss)(0, 0);
  };
  const double err =
      gradcheck(ps, [&] { return run(true); }, [&] { return run(false); });
  CHECK(err < 1e-5);
}

TEST_CASE("frozen params receive no gradient and no update") {
  Rng rng(5);
  Param<double> w("w", 3, 3), frozen("f", 3, 3, /*train=*/false);
  testutil::randomize({&w, &frozen}, rng);
  const MatD frozen_before = frozen.value;
  MatD target = MatD::Zero(3, 3);

  AdamW<double> opt({&w, &frozen}, {});
  opt.zero_grad();
  Tape<double> t;
  auto y = t.matmul(t.param(w), t.param(frozen));
  t.backward(t.mse(y, target));
  CHECK(frozen.grad.norm() == 0.0);
  CHECK(w.grad.norm() > 0.0);
  opt.step();
  CHECK((frozen.value - frozen_before).norm() == 0.0);
}

TEST_CASE("adamw with zero learning rate leaves parameters unchanged") {
  Rng rng(6);
  Param<double> w("w", 4, 4);
  testutil::randomize({&w}, rng);
  const MatD before = w.value;
  AdamW<double>::Options o;
  o.lr = 0.0;
  AdamW<double> opt({&w}, o);
  w.grad.setConstant(1.0);
  opt.step();
  CHECK((w.value - before).norm() == 0.0);
}

TEST_CASE("adamw default settings match the training contract") {
  AdamW<double>::Options o;
  CHECK(o.lr == doctest::Approx(1e-4));
  CHECK(o.beta1 == doctest::Approx(0.9));
  CHECK(o.beta2 == doctest::Approx(0.95));
}

TEST_CASE("adamw descends a quadratic") {
  Param<double> w("w", 1, 1);
  w.value(0, 0) = 1.0;
  AdamW<double>::Options o;
  o.lr = 0.05;
  AdamW<double> opt({&w}, o);
  for (int i = 0; i < 200; ++i) {
    opt.zero_grad();
    w.grad(0, 0) = 2.0 * w.value(0, 0);
    opt.step();
  }
  CHECK(std::fabs(w.value(0, 0)) < 0.05);
}

TEST_CASE("checkpoint param and optimizer round trip") {
  testutil::TempDir dir("ckpt");
  Rng rng(7);
  Param<double> a("m.a", 3, 4), b("m.b", 2, 2, false);
  testutil::randomize({&a, &b}, rng);
  AdamW<double> opt({&a, &b}, {});
  a.grad.setConstant(0.5);
  opt.step();

  Checkpoint ckpt;
  ckpt.set("params", serialize_params<double>({&a, &b}));
  ckpt.set("optimizer", serialize_optimizer<double>(opt));
  ckpt.set("note", "hello");
  ckpt.save(dir.file("x.ckpt"));

  Checkpoint loaded = Checkpoint::load(dir.file("x.ckpt"));
  CHECK(loaded.get("note") == "hello");

  Param<double> a2("m.a", 3, 4), b2("m.b", 2, 2);
  deserialize_params<double>(loaded.get("params"), {&a2, &b2});
  CHECK((a2.value - a.value).norm() == 0.0);
  CHECK((b2.value - b.value).norm() == 0.0);
  CHECK(b2.trainable == false);

  AdamW<double> opt2({&a2, &b2}, {});
  deserialize_optimizer<double>(loaded.get("optimizer"), opt2);
  CHECK(opt2.step_count() == opt.step_count());
  CHECK((opt2.moment1(0) - opt.moment1(0)).norm() == 0.0);
  CHECK((opt2.moment2(0) - opt.moment2(0)).norm() == 0.0);
}

TEST_CASE("checkpoint rejects shape mismatch and missing target") {
  Param<double> a("m.a", 3, 4);
  const std::string bytes = serialize_params<double>({&a});
  Param<double> wrong("m.a", 4, 3);
  CHECK_THROWS_AS(deserialize_params<double>(bytes, {&wrong}), DataError);
  Param<double> other("m.z", 3, 4);
  CHECK_THROWS_AS(deserialize_params<double>(bytes, {&other}), DataError);
}

TEST_CASE("lora-wrapped linear is exact before training") {
  Rng rng(8);
  Linear<double> lin("lin", 6, 6, rng);
  MatD x = MatD::Random(3, 6);
  Tape<double> t0(false);
  const MatD before = t0.val(lin.forward(t0, t0.input(x)));
  lin.attach_lora(2, 4.0, rng);
  CHECK(lin.w.trainable == false);
  Tape<double> t1(false);
  const MatD after = t1.val(lin.forward(t1, t1.input(x)));
  CHECK((before - after).norm() == 0.0);
}
