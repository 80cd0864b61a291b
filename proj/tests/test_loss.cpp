#include <doctest.h>

#include "test_support.hpp"

#include <atsal/adam.hpp>
#include <atsal/loss.hpp>
#include <atsal/tape.hpp>

#include <cmath>

using namespace atsal;
using testing::random_tensor;

namespace {

using DTensor = BasicTensor<double>;

DTensor normalized(DTensor t) {
  double s = 0;
  for (double v : t.data())
    s += v;
  for (double& v : t.data())
    v /= s;
  return t;
}

double kl_oracle(const DTensor& p, const DTensor& q, double eps) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += q[i] * std::log(eps + q[i] / (eps + p[i]));
  return s;
}

double nss_oracle(const DTensor& y, const DTensor& f) {
  double mean = 0;
  for (double v : y.data())
    mean += v;
  mean /= double(y.size());
  double var = 0;
  for (double v : y.data())
    var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / double(y.size()));
  double acc = 0, n = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (f[i] > 0) {
      acc += (y[i] - mean) / sd;
      n += 1;
    }
  return -acc / n;
}

DTensor random_fixations(Shape s, std::mt19937_64& rng, double rate = 0.1) {
  DTensor f(s);
  for (double& v : f.data())
    v = testing::uniform(rng) < rate ? 1.0 : 0.0;
  f[0] = 1.0;
  return f;
}

} // namespace

TEST_CASE("kl loss examples") {
  const double eps = 1e-7;
  const DTensor u(Shape{1, 1, 4, 8}, 1.0 / 32);
  const double same = kl_loss<double>(u.data(), u.data(), eps);
  // At P = Q the exact expression is close to -(N - 1) * eps.
  CHECK(same <= 2 * eps);
  CHECK(std::abs(same) <= double(u.size()) * eps);
  CHECK(std::abs(same - kl_oracle(u, u, eps)) < 1e-15);

  DTensor p(Shape{1, 1, 1, 4}, std::vector<double>{0.0, 0.5, 0.5, 0.0});
  DTensor q(Shape{1, 1, 1, 4}, std::vector<double>{1.0, 0.0, 0.0, 0.0});
  CHECK(kl_loss<double>(p.data(), q.data(), eps) == doctest::Approx(std::log(1.0 / eps)).epsilon(1e-6));

  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const DTensor a = normalized(random_tensor<double>(Shape{1, 1, 16, 32}, rng, 0, 1));
    const DTensor b = normalized(random_tensor<double>(Shape{1, 1, 16, 32}, rng, 0, 1));
    const double k = kl_loss<double>(a.data(), b.data(), eps);
    CHECK(std::abs(k - kl_oracle(a, b, eps)) < 1e-9);
    CHECK(k >= -1e-6);
  }

  DTensor neg = u;
  neg[3] = -0.1;
  CHECK_THROWS_AS(kl_loss<double>(neg.data(), u.data(), eps), DomainError);
  CHECK_THROWS_AS(kl_loss<double>(u.data(), neg.data(), eps), DomainError);
  CHECK_THROWS_AS(kl_loss<double>(u.data(), u.data(), 0.0), ArgumentError);
  CHECK_THROWS_AS(kl_loss<double>(u.data(), p.data(), eps), DimensionError);
}

TEST_CASE("nss loss examples") {
  const DTensor y(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  const DTensor f(Shape{1, 1, 2, 2}, std::vector<double>{0, 0, 0, 1});
  CHECK(nss_loss<double>(y.data(), f.data()) == doctest::Approx(-1.5 / std::sqrt(1.25)).epsilon(1e-12));
  CHECK(nss_loss<double>(y.data(), f.data()) == doctest::Approx(-1.3416).epsilon(1e-4));

  const DTensor all(Shape{1, 1, 2, 2}, 1.0);
  CHECK(std::abs(nss_loss<double>(y.data(), all.data())) < 1e-12);

  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const DTensor m = random_tensor<double>(Shape{1, 1, 8, 16}, rng, 0, 1);
    const DTensor fx = random_fixations(m.shape(), rng);
    const double base = nss_loss<double>(m.data(), fx.data());
    CHECK(std::abs(base - nss_oracle(m, fx)) < 1e-12);
    const double a = testing::uniform(rng, 0.1, 10), b = testing::uniform(rng, -5, 5);
    DTensor t = m;
    for (double& v : t.data())
      v = a * v + b;
    CHECK(std::abs(nss_loss<double>(t.data(), fx.data()) - base) < 1e-12);
  }

  CHECK_THROWS_AS(nss_loss<double>(y.data(), DTensor(y.shape(), 0.0).data()), NoFixationsError);
  CHECK_THROWS_AS(nss_loss<double>(all.data(), f.data()), DegenerateMapError);
}

TEST_CASE("analytic loss gradients match central differences on 8x16 maps") {
  std::mt19937_64 rng(3);
  const double h = 1e-6;
  for (int trial = 0; trial < 5; ++trial) {
    const DTensor p = normalized(random_tensor<double>(Shape{1, 1, 8, 16}, rng, 0.1, 1));
    const DTensor q = normalized(random_tensor<double>(Shape{1, 1, 8, 16}, rng, 0, 1));
    const DTensor f = random_fixations(p.shape(), rng);
    const auto gk = kl_loss_gradient<double>(p.data(), q.data());
    const auto gn = nss_loss_gradient<double>(p.data(), f.data());
    double worst = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      DTensor up = p, down = p;
      up[i] += h;
      down[i] -= h;
      const double nk = (kl_loss<double>(up.data(), q.data()) - kl_loss<double>(down.data(), q.data())) / (2 * h);
      const double nn = (nss_loss<double>(up.data(), f.data()) - nss_loss<double>(down.data(), f.data())) / (2 * h);
      worst = std::max(worst, std::abs(nk - gk[i]) / std::max({std::abs(nk), std::abs(gk[i]), 1e-8}));
      worst = std::max(worst, std::abs(nn - gn[i]) / std::max({std::abs(nn), std::abs(gn[i]), 1e-8}));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("total loss gradient on the tape matches central differences") {
  std::mt19937_64 rng(4);
  ParamMap<double> params;
  params.emplace("y", random_tensor<double>(Shape{1, 1, 8, 16}, rng, -2, 2));
  params.emplace("m", random_tensor<double>(Shape{1, 1, 2, 4}, rng, -2, 2));
  const DTensor f = random_fixations(Shape{1, 1, 8, 16}, rng);
  const DTensor q1 = normalized(random_tensor<double>(Shape{1, 1, 8, 16}, rng, 0, 1));
  const DTensor q2 = normalized(random_tensor<double>(Shape{1, 1, 2, 4}, rng, 0, 1));
  auto eval = [&](const ParamMap<double>& p, ParamMap<double>* grads) {
    Tape<double> t(p);
    const LossVars l = total_loss(t, t.sigmoid(t.param("y")), t.sigmoid(t.param("m")), f, q1, q2);
    if (grads) {
      t.backward(l.total);
      *grads = t.param_grads();
    }
    return t.value(l.total)[0];
  };
  ParamMap<double> g;
  eval(params, &g);
  double worst = 0;
  for (auto& [key, value] : params)
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double orig = value[i];
      value[i] = orig + 1e-5;
      const double up = eval(params, nullptr);
      value[i] = orig - 1e-5;
      const double down = eval(params, nullptr);
      value[i] = orig;
      const double num = (up - down) / 2e-5;
      const double an = g.at(key)[i];
      worst = std::max(worst, std::abs(num - an) / std::max({std::abs(num), std::abs(an), 1e-8}));
    }
  CHECK(worst < 1e-4);
}

TEST_CASE("total loss composition") {
  std::mt19937_64 rng(5);
  SupervisionPack pack;
  pack.saliency = random_tensor(Shape{1, 1, 16, 32}, rng, 0.01, 1);
  pack.mask = random_tensor(Shape{1, 1, 1, 2}, rng, 0.01, 1);
  pack.fixations = random_fixations(Shape{1, 1, 16, 32}, rng).cast<float>();
  pack.target = random_tensor(Shape{1, 1, 16, 32}, rng, 0, 1);
  pack.mask_target = mask_target(pack.target, 1, 2);

  const LossTerms t = total_loss(pack);
  CHECK(t.total == doctest::Approx(0.8 * t.kl_saliency + 0.2 * t.nss + 0.2 * t.kl_mask).epsilon(1e-12));
  const LossTerms nb = total_loss(pack, LossWeights{0.8, 0.2, 0.0});
  CHECK(nb.total == doctest::Approx(0.8 * t.kl_saliency + 0.2 * t.nss).epsilon(1e-12));
  const LossTerms lin = total_loss(pack, LossWeights{1.5, -0.3, 2.0});
  CHECK(lin.total == doctest::Approx(1.5 * t.kl_saliency - 0.3 * t.nss + 2.0 * t.kl_mask).epsilon(1e-12));

  SupervisionPack perfect = pack;
  perfect.saliency = pack.target;
  perfect.mask = pack.mask_target;
  const LossTerms pt = total_loss(perfect);
  const double bound = 2.0 * double(pack.target.size()) * default_eps;
  CHECK(std::abs(pt.kl_saliency) < bound);
  CHECK(std::abs(pt.kl_mask) < bound);
  CHECK(std::abs(pt.total - 0.2 * pt.nss) < bound);
}

TEST_CASE("mask target is an area average renormalized") {
  Tensor q(Shape{1, 1, 4, 8});
  for (std::size_t i = 0; i < q.size(); ++i)
    q[i] = float(i);
  const Tensor m = mask_target(q, 2, 2);
  CHECK(m.shape() == Shape{1, 1, 2, 2});
  double total = 0;
  for (float v : m.data())
    total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  double block = 0;
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      block += q(0, 0, r, c);
  double all = 0;
  for (float v : q.data())
    all += v;
  CHECK(m(0, 0, 0, 0) == doctest::Approx(block / all).epsilon(1e-6));
  CHECK_THROWS_AS(mask_target(q, 3, 2), ArgumentError);
}

TEST_CASE("gradient descent on one pair reduces the saliency KL within 50 steps") {
  std::mt19937_64 rng(6);
  WeightStore params{{"y", random_tensor(Shape{1, 1, 8, 16}, rng, -1, 1)},
                     {"m", random_tensor(Shape{1, 1, 2, 4}, rng, -1, 1)}};
  const Tensor f = random_fixations(Shape{1, 1, 8, 16}, rng).cast<float>();
  const Tensor q1 = normalized(random_tensor<double>(Shape{1, 1, 8, 16}, rng, 0, 1)).cast<float>();
  const Tensor q2 = mask_target(q1, 2, 4);
  Adam adam;
  double first = 0, last = 0;
  for (std::size_t step = 1; step <= 50; ++step) {
    Tape<float> t(params);
    const LossVars l = total_loss(t, t.sigmoid(t.param("y")), t.sigmoid(t.param("m")), f, q1, q2);
    last = t.value(l.kl_saliency)[0];
    if (step == 1)
      first = last;
    t.backward(l.total);
    adam.step(params, t.param_grads(), 0.05, step);
  }
  CHECK(last < first);
}
