#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "tscale/calculus.hpp"

using namespace tscale;
using testing::points;

namespace {

ScaleFunction fx(const TimeScale& ts, const char* text) { return ScaleFunction::from_expr(ts, parse_expr(text)); }

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

const char* const kExprs[] = {"t^2",         "t^3 - 2*t",      "sin(t)",        "cos(2*t) + t", "exp(t/3)",
                              "1/(2 + t^2)", "t^4 - t^3 + 1",  "sin(t)*cos(t)", "7",            "t*exp(-t^2)",
                              "t^5",         "cos(t)^3",       "3*t - 1",       "sqrt(4 + t^2)", "log(9 + t^2)",
                              "(t - 1)^2",   "sin(3*t) - t/2", "exp(sin(t))",   "t^2*cos(t)",   "1/(1 + exp(-t))",
                              "t^6/720",     "t^4/(5 + t^2)"};

}  // namespace

TEST_CASE("delta derivative examples") {
  const auto z = points({0, 1, 2, 3, 4});
  auto d = delta_derivative(fx(z, "t^2"), 2);
  CHECK(d.value == 5);
  CHECK(d.method == DerivativeMethod::ScatteredQuotient);

  d = delta_derivative(fx(TimeScale::make({{0, 1}}), "t^2"), 0.5);
  CHECK(d.value == 1.0);
  CHECK(d.method == DerivativeMethod::DenseSymbolic);

  d = delta_derivative(fx(TimeScale::make({{0, 1}, {2, 2}}), "t^2"), 1);
  CHECK(d.value == 3);
  CHECK(d.method == DerivativeMethod::ScatteredQuotient);

  // at a left-dense supremum the delta derivative is one-sided and classical
  d = delta_derivative(fx(TimeScale::make({{0, 1}}), "t^2"), 1);
  CHECK(d.value == 2);
}

TEST_CASE("nabla derivative examples") {
  const auto z = points({0, 1, 2, 3, 4});
  CHECK(nabla_derivative(fx(z, "t^2"), 2).value == 3);

  auto d = nabla_derivative(fx(TimeScale::make({{1, 2}}), "1/t"), 1.5);
  CHECK(d.value == doctest::Approx(-1 / 2.25).epsilon(1e-15));

  const auto mixed = TimeScale::make({{1, 1}, {1.5, 2}});
  d = nabla_derivative(fx(mixed, "1/t"), 1.5);
  CHECK(d.method == DerivativeMethod::ScatteredQuotient);
  CHECK(d.value == doctest::Approx(-1 / 1.5).epsilon(1e-15));
}

TEST_CASE("kappa violations") {
  const auto ts = TimeScale::make({{0, 1}, {2, 2}});
  CHECK(code_of([&] { delta_derivative(fx(ts, "t"), 2); }) == ErrorCode::OutsideKappa);
  CHECK(code_of([&] { nabla_derivative(fx(ts.dual(), "t"), -2); }) == ErrorCode::OutsideKappa);
  CHECK(code_of([&] { delta_derivative(fx(ts, "t"), 1.5); }) == ErrorCode::NotMember);
}

TEST_CASE("sample-form functions") {
  const auto z = points({0, 1, 2, 3});
  const auto f = ScaleFunction::from_samples(z, {{3, 9}, {0, 0}, {1, 1}, {2, 4}});
  CHECK(f.value(2) == 4);
  CHECK(delta_derivative(f, 1).value == 3);
  CHECK(nabla_derivative(f, 1).value == 1);
  CHECK(code_of([&] { f.value(0.5); }) == ErrorCode::MissingSample);

  const auto gappy = ScaleFunction::from_samples(z, {{0, 0}, {1, 1}, {3, 9}});
  CHECK(code_of([&] { delta_derivative(gappy, 1); }) == ErrorCode::MissingSample);

  // dense samples use a same-segment interpolation stencil
  const auto dense = TimeScale::make({{0, 1}, {2, 2}});
  std::vector<std::pair<double, double>> s;
  for (double t : dense.grid(0, 2, 0.01)) s.push_back({t, std::sin(t)});
  const auto g = ScaleFunction::from_samples(dense, s);
  const auto d = delta_derivative(g, 0.5);
  CHECK(d.method == DerivativeMethod::DenseNumeric);
  CHECK(d.value == doctest::Approx(std::cos(0.5)).epsilon(1e-8));
  CHECK(nabla_derivative(g, 1).value == doctest::Approx(std::cos(1.0)).epsilon(1e-7));
  CHECK(delta_derivative(g, 1).value == doctest::Approx(std::sin(2.0) - std::sin(1.0)).epsilon(1e-15));
}

TEST_CASE("dual functions") {
  const auto z = points({0, 1, 2, 3});
  const auto f = fx(z, "t^2");
  const auto fs = dualize_function(f);
  CHECK(fs.scale() == z.dual());
  for (double s : {-3.0, -2.0, -1.0, 0.0}) CHECK(fs.value(s) == s * s);
  const auto cube = dualize_function(fx(z, "t^3"));
  CHECK(cube.value(-2) == 8);
  CHECK(cube.expression().eval(Env{1.5}) == -1.5 * 1.5 * 1.5);

  const auto sf = ScaleFunction::from_samples(z, {{0, 5}, {1, -1}, {2, 7}, {3, 2}});
  const auto sd = dualize_function(sf);
  CHECK(dualize_function(sd) == sf);
  // same multiset of values, re-keyed by negation
  for (auto [t, y] : sf.samples()) CHECK(sd.value(-t) == y);
  CHECK(sd.samples().size() == sf.samples().size());
}

TEST_CASE("derivative duality examples") {
  const auto z = points({-2, -1, 0, 1, 2});
  const std::vector pts{1.0};
  auto r = check_derivative_duality(fx(z, "t^2"), pts, Mode::Delta);
  REQUIRE(r.size() == 1);
  CHECK(r[0].lhs == 3);
  CHECK(r[0].rhs == -3);
  CHECK(r[0].residual == 0);
  CHECK(r[0].scattered);

  const std::vector dense_pt{0.3};
  r = check_derivative_duality(fx(TimeScale::make({{0, 1}}), "sin(t)"), dense_pt, Mode::Delta);
  CHECK(std::abs(r[0].residual) <= 1e-6);
  CHECK_FALSE(r[0].scattered);

  r = check_derivative_duality(fx(z, "4"), pts, Mode::Nabla);
  CHECK(r[0].lhs == 0);
  CHECK(r[0].residual == 0);
}

TEST_CASE("property: derivative duality over mixed scales") {
  std::mt19937 rng(17);
  int scales = 0, scattered = 0, dense = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto ts = testing::random_scale(rng, 4);
    if (ts.inf() == ts.sup()) continue;
    ++scales;
    for (const char* text : kExprs) {
      const auto f = fx(ts, text);
      for (Mode mode : {Mode::Delta, Mode::Nabla}) {
        const auto kappa = ts.trim_kappa(mode == Mode::Delta ? KappaSide::Upper : KappaSide::Lower);
        const auto pts = testing::sample_points(kappa);
        for (const auto& r : check_derivative_duality(f, pts, mode)) {
          CAPTURE(text);
          CAPTURE(r.t);
          if (r.scattered) {
            CHECK(r.residual == 0.0);
            ++scattered;
          } else {
            CHECK(std::abs(r.residual) <= 1e-6);
            ++dense;
          }
        }
      }
    }
  }
  CHECK(scales >= 20);
  CHECK(scattered > 0);
  CHECK(dense > 0);
}

TEST_CASE("property: dense derivatives coincide with the classical one") {
  const auto ts = TimeScale::make({{0, 2}});
  for (const char* text : kExprs) {
    const auto f = fx(ts, text);
    const Expr d = diff_expr(parse_expr(text), Variable::time());
    for (double t : {0.25, 0.5, 1.0, 1.75}) {
      CHECK(delta_derivative(f, t).value == d.eval(Env{t}));
      CHECK(nabla_derivative(f, t).value == d.eval(Env{t}));
    }
  }
}

TEST_CASE("property: discrete derivatives are the plain quotients") {
  const auto ts = points({0, 0.5, 1.25, 2, 4});
  for (const char* text : kExprs) {
    const Expr e = parse_expr(text);
    const auto f = ScaleFunction::from_expr(ts, e);
    const auto g = ts.grid(0, 4, 1.0);
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
      const double q = (e.eval(Env{g[k + 1]}) - e.eval(Env{g[k]})) / (g[k + 1] - g[k]);
      CHECK(delta_derivative(f, g[k]).value == q);
      CHECK(nabla_derivative(f, g[k + 1]).value == q);
    }
  }
}

TEST_CASE("abs bounds fall back to numeric derivatives on dense pieces") {
  const auto ts = TimeScale::make({{0, 1}});
  const auto f = fx(ts, "abs(t - 2)");
  CHECK_FALSE(f.symbolic_derivative().has_value());
  const auto d = delta_derivative(f, 0.5);
  CHECK(d.method == DerivativeMethod::DenseNumeric);
  CHECK(d.value == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("interpolation derivative is exact on polynomials") {
  const std::vector x{0.0, 0.1, 0.3, 0.35, 0.5};
  std::vector<double> y;
  for (double xi : x) y.push_back(xi * xi * xi - 2 * xi);
  for (double a : {0.0, 0.2, 0.5}) CHECK(interpolation_derivative(x, y, a) == doctest::Approx(3 * a * a - 2).epsilon(1e-12));
}
