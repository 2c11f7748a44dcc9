#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tabmath/lang/interpreter.hpp"
#include "tabmath/lang/parser.hpp"
#include "tabmath/lang/rng.hpp"
#include "test_support.hpp"

using namespace tabmath;
using namespace tabmath::lang;

namespace {

Value run(std::string_view src, std::string_view fn, const Map& args, std::uint64_t seed = 1) {
  const Program p = parse_program(src);
  RngState rng(seed);
  return eval_function(p, fn, args, rng);
}

Map ints(std::initializer_list<std::pair<const char*, std::int64_t>> kv) {
  Map m;
  for (const auto& [k, v] : kv) m.emplace(k, Value::integer(v));
  return m;
}

}  // namespace

TEST(Parser, FlowersVerifierHasOneFunction) {
  const auto spec = test::load_fixture("flowers");
  const Program& p = *spec.verifier.program;
  ASSERT_EQ(p.functions.size(), 1u);
  EXPECT_EQ(p.functions[0].name, "verifier");
  EXPECT_EQ(p.functions[0].params, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Parser, EmptySourceIsSyntaxError) {
  EXPECT_THROW(parse_program(""), SyntaxError);
  EXPECT_THROW(parse_program("  # only a comment\n"), SyntaxError);
}

TEST(Parser, ImportIsRestricted) {
  EXPECT_THROW(parse_program("import os\nfn verifier(a) { return a; }"), RestrictionError);
  EXPECT_THROW(parse_program("fn verifier(a) { return open(a); }"), RestrictionError);
}

TEST(Parser, ExtraFunctionsAndRecursionAreRestricted) {
  EXPECT_THROW(parse_program("fn helper() { return 1; }"), RestrictionError);
  EXPECT_THROW(parse_program("fn verifier(a) { return verifier(a); }"), RestrictionError);
}

TEST(Parser, SyntaxErrorCarriesLocation) {
  try {
    parse_program("fn verifier(a) {\n  return a +;\n}");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.location().line, 2);
    EXPECT_GT(e.location().column, 0);
  }
}

TEST(Parser, PrettyPrintRoundTripsEveryFixture) {
  for (const auto& entry : std::filesystem::directory_iterator(TABMATH_FIXTURE_DIR)) {
    const auto spec = load_spec_file(entry.path().string());
    for (const auto* src : {&spec.generator, &spec.verifier}) {
      const Program once = parse_program(src->code);
      const std::string printed = to_source(once);
      const Program twice = parse_program(printed);
      EXPECT_TRUE(once == twice) << entry.path();
      EXPECT_EQ(printed, to_source(twice));
    }
  }
}

TEST(Interpreter, FlowersVerifierTableRow) {
  const auto spec = test::load_fixture("flowers");
  RngState rng(0);
  const Value v = eval_function(*spec.verifier.program, "verifier",
                                ints({{"a", 20}, {"b", 50}, {"c", 40}}), rng);
  EXPECT_EQ(v, Value::integer(70));
}

TEST(Interpreter, FlowersSimpleVerifier) {
  const auto spec = test::load_fixture("flowers_simple");
  RngState rng(0);
  const Value v = eval_function(*spec.verifier.program, "verifier",
                                ints({{"yellow", 15}, {"purple_pct", 80}}), rng);
  ASSERT_TRUE(v.is_pair());
  EXPECT_TRUE(v.as_pair().flag);
  EXPECT_EQ(v.as_pair().second, Value::floating(42.0));
}

TEST(Interpreter, DistanceRateTimeVerifier) {
  const auto spec = test::load_fixture("distance_rate_time");
  RngState rng(0);
  Map args{{"distance_km", Value::floating(15)},
           {"headwind_kmh", Value::floating(3)},
           {"total_time_hours", Value::floating(5)}};
  const Value v = eval_function(*spec.verifier.program, "verifier", args, rng);
  EXPECT_TRUE(v.is_float());
  EXPECT_EQ(v.as_float(), 6.0);
}

TEST(Interpreter, ArithmeticSemantics) {
  const char* src = "fn verifier(a, b) { return [a // b, a % b, a / b, a ** 2, -a]; }";
  const Value v = run(src, "verifier", ints({{"a", -7}, {"b", 2}}));
  const auto& l = v.as_list();
  EXPECT_EQ(l[0], Value::integer(-4));
  EXPECT_EQ(l[1], Value::integer(1));
  EXPECT_TRUE(l[2].is_float());
  EXPECT_EQ(l[2].as_float(), -3.5);
  EXPECT_EQ(l[3], Value::integer(49));
  EXPECT_EQ(l[4], Value::integer(7));
}

TEST(Interpreter, FloorSemanticsProperty) {
  const Program p = parse_program("fn verifier(a, b) { return [a // b, a % b]; }");
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<std::int64_t> d(-1000, 1000);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t a = d(gen);
    std::int64_t b = d(gen);
    if (b == 0) b = 3;
    RngState rng(0);
    const auto l = eval_function(p, "verifier", ints({{"a", a}, {"b", b}}), rng).as_list();
    const std::int64_t q = l[0].as_int();
    const std::int64_t r = l[1].as_int();
    EXPECT_EQ(a, q * b + r);
    EXPECT_TRUE(r == 0 || (r > 0) == (b > 0)) << a << " % " << b;
  }
}

TEST(Interpreter, Builtins) {
  const char* src =
      "fn verifier(x) {\n"
      "  return [math.gcd(12, 18), math.lcm(4, 6), math.floor(2.7), math.ceil(2.1),\n"
      "          abs(-3), min(4, 2, 9), max([1, 8, 3]), round(2.5), round(-2.5),\n"
      "          int(7.9), float(3), len([1, 2, 3]), math.isqrt(17)];\n"
      "}";
  const auto l = run(src, "verifier", ints({{"x", 0}})).as_list();
  const std::vector<std::int64_t> want{6, 12, 2, 3, 3, 2, 8, 3, -3, 7};
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(l[i], Value::integer(want[i])) << i << ": " << lang::repr_value(l[i]);
  EXPECT_TRUE(l[10].is_float());
  EXPECT_EQ(l[11], Value::integer(3));
  EXPECT_EQ(l[12], Value::integer(4));
}

TEST(Interpreter, ControlFlow) {
  const char* src =
      "fn verifier(n) {\n"
      "  total = 0;\n"
      "  i = 0;\n"
      "  while true {\n"
      "    i = i + 1;\n"
      "    if i > n { break; }\n"
      "    elif i % 2 == 0 { continue; }\n"
      "    else { total = total + i; }\n"
      "  }\n"
      "  return total;\n"
      "}";
  EXPECT_EQ(run(src, "verifier", ints({{"n", 9}})), Value::integer(25));
}

TEST(Interpreter, ClassifiedErrors) {
  EXPECT_THROW(run("fn verifier(a) { return a / 0; }", "verifier", ints({{"a", 1}})),
               DivisionByZero);
  EXPECT_THROW(run("fn verifier(a) { return a % 0; }", "verifier", ints({{"a", 1}})),
               DivisionByZero);
  EXPECT_THROW(run("fn verifier(a) { return q; }", "verifier", ints({{"a", 1}})), NameError);
  EXPECT_THROW(run("fn verifier(a) { return a; }", "verifier", {}), NameError);
  EXPECT_THROW(run("fn verifier(a) { return a + \"x\"; }", "verifier", ints({{"a", 1}})),
               TypeError);
  EXPECT_THROW(run("fn generator() { return rng.randint(5, 4); }", "generator", {}),
               tabmath::lang::RangeError);
}

TEST(Interpreter, LoopBudgetStopsNonTermination) {
  const Program p = parse_program("fn generator() { while true { x = 1; } }");
  RngState rng(1);
  Limits limits;
  limits.loop_budget = 1000;
  EXPECT_THROW(eval_function(p, "generator", {}, rng, limits), ResourceError);
  limits.loop_budget = 1'000'000;
  limits.step_budget = 5000;
  EXPECT_THROW(eval_function(p, "generator", {}, rng, limits), ResourceError);
}

TEST(Interpreter, DeterministicValuesAndRngState) {
  const auto spec = test::load_fixture("flowers");
  RngState a = RngState::derive("flowers", "synthesis", 2025, {3});
  RngState b = a;
  const Value va = eval_function(*spec.generator.program, "generator", {}, a);
  const Value vb = eval_function(*spec.generator.program, "generator", {}, b);
  EXPECT_EQ(va, vb);
  EXPECT_EQ(a, b);
}

TEST(Interpreter, InterleavedEvaluationsAreIndependent) {
  const auto spec = test::load_fixture("apples");
  const Program& g = *spec.generator.program;
  RngState a1(11), b1(22);
  const Value x1 = eval_function(g, "generator", {}, a1);
  const Value y1 = eval_function(g, "generator", {}, b1);
  RngState a2(11), b2(22);
  const Value y2 = eval_function(g, "generator", {}, b2);
  const Value x2 = eval_function(g, "generator", {}, a2);
  EXPECT_EQ(x1, x2);
  EXPECT_EQ(y1, y2);
}

TEST(Rng, SingletonRange) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    RngState r(s);
    EXPECT_EQ(r.randint(5, 5), 5);
  }
}

TEST(Rng, DrawsStayInRangeAndRepeat) {
  auto draw = [] {
    RngState r = RngState::derive("test", "randint", 2025);
    std::vector<std::int64_t> out;
    for (int i = 0; i < 10000; ++i) out.push_back(r.randint(1, 100));
    return out;
  };
  const auto a = draw();
  for (auto v : a) {
    EXPECT_GE(v, 1);
    EXPECT_LE(v, 100);
  }
  EXPECT_EQ(a, draw());
}

TEST(Rng, ChiSquareUniformity) {
  RngState r = RngState::derive("test", "chi2", 1);
  std::array<int, 10> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(r.randint(0, 9))];
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / 10.0) * (c - n / 10.0) / (n / 10.0);
  // Upper 0.001 quantile of chi-square with 9 degrees of freedom.
  EXPECT_LT(chi2, 27.877);
}

TEST(Rng, UniformIsHalfOpen) {
  RngState r(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform(2.0, 3.0);
    EXPECT_GE(u, 2.0);
    EXPECT_LT(u, 3.0);
  }
}

TEST(Rng, StreamDerivationSeparatesKeys) {
  EXPECT_NE(RngState::derive("a", "p", 1).state(), RngState::derive("a", "p", 2).state());
  EXPECT_NE(RngState::derive("a", "p", 1).state(), RngState::derive("a", "q", 1).state());
  EXPECT_NE(RngState::derive("a", "p", 1, {0}).state(), RngState::derive("a", "p", 1, {1}).state());
  // FNV-1a of the empty input is the offset basis.
  EXPECT_EQ(Fnv1a64().digest(), Fnv1a64::kOffsetBasis);
  EXPECT_EQ(Fnv1a64().bytes("a").digest(), 0xaf63dc4c8601ec8cULL);
}

TEST(Values, CanonicalFormatting) {
  EXPECT_EQ(format_value(Value::integer(47)), "47");
  EXPECT_EQ(format_value(Value::floating(6.0)), "6.0");
  EXPECT_EQ(format_value(Value::floating(0.1)), "0.1");
  EXPECT_EQ(format_value(Value::string("Jean")), "Jean");
  EXPECT_TRUE(Value::integer(3) == Value::floating(3.0));
  EXPECT_FALSE(Value::integer(3) == Value::floating(3.5));
}

TEST(Values, RoundHalfAway) {
  EXPECT_EQ(round_half_away(2.5), 3.0);
  EXPECT_EQ(round_half_away(-2.5), -3.0);
  EXPECT_EQ(round_half_away(41.4), 41.0);
  EXPECT_EQ(round_half_away(41.7), 42.0);
}
