#include "tabmath/lang/interpreter.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "tabmath/lang/errors.hpp"

namespace tabmath::lang {

double round_half_away(double x) noexcept { return std::round(x); }

namespace {

using Int = std::int64_t;

constexpr double kTwo63 = 9223372036854775808.0;

Int float_to_int(double d, const char* what, SourceLocation loc) {
  if (!std::isfinite(d) || d >= kTwo63 || d < -kTwo63) {
    throw RangeError(std::string(what) + ": value out of integer range", loc);
  }
  return static_cast<Int>(d);
}

std::size_t utf8_length(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

// -1, 0, 1 for numbers; 2 when unordered (NaN involved).
int compare_numbers(const Value& a, const Value& b) {
  if (a.is_int() && b.is_int()) {
    const Int x = a.as_int(), y = b.as_int();
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  if (a.is_int()) return compare_int_float(a.as_int(), b.as_float());
  if (b.is_int()) {
    const int c = compare_int_float(b.as_int(), a.as_float());
    return c == 2 ? 2 : -c;
  }
  const double x = a.as_float(), y = b.as_float();
  if (std::isnan(x) || std::isnan(y)) return 2;
  return x < y ? -1 : (x > y ? 1 : 0);
}

enum class Flow { kNormal, kBreak, kContinue, kReturn };

class Evaluator {
 public:
  Evaluator(RngState& rng, const Limits& limits) : rng_(rng), limits_(limits) {}

  Value call(const Function& fn, const Map& args) {
    for (const auto& p : fn.params) {
      auto it = args.find(p);
      if (it == args.end()) {
        throw NameError("missing argument '" + p + "' for " + fn.name, fn.loc);
      }
      env_[p] = it->second;
    }
    if (exec_block(fn.body) == Flow::kReturn) return std::move(ret_);
    return Value::null();
  }

 private:
  void tick(SourceLocation loc) {
    if (++steps_ > limits_.step_budget) {
      throw ResourceError("step budget of " + std::to_string(limits_.step_budget) + " exhausted",
                          loc);
    }
  }

  Flow exec_block(const Block& block) {
    for (const auto& s : block) {
      const Flow f = exec(*s);
      if (f != Flow::kNormal) return f;
    }
    return Flow::kNormal;
  }

  bool condition(const Expr& e) {
    Value v = eval(e);
    if (!v.is_bool()) {
      throw TypeError(std::string("condition must be Bool, got ") + v.type_name(), e.loc);
    }
    return v.as_bool();
  }

  Flow exec(const Stmt& s) {
    tick(s.loc);
    switch (s.kind) {
      case StmtKind::kAssign:
        env_[s.target] = eval(*s.value);
        return Flow::kNormal;
      case StmtKind::kExpr:
        eval(*s.value);
        return Flow::kNormal;
      case StmtKind::kReturn:
        ret_ = s.value ? eval(*s.value) : Value::null();
        return Flow::kReturn;
      case StmtKind::kBreak: return Flow::kBreak;
      case StmtKind::kContinue: return Flow::kContinue;
      case StmtKind::kIf:
        for (const auto& branch : s.branches) {
          if (condition(*branch.condition)) return exec_block(branch.body);
        }
        return s.has_else ? exec_block(s.else_body) : Flow::kNormal;
      case StmtKind::kWhile: {
        std::uint64_t iterations = 0;
        while (condition(*s.value)) {
          if (++iterations > limits_.loop_budget) {
            throw ResourceError(
                "loop budget of " + std::to_string(limits_.loop_budget) + " iterations exhausted",
                s.loc);
          }
          const Flow f = exec_block(s.body);
          if (f == Flow::kBreak) break;
          if (f == Flow::kReturn) return f;
        }
        return Flow::kNormal;
      }
    }
    return Flow::kNormal;
  }

  Value eval(const Expr& e) {
    tick(e.loc);
    switch (e.kind) {
      case ExprKind::kLiteral: return e.literal;
      case ExprKind::kVariable: return lookup(e);
      case ExprKind::kList: {
        List items;
        items.reserve(e.args.size());
        for (const auto& a : e.args) items.push_back(eval(*a));
        return Value::list(std::move(items));
      }
      case ExprKind::kMap: {
        Map m;
        for (std::size_t i = 0; i < e.args.size(); ++i) m.emplace(e.keys[i], eval(*e.args[i]));
        return Value::map(std::move(m));
      }
      case ExprKind::kPair: {
        Value flag = eval(*e.args[0]);
        if (!flag.is_bool()) {
          throw TypeError("first element of a pair must be Bool", e.loc);
        }
        return Value::pair(flag.as_bool(), eval(*e.args[1]));
      }
      case ExprKind::kIndex: return index(e, eval(*e.args[0]), eval(*e.args[1]));
      case ExprKind::kUnary: return unary(e);
      case ExprKind::kBinary: return binary(e);
      case ExprKind::kCall: return call_builtin(e);
    }
    return Value::null();
  }

  Value lookup(const Expr& e) {
    if (e.name == "math.pi") return Value::floating(3.14159265358979323846);
    if (e.name == "math.e") return Value::floating(2.71828182845904523536);
    auto it = env_.find(e.name);
    if (it == env_.end()) throw NameError("unbound variable '" + e.name + "'", e.loc);
    return it->second;
  }

  Value index(const Expr& e, const Value& base, const Value& key) {
    if (base.is_map()) {
      if (!key.is_str()) throw TypeError("map keys are Str", e.loc);
      const auto& m = base.as_map();
      auto it = m.find(key.as_str());
      if (it == m.end()) throw RangeError("missing key '" + key.as_str() + "'", e.loc);
      return it->second;
    }
    if (!key.is_int()) throw TypeError("index must be Int", e.loc);
    Int i = key.as_int();
    if (base.is_list()) {
      const auto& l = base.as_list();
      const Int n = static_cast<Int>(l.size());
      if (i < 0) i += n;
      if (i < 0 || i >= n) throw RangeError("list index out of range", e.loc);
      return l[static_cast<std::size_t>(i)];
    }
    if (base.is_pair()) {
      if (i == 0) return Value::boolean(base.as_pair().flag);
      if (i == 1) return base.as_pair().second;
      throw RangeError("pair index must be 0 or 1", e.loc);
    }
    throw TypeError(std::string("cannot index ") + base.type_name(), e.loc);
  }

  Value unary(const Expr& e) {
    Value v = eval(*e.args[0]);
    switch (e.unary_op) {
      case UnaryOp::kNot:
        if (!v.is_bool()) throw TypeError("'not' requires Bool", e.loc);
        return Value::boolean(!v.as_bool());
      case UnaryOp::kPos:
        if (!v.is_number()) throw TypeError("unary '+' requires a number", e.loc);
        return v;
      case UnaryOp::kNeg:
        if (v.is_int()) {
          if (v.as_int() == std::numeric_limits<Int>::min()) {
            throw RangeError("integer overflow", e.loc);
          }
          return Value::integer(-v.as_int());
        }
        if (v.is_float()) return Value::floating(-v.as_float());
        throw TypeError("unary '-' requires a number", e.loc);
    }
    return v;
  }

  Value binary(const Expr& e) {
    const BinaryOp op = e.binary_op;
    if (op == BinaryOp::kAnd || op == BinaryOp::kOr) {
      const bool lhs = condition(*e.args[0]);
      if (op == BinaryOp::kAnd && !lhs) return Value::boolean(false);
      if (op == BinaryOp::kOr && lhs) return Value::boolean(true);
      return Value::boolean(condition(*e.args[1]));
    }
    Value a = eval(*e.args[0]);
    Value b = eval(*e.args[1]);
    switch (op) {
      case BinaryOp::kEq: return Value::boolean(a == b);
      case BinaryOp::kNe: return Value::boolean(!(a == b));
      case BinaryOp::kLt:
      case BinaryOp::kLe:
      case BinaryOp::kGt:
      case BinaryOp::kGe: return Value::boolean(ordered(e, a, b));
      default: return arithmetic(e, a, b);
    }
  }

  bool ordered(const Expr& e, const Value& a, const Value& b) {
    int c;
    if (a.is_number() && b.is_number()) {
      c = compare_numbers(a, b);
      if (c == 2) return false;
    } else if (a.is_str() && b.is_str()) {
      const int r = a.as_str().compare(b.as_str());
      c = r < 0 ? -1 : (r > 0 ? 1 : 0);
    } else {
      throw TypeError(std::string("cannot order ") + a.type_name() + " and " + b.type_name(),
                      e.loc);
    }
    switch (e.binary_op) {
      case BinaryOp::kLt: return c < 0;
      case BinaryOp::kLe: return c <= 0;
      case BinaryOp::kGt: return c > 0;
      default: return c >= 0;
    }
  }

  Value arithmetic(const Expr& e, const Value& a, const Value& b) {
    const BinaryOp op = e.binary_op;
    if (op == BinaryOp::kAdd && a.is_str() && b.is_str()) {
      return Value::string(a.as_str() + b.as_str());
    }
    if (op == BinaryOp::kAdd && a.is_list() && b.is_list()) {
      List out = a.as_list();
      out.insert(out.end(), b.as_list().begin(), b.as_list().end());
      return Value::list(std::move(out));
    }
    if (!a.is_number() || !b.is_number()) {
      throw TypeError(std::string("unsupported operand types for ") + to_string(op) + ": " +
                          a.type_name() + " and " + b.type_name(),
                      e.loc);
    }
    if (op == BinaryOp::kDiv) {
      const double y = b.as_float();
      if (y == 0.0) throw DivisionByZero("division by zero", e.loc);
      return Value::floating(a.as_float() / y);
    }
    if (a.is_int() && b.is_int()) return int_arithmetic(e, a.as_int(), b.as_int());
    return float_arithmetic(e, a.as_float(), b.as_float());
  }

  Value int_arithmetic(const Expr& e, Int x, Int y) {
    Int r = 0;
    switch (e.binary_op) {
      case BinaryOp::kAdd:
        if (__builtin_add_overflow(x, y, &r)) throw RangeError("integer overflow", e.loc);
        return Value::integer(r);
      case BinaryOp::kSub:
        if (__builtin_sub_overflow(x, y, &r)) throw RangeError("integer overflow", e.loc);
        return Value::integer(r);
      case BinaryOp::kMul:
        if (__builtin_mul_overflow(x, y, &r)) throw RangeError("integer overflow", e.loc);
        return Value::integer(r);
      case BinaryOp::kFloorDiv:
      case BinaryOp::kMod: {
        if (y == 0) throw DivisionByZero("integer division or modulo by zero", e.loc);
        if (x == std::numeric_limits<Int>::min() && y == -1) {
          if (e.binary_op == BinaryOp::kMod) return Value::integer(0);
          throw RangeError("integer overflow", e.loc);
        }
        Int q = x / y;
        Int m = x % y;
        if (m != 0 && ((m < 0) != (y < 0))) {
          --q;
          m += y;
        }
        return Value::integer(e.binary_op == BinaryOp::kFloorDiv ? q : m);
      }
      case BinaryOp::kPow: {
        if (y < 0) return float_arithmetic(e, static_cast<double>(x), static_cast<double>(y));
        Int result = 1;
        Int base = x;
        Int exp = y;
        while (exp > 0) {
          if (exp & 1) {
            if (__builtin_mul_overflow(result, base, &result)) {
              throw RangeError("integer overflow", e.loc);
            }
          }
          exp >>= 1;
          if (exp > 0 && __builtin_mul_overflow(base, base, &base)) {
            throw RangeError("integer overflow", e.loc);
          }
        }
        return Value::integer(result);
      }
      default: break;
    }
    throw TypeError("bad integer operator", e.loc);
  }

  Value float_arithmetic(const Expr& e, double x, double y) {
    switch (e.binary_op) {
      case BinaryOp::kAdd: return Value::floating(x + y);
      case BinaryOp::kSub: return Value::floating(x - y);
      case BinaryOp::kMul: return Value::floating(x * y);
      case BinaryOp::kFloorDiv:
      case BinaryOp::kMod: {
        if (y == 0.0) throw DivisionByZero("float floor division or modulo by zero", e.loc);
        double mod = std::fmod(x, y);
        double div = (x - mod) / y;
        if (mod != 0.0) {
          if ((y < 0) != (mod < 0)) {
            mod += y;
            div -= 1.0;
          }
        } else {
          mod = std::copysign(0.0, y);
        }
        double floordiv;
        if (div != 0.0) {
          floordiv = std::floor(div);
          if (div - floordiv > 0.5) floordiv += 1.0;
        } else {
          floordiv = std::copysign(0.0, x / y);
        }
        return Value::floating(e.binary_op == BinaryOp::kFloorDiv ? floordiv : mod);
      }
      case BinaryOp::kPow: {
        if (x == 0.0 && y < 0) throw DivisionByZero("zero raised to a negative power", e.loc);
        if (x < 0 && std::floor(y) != y) {
          throw RangeError("negative base with fractional exponent", e.loc);
        }
        return Value::floating(std::pow(x, y));
      }
      default: break;
    }
    throw TypeError("bad float operator", e.loc);
  }

  void arity(const Expr& e, std::size_t lo, std::size_t hi) {
    if (e.args.size() < lo || e.args.size() > hi) {
      throw TypeError(e.name + "() takes " +
                          (lo == hi ? std::to_string(lo)
                                    : std::to_string(lo) + ".." + std::to_string(hi)) +
                          " arguments, got " + std::to_string(e.args.size()),
                      e.loc);
    }
  }

  Int int_arg(const Expr& e, const Value& v) {
    if (!v.is_int()) throw TypeError(e.name + "() expects Int, got " + v.type_name(), e.loc);
    return v.as_int();
  }

  double num_arg(const Expr& e, const Value& v) {
    if (!v.is_number()) {
      throw TypeError(e.name + "() expects a number, got " + v.type_name(), e.loc);
    }
    return v.as_float();
  }

  Value call_builtin(const Expr& e) {
    std::vector<Value> args;
    args.reserve(e.args.size());
    for (const auto& a : e.args) args.push_back(eval(*a));
    const std::string& n = e.name;

    if (n == "rng.randint") {
      arity(e, 2, 2);
      const Int lo = int_arg(e, args[0]), hi = int_arg(e, args[1]);
      if (lo > hi) {
        throw RangeError("randint: empty range [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]",
                         e.loc);
      }
      return Value::integer(rng_.randint(lo, hi));
    }
    if (n == "rng.uniform") {
      arity(e, 2, 2);
      const double lo = num_arg(e, args[0]), hi = num_arg(e, args[1]);
      if (!(lo <= hi)) throw RangeError("uniform: lower bound exceeds upper bound", e.loc);
      return Value::floating(rng_.uniform(lo, hi));
    }
    if (n == "rng.choice") {
      arity(e, 1, 1);
      if (!args[0].is_list()) throw TypeError("choice() expects a List", e.loc);
      const auto& l = args[0].as_list();
      if (l.empty()) throw RangeError("choice() from an empty list", e.loc);
      return l[rng_.below(l.size())];
    }
    if (n == "math.gcd" || n == "math.lcm") {
      arity(e, 2, 2);
      const Int a = int_arg(e, args[0]), b = int_arg(e, args[1]);
      const auto ua = a < 0 ? 0 - static_cast<std::uint64_t>(a) : static_cast<std::uint64_t>(a);
      const auto ub = b < 0 ? 0 - static_cast<std::uint64_t>(b) : static_cast<std::uint64_t>(b);
      const std::uint64_t g = std::gcd(ua, ub);
      if (n == "math.gcd") {
        if (g > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
          throw RangeError("integer overflow", e.loc);
        }
        return Value::integer(static_cast<Int>(g));
      }
      if (ua == 0 || ub == 0) return Value::integer(0);
      std::uint64_t l = 0;
      if (__builtin_mul_overflow(ua / g, ub, &l) ||
          l > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
        throw RangeError("integer overflow", e.loc);
      }
      return Value::integer(static_cast<Int>(l));
    }
    if (n == "math.floor" || n == "math.ceil") {
      arity(e, 1, 1);
      if (args[0].is_int()) return args[0];
      const double x = num_arg(e, args[0]);
      return Value::integer(
          float_to_int(n == "math.floor" ? std::floor(x) : std::ceil(x), n.c_str(), e.loc));
    }
    if (n == "math.sqrt") {
      arity(e, 1, 1);
      const double x = num_arg(e, args[0]);
      if (x < 0) throw RangeError("sqrt of a negative number", e.loc);
      return Value::floating(std::sqrt(x));
    }
    if (n == "math.isqrt") {
      arity(e, 1, 1);
      const Int x = int_arg(e, args[0]);
      if (x < 0) throw RangeError("isqrt of a negative number", e.loc);
      auto r = static_cast<Int>(std::sqrt(static_cast<double>(x)));
      while (r > 0 && r > x / r) --r;
      while ((r + 1) <= x / (r + 1)) ++r;
      return Value::integer(r);
    }
    if (n == "abs") {
      arity(e, 1, 1);
      if (args[0].is_int()) {
        const Int x = args[0].as_int();
        if (x == std::numeric_limits<Int>::min()) throw RangeError("integer overflow", e.loc);
        return Value::integer(x < 0 ? -x : x);
      }
      return Value::floating(std::fabs(num_arg(e, args[0])));
    }
    if (n == "min" || n == "max") {
      if (args.empty()) arity(e, 1, 1);
      const List* items = nullptr;
      List own;
      if (args.size() == 1) {
        if (!args[0].is_list()) throw TypeError(n + "() of a single non-List argument", e.loc);
        items = &args[0].as_list();
      } else {
        own = args;
        items = &own;
      }
      if (items->empty()) throw RangeError(n + "() of an empty sequence", e.loc);
      const Value* best = &(*items)[0];
      for (std::size_t i = 1; i < items->size(); ++i) {
        const Value& v = (*items)[i];
        Expr probe;
        probe.loc = e.loc;
        probe.binary_op = n == "min" ? BinaryOp::kLt : BinaryOp::kGt;
        if (ordered(probe, v, *best)) best = &v;
      }
      return *best;
    }
    if (n == "round") {
      arity(e, 1, 2);
      if (args.size() == 1) {
        if (args[0].is_int()) return args[0];
        return Value::integer(float_to_int(round_half_away(num_arg(e, args[0])), "round", e.loc));
      }
      const Int digits = int_arg(e, args[1]);
      if (digits < -15 || digits > 15) throw RangeError("round(): digits out of range", e.loc);
      if (args[0].is_int() && digits >= 0) return args[0];
      const double scale = std::pow(10.0, static_cast<double>(digits));
      return Value::floating(round_half_away(num_arg(e, args[0]) * scale) / scale);
    }
    if (n == "int") {
      arity(e, 1, 1);
      if (args[0].is_int()) return args[0];
      if (args[0].is_bool()) return Value::integer(args[0].as_bool() ? 1 : 0);
      return Value::integer(float_to_int(std::trunc(num_arg(e, args[0])), "int", e.loc));
    }
    if (n == "float") {
      arity(e, 1, 1);
      return Value::floating(num_arg(e, args[0]));
    }
    if (n == "len") {
      arity(e, 1, 1);
      if (args[0].is_list()) return Value::integer(static_cast<Int>(args[0].as_list().size()));
      if (args[0].is_map()) return Value::integer(static_cast<Int>(args[0].as_map().size()));
      if (args[0].is_str()) return Value::integer(static_cast<Int>(utf8_length(args[0].as_str())));
      throw TypeError(std::string("len() of ") + args[0].type_name(), e.loc);
    }
    throw NameError("unknown function '" + n + "'", e.loc);
  }

  RngState& rng_;
  const Limits& limits_;
  std::uint64_t steps_ = 0;
  std::unordered_map<std::string, Value> env_;
  Value ret_;
};

}  // namespace

Value eval_function(const Program& program, std::string_view name, const Map& args,
                    RngState& rng, const Limits& limits) {
  const Function* fn = program.find(name);
  if (fn == nullptr) throw NameError("program has no function '" + std::string(name) + "'");
  return Evaluator(rng, limits).call(*fn, args);
}

}  // namespace tabmath::lang
