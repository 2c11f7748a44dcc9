#include "tabmath/lang/parser.hpp"

#include <array>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

namespace tabmath::lang {

namespace {

constexpr std::array<std::string_view, 16> kBuiltins = {
    "rng.randint", "rng.uniform", "rng.choice", "math.gcd",  "math.lcm", "math.floor",
    "math.ceil",   "math.sqrt",   "math.isqrt", "abs",       "min",      "max",
    "round",       "int",         "float",      "len"};

constexpr std::array<std::string_view, 12> kForbiddenCalls = {
    "print", "input", "open",    "exec",    "eval",    "compile",
    "__import__", "globals", "locals", "getattr", "setattr", "exit"};

constexpr std::array<std::string_view, 2> kEntryPoints = {"generator", "verifier"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view name) {
  for (auto s : set) {
    if (s == name) return true;
  }
  return false;
}

enum class Tok {
  kEnd, kIdent, kInt, kFloat, kString,
  kFn, kIf, kElif, kElse, kWhile, kReturn, kBreak, kContinue, kTrue, kFalse, kNull,
  kAnd, kOr, kNot, kImport, kFrom,
  kLParen, kRParen, kLBracket, kRBracket, kLBrace, kRBrace,
  kComma, kColon, kSemi, kDot,
  kAssign, kPlusAssign, kMinusAssign, kStarAssign, kSlashAssign,
  kEq, kNe, kLt, kLe, kGt, kGe,
  kPlus, kMinus, kStar, kSlash, kSlashSlash, kPercent, kStarStar,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  SourceLocation loc;
  std::int64_t int_value = 0;
  double float_value = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.loc = {line_, col_};
      if (at_end()) {
        out.push_back(t);
        return out;
      }
      const char c = peek();
      if (is_ident_start(c)) {
        ident(t);
      } else if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
        number(t);
      } else if (c == '"' || c == '\'') {
        string(t);
      } else {
        const std::size_t start = pos_;
        punct(t);
        t.text = std::string(src_.substr(start, pos_ - start));
      }
      out.push_back(std::move(t));
    }
  }

 private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (!at_end()) {
      const char c = peek();
      if (c == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        return;
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg, SourceLocation loc) { throw SyntaxError(msg, loc); }

  void ident(Token& t) {
    while (!at_end() && is_ident_char(peek())) t.text += advance();
    static const std::pair<std::string_view, Tok> kKeywords[] = {
        {"fn", Tok::kFn},         {"if", Tok::kIf},         {"elif", Tok::kElif},
        {"else", Tok::kElse},     {"while", Tok::kWhile},   {"return", Tok::kReturn},
        {"break", Tok::kBreak},   {"continue", Tok::kContinue},
        {"true", Tok::kTrue},     {"false", Tok::kFalse},   {"null", Tok::kNull},
        {"and", Tok::kAnd},       {"or", Tok::kOr},         {"not", Tok::kNot},
        {"import", Tok::kImport}, {"from", Tok::kFrom}};
    t.kind = Tok::kIdent;
    for (const auto& [word, kind] : kKeywords) {
      if (t.text == word) t.kind = kind;
    }
  }

  void number(Token& t) {
    bool is_float = false;
    while (is_digit(peek())) t.text += advance();
    if (peek() == '.' && is_digit(peek(1))) {
      is_float = true;
      t.text += advance();
      while (is_digit(peek())) t.text += advance();
    } else if (peek() == '.' && !is_ident_start(peek(1))) {
      // "3." is accepted as a float literal
      is_float = true;
      t.text += advance();
    }
    if (peek() == 'e' || peek() == 'E') {
      const char sign = peek(1);
      if (is_digit(sign) || ((sign == '+' || sign == '-') && is_digit(peek(2)))) {
        is_float = true;
        t.text += advance();
        if (sign == '+' || sign == '-') t.text += advance();
        while (is_digit(peek())) t.text += advance();
      }
    }
    if (is_ident_char(peek())) fail("malformed number literal", t.loc);
    if (is_float) {
      t.kind = Tok::kFloat;
      const char* first = t.text.data();
      const char* last = first + t.text.size();
      auto res = std::from_chars(first, last, t.float_value);
      if (res.ec != std::errc() || res.ptr != last) fail("float literal out of range", t.loc);
    } else {
      t.kind = Tok::kInt;
      const char* first = t.text.data();
      const char* last = first + t.text.size();
      auto res = std::from_chars(first, last, t.int_value);
      if (res.ec != std::errc() || res.ptr != last) fail("integer literal out of range", t.loc);
    }
  }

  void string(Token& t) {
    const char quote = advance();
    t.kind = Tok::kString;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string literal", t.loc);
      const char c = advance();
      if (c == quote) break;
      if (c == '\\') {
        if (at_end()) fail("unterminated string literal", t.loc);
        const char e = advance();
        switch (e) {
          case 'n': t.text += '\n'; break;
          case 't': t.text += '\t'; break;
          case 'r': t.text += '\r'; break;
          case '\\': t.text += '\\'; break;
          case '\'': t.text += '\''; break;
          case '"': t.text += '"'; break;
          default: fail(std::string("unknown escape \\") + e, t.loc);
        }
      } else {
        t.text += c;
      }
    }
  }

  void punct(Token& t) {
    const char c = advance();
    auto two = [&](char next, Tok yes, Tok no) {
      if (peek() == next) {
        advance();
        t.kind = yes;
      } else {
        t.kind = no;
      }
    };
    switch (c) {
      case '(': t.kind = Tok::kLParen; break;
      case ')': t.kind = Tok::kRParen; break;
      case '[': t.kind = Tok::kLBracket; break;
      case ']': t.kind = Tok::kRBracket; break;
      case '{': t.kind = Tok::kLBrace; break;
      case '}': t.kind = Tok::kRBrace; break;
      case ',': t.kind = Tok::kComma; break;
      case ':': t.kind = Tok::kColon; break;
      case ';': t.kind = Tok::kSemi; break;
      case '.': t.kind = Tok::kDot; break;
      case '%': t.kind = Tok::kPercent; break;
      case '=': two('=', Tok::kEq, Tok::kAssign); break;
      case '<': two('=', Tok::kLe, Tok::kLt); break;
      case '>': two('=', Tok::kGe, Tok::kGt); break;
      case '+': two('=', Tok::kPlusAssign, Tok::kPlus); break;
      case '-': two('=', Tok::kMinusAssign, Tok::kMinus); break;
      case '!':
        if (peek() != '=') fail("unexpected character '!'", t.loc);
        advance();
        t.kind = Tok::kNe;
        break;
      case '*':
        if (peek() == '*') {
          advance();
          t.kind = Tok::kStarStar;
        } else {
          two('=', Tok::kStarAssign, Tok::kStar);
        }
        break;
      case '/':
        if (peek() == '/') {
          advance();
          t.kind = Tok::kSlashSlash;
        } else {
          two('=', Tok::kSlashAssign, Tok::kSlash);
        }
        break;
      default:
        fail(std::string("unexpected character '") + c + "'", t.loc);
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::kEnd: return "end of input";
    case Tok::kIdent: return "identifier '" + t.text + "'";
    case Tok::kInt:
    case Tok::kFloat: return "number " + t.text;
    case Tok::kString: return "string literal";
    default: return t.text.empty() ? "token" : "'" + t.text + "'";
  }
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program p;
    std::set<std::string> seen;
    while (peek().kind != Tok::kEnd) {
      const Token& t = peek();
      if (t.kind == Tok::kImport || t.kind == Tok::kFrom) {
        throw RestrictionError("import statements are not allowed", t.loc);
      }
      if (t.kind == Tok::kIdent && t.text == "def") {
        throw SyntaxError("function definitions use 'fn', not 'def'", t.loc);
      }
      if (t.kind != Tok::kFn) {
        throw SyntaxError("expected function definition, found " + describe(t), t.loc);
      }
      Function f = function();
      if (!contains(kEntryPoints, f.name)) {
        throw RestrictionError("only 'generator' and 'verifier' may be defined, found '" +
                                   f.name + "'",
                               f.loc);
      }
      if (!seen.insert(f.name).second) {
        throw RestrictionError("duplicate definition of '" + f.name + "'", f.loc);
      }
      p.functions.push_back(std::move(f));
    }
    if (p.functions.empty()) {
      throw SyntaxError("program defines no functions", peek().loc);
    }
    return p;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    next();
    return true;
  }
  const Token& expect(Tok k, const char* what) {
    if (peek().kind != k) {
      throw SyntaxError(std::string("expected ") + what + ", found " + describe(peek()), peek().loc);
    }
    return next();
  }

  Function function() {
    Function f;
    f.loc = expect(Tok::kFn, "'fn'").loc;
    f.name = expect(Tok::kIdent, "function name").text;
    expect(Tok::kLParen, "'('");
    std::set<std::string> names;
    if (peek().kind != Tok::kRParen) {
      do {
        const Token& p = expect(Tok::kIdent, "parameter name");
        if (p.text == "rng" || p.text == "math") {
          throw RestrictionError("'" + p.text + "' is a reserved runtime name", p.loc);
        }
        if (!names.insert(p.text).second) {
          throw SyntaxError("duplicate parameter '" + p.text + "'", p.loc);
        }
        f.params.push_back(p.text);
      } while (accept(Tok::kComma));
    }
    expect(Tok::kRParen, "')'");
    f.body = block();
    return f;
  }

  Block block() {
    expect(Tok::kLBrace, "'{'");
    Block b;
    while (peek().kind != Tok::kRBrace) {
      if (peek().kind == Tok::kEnd) throw SyntaxError("unterminated block", peek().loc);
      b.push_back(statement());
    }
    next();
    return b;
  }

  StmtPtr statement() {
    auto s = std::make_shared<Stmt>();
    const Token& t = peek();
    s->loc = t.loc;
    switch (t.kind) {
      case Tok::kImport:
      case Tok::kFrom: throw RestrictionError("import statements are not allowed", t.loc);
      case Tok::kFn:
        throw RestrictionError("nested function definitions are not allowed", t.loc);
      case Tok::kIf: {
        next();
        s->kind = StmtKind::kIf;
        s->branches.push_back({expression(), block()});
        while (peek().kind == Tok::kElif) {
          next();
          s->branches.push_back({expression(), block()});
        }
        if (accept(Tok::kElse)) {
          s->has_else = true;
          if (peek().kind == Tok::kIf) {
            throw SyntaxError("use 'elif' instead of 'else if'", peek().loc);
          }
          s->else_body = block();
        }
        return s;
      }
      case Tok::kWhile:
        next();
        s->kind = StmtKind::kWhile;
        s->value = expression();
        s->body = block();
        return s;
      case Tok::kReturn:
        next();
        s->kind = StmtKind::kReturn;
        if (peek().kind != Tok::kSemi) s->value = expression();
        expect(Tok::kSemi, "';'");
        return s;
      case Tok::kBreak:
      case Tok::kContinue:
        next();
        s->kind = t.kind == Tok::kBreak ? StmtKind::kBreak : StmtKind::kContinue;
        expect(Tok::kSemi, "';'");
        return s;
      default: break;
    }
    if (t.kind == Tok::kIdent && is_assign(peek(1).kind)) {
      s->kind = StmtKind::kAssign;
      s->target = next().text;
      if (s->target == "rng" || s->target == "math") {
        throw RestrictionError("cannot assign to runtime name '" + s->target + "'", s->loc);
      }
      const Token& op = next();
      ExprPtr rhs = expression();
      if (op.kind == Tok::kAssign) {
        s->value = rhs;
      } else {
        auto var = std::make_shared<Expr>();
        var->kind = ExprKind::kVariable;
        var->name = s->target;
        var->loc = s->loc;
        s->value = binary(compound_op(op.kind), var, rhs, op.loc);
      }
      expect(Tok::kSemi, "';'");
      return s;
    }
    s->kind = StmtKind::kExpr;
    s->value = expression();
    expect(Tok::kSemi, "';'");
    return s;
  }

  static bool is_assign(Tok k) {
    return k == Tok::kAssign || k == Tok::kPlusAssign || k == Tok::kMinusAssign ||
           k == Tok::kStarAssign || k == Tok::kSlashAssign;
  }
  static BinaryOp compound_op(Tok k) {
    switch (k) {
      case Tok::kPlusAssign: return BinaryOp::kAdd;
      case Tok::kMinusAssign: return BinaryOp::kSub;
      case Tok::kStarAssign: return BinaryOp::kMul;
      default: return BinaryOp::kDiv;
    }
  }

  static ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourceLocation loc) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::kBinary;
    e->binary_op = op;
    e->loc = loc;
    e->args = {std::move(lhs), std::move(rhs)};
    return e;
  }

  ExprPtr expression() { return or_expr(); }

  ExprPtr or_expr() {
    ExprPtr lhs = and_expr();
    while (peek().kind == Tok::kOr) {
      const auto loc = next().loc;
      lhs = binary(BinaryOp::kOr, lhs, and_expr(), loc);
    }
    return lhs;
  }

  ExprPtr and_expr() {
    ExprPtr lhs = not_expr();
    while (peek().kind == Tok::kAnd) {
      const auto loc = next().loc;
      lhs = binary(BinaryOp::kAnd, lhs, not_expr(), loc);
    }
    return lhs;
  }

  ExprPtr not_expr() {
    if (peek().kind == Tok::kNot) {
      auto e = std::make_shared<Expr>();
      e->loc = next().loc;
      e->kind = ExprKind::kUnary;
      e->unary_op = UnaryOp::kNot;
      e->args = {not_expr()};
      return e;
    }
    return comparison();
  }

  ExprPtr comparison() {
    ExprPtr lhs = additive();
    BinaryOp op;
    if (!comparison_op(peek().kind, op)) return lhs;
    const auto loc = next().loc;
    ExprPtr result = binary(op, lhs, additive(), loc);
    BinaryOp dummy;
    if (comparison_op(peek().kind, dummy)) {
      throw SyntaxError("chained comparisons are not supported; combine with 'and'", peek().loc);
    }
    return result;
  }

  static bool comparison_op(Tok k, BinaryOp& op) {
    switch (k) {
      case Tok::kEq: op = BinaryOp::kEq; return true;
      case Tok::kNe: op = BinaryOp::kNe; return true;
      case Tok::kLt: op = BinaryOp::kLt; return true;
      case Tok::kLe: op = BinaryOp::kLe; return true;
      case Tok::kGt: op = BinaryOp::kGt; return true;
      case Tok::kGe: op = BinaryOp::kGe; return true;
      default: return false;
    }
  }

  ExprPtr additive() {
    ExprPtr lhs = multiplicative();
    for (;;) {
      const Tok k = peek().kind;
      if (k != Tok::kPlus && k != Tok::kMinus) return lhs;
      const auto loc = next().loc;
      lhs = binary(k == Tok::kPlus ? BinaryOp::kAdd : BinaryOp::kSub, lhs, multiplicative(), loc);
    }
  }

  ExprPtr multiplicative() {
    ExprPtr lhs = unary();
    for (;;) {
      BinaryOp op;
      switch (peek().kind) {
        case Tok::kStar: op = BinaryOp::kMul; break;
        case Tok::kSlash: op = BinaryOp::kDiv; break;
        case Tok::kSlashSlash: op = BinaryOp::kFloorDiv; break;
        case Tok::kPercent: op = BinaryOp::kMod; break;
        default: return lhs;
      }
      const auto loc = next().loc;
      lhs = binary(op, lhs, unary(), loc);
    }
  }

  ExprPtr unary() {
    const Tok k = peek().kind;
    if (k == Tok::kMinus || k == Tok::kPlus) {
      auto e = std::make_shared<Expr>();
      e->loc = next().loc;
      e->kind = ExprKind::kUnary;
      e->unary_op = k == Tok::kMinus ? UnaryOp::kNeg : UnaryOp::kPos;
      e->args = {unary()};
      return e;
    }
    return power();
  }

  // ** binds tighter than unary minus on its left and is right-associative.
  ExprPtr power() {
    ExprPtr base = postfix();
    if (peek().kind == Tok::kStarStar) {
      const auto loc = next().loc;
      return binary(BinaryOp::kPow, base, unary(), loc);
    }
    return base;
  }

  ExprPtr postfix() {
    ExprPtr e = primary();
    while (peek().kind == Tok::kLBracket) {
      auto idx = std::make_shared<Expr>();
      idx->loc = next().loc;
      idx->kind = ExprKind::kIndex;
      ExprPtr key = expression();
      expect(Tok::kRBracket, "']'");
      idx->args = {e, key};
      e = idx;
    }
    return e;
  }

  ExprPtr primary() {
    const Token& t = next();
    auto e = std::make_shared<Expr>();
    e->loc = t.loc;
    switch (t.kind) {
      case Tok::kInt:
        e->literal = Value::integer(t.int_value);
        return e;
      case Tok::kFloat:
        e->literal = Value::floating(t.float_value);
        return e;
      case Tok::kString:
        e->literal = Value::string(t.text);
        return e;
      case Tok::kTrue:
      case Tok::kFalse:
        e->literal = Value::boolean(t.kind == Tok::kTrue);
        return e;
      case Tok::kNull: return e;
      case Tok::kLParen: {
        ExprPtr first = expression();
        if (accept(Tok::kComma)) {
          e->kind = ExprKind::kPair;
          e->args = {first, expression()};
          if (peek().kind == Tok::kComma) {
            throw SyntaxError("tuples have exactly two elements (flag, value)", peek().loc);
          }
          expect(Tok::kRParen, "')'");
          return e;
        }
        expect(Tok::kRParen, "')'");
        return first;
      }
      case Tok::kLBracket:
        e->kind = ExprKind::kList;
        if (peek().kind != Tok::kRBracket) {
          do {
            if (peek().kind == Tok::kRBracket) break;
            e->args.push_back(expression());
          } while (accept(Tok::kComma));
        }
        expect(Tok::kRBracket, "']'");
        return e;
      case Tok::kLBrace: {
        e->kind = ExprKind::kMap;
        std::set<std::string> seen;
        if (peek().kind != Tok::kRBrace) {
          do {
            if (peek().kind == Tok::kRBrace) break;
            const Token& k = next();
            if (k.kind != Tok::kIdent && k.kind != Tok::kString) {
              throw SyntaxError("map keys must be identifiers or strings", k.loc);
            }
            if (!seen.insert(k.text).second) {
              throw SyntaxError("duplicate map key '" + k.text + "'", k.loc);
            }
            expect(Tok::kColon, "':'");
            e->keys.push_back(k.text);
            e->args.push_back(expression());
          } while (accept(Tok::kComma));
        }
        expect(Tok::kRBrace, "'}'");
        return e;
      }
      case Tok::kIdent: {
        std::string name = t.text;
        if (peek().kind == Tok::kDot) {
          if (name != "rng" && name != "math") {
            throw SyntaxError("attribute access is only available on 'rng' and 'math'", t.loc);
          }
          next();
          name += "." + expect(Tok::kIdent, "member name").text;
        } else if (name == "rng" || name == "math") {
          throw SyntaxError("'" + name + "' is a namespace, not a value", t.loc);
        }
        if (peek().kind == Tok::kLParen) {
          next();
          check_callable(name, t.loc);
          e->kind = ExprKind::kCall;
          e->name = name;
          if (peek().kind != Tok::kRParen) {
            do {
              e->args.push_back(expression());
            } while (accept(Tok::kComma));
          }
          expect(Tok::kRParen, "')'");
          return e;
        }
        e->kind = ExprKind::kVariable;
        e->name = name;
        return e;
      }
      case Tok::kImport:
      case Tok::kFrom: throw RestrictionError("import statements are not allowed", t.loc);
      default: throw SyntaxError("unexpected " + describe(t), t.loc);
    }
  }

  static void check_callable(const std::string& name, SourceLocation loc) {
    if (contains(kBuiltins, name)) return;
    if (contains(kForbiddenCalls, name)) {
      throw RestrictionError("'" + name + "' (I/O or reflection) is not available", loc);
    }
    if (contains(kEntryPoints, name)) {
      throw RestrictionError("calling '" + name + "' is not allowed (no recursion)", loc);
    }
    throw RestrictionError("call to unknown function '" + name +
                               "' (user-defined helpers are not allowed)",
                           loc);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_builtin_function(std::string_view name) { return contains(kBuiltins, name); }

Program parse_program(std::string_view source) {
  return Parser(Lexer(source).run()).program();
}

}  // namespace tabmath::lang
