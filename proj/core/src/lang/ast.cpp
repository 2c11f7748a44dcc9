#include "tabmath/lang/ast.hpp"

#include <algorithm>

namespace tabmath::lang {

const char* to_string(UnaryOp op) {
  switch (op) {
    case UnaryOp::kNeg: return "-";
    case UnaryOp::kPos: return "+";
    case UnaryOp::kNot: return "not";
  }
  return "?";
}

const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::kAdd: return "+";
    case BinaryOp::kSub: return "-";
    case BinaryOp::kMul: return "*";
    case BinaryOp::kDiv: return "/";
    case BinaryOp::kFloorDiv: return "//";
    case BinaryOp::kMod: return "%";
    case BinaryOp::kPow: return "**";
    case BinaryOp::kEq: return "==";
    case BinaryOp::kNe: return "!=";
    case BinaryOp::kLt: return "<";
    case BinaryOp::kLe: return "<=";
    case BinaryOp::kGt: return ">";
    case BinaryOp::kGe: return ">=";
    case BinaryOp::kAnd: return "and";
    case BinaryOp::kOr: return "or";
  }
  return "?";
}

const Function* Program::find(std::string_view name) const {
  auto it = std::find_if(functions.begin(), functions.end(),
                         [&](const Function& f) { return f.name == name; });
  return it == functions.end() ? nullptr : &*it;
}

namespace {

template <typename T>
bool ptr_equal(const std::shared_ptr<const T>& a, const std::shared_ptr<const T>& b) {
  if (!a || !b) return !a && !b;
  return *a == *b;
}

template <typename T>
bool seq_equal(const std::vector<std::shared_ptr<const T>>& a,
               const std::vector<std::shared_ptr<const T>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!ptr_equal(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::kLiteral:
      return a.literal.type() == b.literal.type() && a.literal == b.literal;
    case ExprKind::kVariable: return a.name == b.name;
    case ExprKind::kMap: return a.keys == b.keys && seq_equal(a.args, b.args);
    case ExprKind::kUnary: return a.unary_op == b.unary_op && seq_equal(a.args, b.args);
    case ExprKind::kBinary: return a.binary_op == b.binary_op && seq_equal(a.args, b.args);
    case ExprKind::kCall: return a.name == b.name && seq_equal(a.args, b.args);
    case ExprKind::kList:
    case ExprKind::kPair:
    case ExprKind::kIndex: return seq_equal(a.args, b.args);
  }
  return false;
}

bool operator==(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case StmtKind::kAssign: return a.target == b.target && ptr_equal(a.value, b.value);
    case StmtKind::kReturn:
    case StmtKind::kExpr: return ptr_equal(a.value, b.value);
    case StmtKind::kWhile: return ptr_equal(a.value, b.value) && seq_equal(a.body, b.body);
    case StmtKind::kBreak:
    case StmtKind::kContinue: return true;
    case StmtKind::kIf: {
      if (a.branches.size() != b.branches.size() || a.has_else != b.has_else) return false;
      for (std::size_t i = 0; i < a.branches.size(); ++i) {
        if (!ptr_equal(a.branches[i].condition, b.branches[i].condition) ||
            !seq_equal(a.branches[i].body, b.branches[i].body)) {
          return false;
        }
      }
      return seq_equal(a.else_body, b.else_body);
    }
  }
  return false;
}

bool operator==(const Function& a, const Function& b) {
  return a.name == b.name && a.params == b.params && seq_equal(a.body, b.body);
}

bool operator==(const Program& a, const Program& b) { return a.functions == b.functions; }

namespace {

class Printer {
 public:
  std::string program(const Program& p) {
    for (std::size_t i = 0; i < p.functions.size(); ++i) {
      if (i > 0) out_ += "\n";
      function(p.functions[i]);
    }
    return std::move(out_);
  }

 private:
  void function(const Function& f) {
    out_ += "fn " + f.name + "(";
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      if (i > 0) out_ += ", ";
      out_ += f.params[i];
    }
    out_ += ") ";
    block(f.body, 0);
    out_ += "\n";
  }

  void block(const Block& b, int depth) {
    out_ += "{\n";
    for (const auto& s : b) stmt(*s, depth + 1);
    indent(depth);
    out_ += "}";
  }

  void indent(int depth) { out_.append(static_cast<std::size_t>(depth) * 2, ' '); }

  void stmt(const Stmt& s, int depth) {
    indent(depth);
    switch (s.kind) {
      case StmtKind::kAssign: out_ += s.target + " = " + expr(*s.value) + ";\n"; break;
      case StmtKind::kReturn:
        out_ += s.value ? "return " + expr(*s.value) + ";\n" : "return;\n";
        break;
      case StmtKind::kExpr: out_ += expr(*s.value) + ";\n"; break;
      case StmtKind::kBreak: out_ += "break;\n"; break;
      case StmtKind::kContinue: out_ += "continue;\n"; break;
      case StmtKind::kWhile:
        out_ += "while " + expr(*s.value) + " ";
        block(s.body, depth);
        out_ += "\n";
        break;
      case StmtKind::kIf:
        for (std::size_t i = 0; i < s.branches.size(); ++i) {
          out_ += i == 0 ? "if " : " elif ";
          out_ += expr(*s.branches[i].condition) + " ";
          block(s.branches[i].body, depth);
        }
        if (s.has_else) {
          out_ += " else ";
          block(s.else_body, depth);
        }
        out_ += "\n";
        break;
    }
  }

  std::string expr(const Expr& e) {
    switch (e.kind) {
      case ExprKind::kLiteral: return repr_value(e.literal);
      case ExprKind::kVariable: return e.name;
      case ExprKind::kList: return "[" + join(e.args) + "]";
      case ExprKind::kPair: return "(" + expr(*e.args[0]) + ", " + expr(*e.args[1]) + ")";
      case ExprKind::kMap: {
        std::string out = "{";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          if (i > 0) out += ", ";
          out += repr_value(Value::string(e.keys[i])) + ": " + expr(*e.args[i]);
        }
        return out + "}";
      }
      case ExprKind::kIndex: return "(" + expr(*e.args[0]) + ")[" + expr(*e.args[1]) + "]";
      case ExprKind::kUnary:
        return std::string("(") + to_string(e.unary_op) +
               (e.unary_op == UnaryOp::kNot ? " " : "") + expr(*e.args[0]) + ")";
      case ExprKind::kBinary:
        return "(" + expr(*e.args[0]) + " " + to_string(e.binary_op) + " " + expr(*e.args[1]) + ")";
      case ExprKind::kCall: return e.name + "(" + join(e.args) + ")";
    }
    return {};
  }

  std::string join(const std::vector<ExprPtr>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i > 0) out += ", ";
      out += expr(*items[i]);
    }
    return out;
  }

  std::string out_;
};

}  // namespace

std::string to_source(const Program& program) { return Printer().program(program); }

}  // namespace tabmath::lang
