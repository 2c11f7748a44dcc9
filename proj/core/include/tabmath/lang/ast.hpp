#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tabmath/lang/errors.hpp"
#include "tabmath/lang/value.hpp"

namespace tabmath::lang {

enum class UnaryOp { kNeg, kPos, kNot };

enum class BinaryOp {
  kAdd, kSub, kMul, kDiv, kFloorDiv, kMod, kPow,
  kEq, kNe, kLt, kLe, kGt, kGe,
  kAnd, kOr,
};

const char* to_string(UnaryOp op);
const char* to_string(BinaryOp op);

struct Expr;
struct Stmt;
using ExprPtr = std::shared_ptr<const Expr>;
using StmtPtr = std::shared_ptr<const Stmt>;
using Block = std::vector<StmtPtr>;

enum class ExprKind {
  kLiteral,   // literal
  kVariable,  // name (also qualified constants such as math.pi)
  kList,      // args
  kMap,       // keys[i] -> args[i]
  kPair,      // args[0], args[1]
  kIndex,     // args[0][args[1]]
  kUnary,     // unary_op args[0]
  kBinary,    // args[0] binary_op args[1]
  kCall,      // name(args...)
};

struct Expr {
  ExprKind kind = ExprKind::kLiteral;
  SourceLocation loc;
  Value literal;
  std::string name;
  UnaryOp unary_op = UnaryOp::kNeg;
  BinaryOp binary_op = BinaryOp::kAdd;
  std::vector<ExprPtr> args;
  std::vector<std::string> keys;
};

enum class StmtKind { kAssign, kIf, kWhile, kReturn, kBreak, kContinue, kExpr };

struct IfBranch {
  ExprPtr condition;
  Block body;
};

struct Stmt {
  StmtKind kind = StmtKind::kExpr;
  SourceLocation loc;
  std::string target;             // kAssign
  ExprPtr value;                  // kAssign, kReturn (may be null), kExpr, kWhile condition
  std::vector<IfBranch> branches; // kIf: if + elif chain
  Block else_body;                // kIf
  bool has_else = false;          // kIf
  Block body;                     // kWhile
};

struct Function {
  std::string name;
  std::vector<std::string> params;
  Block body;
  SourceLocation loc;
};

/// Parsed operator-language program. Immutable after parsing and safe to share
/// across threads.
struct Program {
  std::vector<Function> functions;

  const Function* find(std::string_view name) const;
};

// Structural equality; source locations are ignored.
bool operator==(const Expr& a, const Expr& b);
bool operator==(const Stmt& a, const Stmt& b);
bool operator==(const Function& a, const Function& b);
bool operator==(const Program& a, const Program& b);

/// Pretty-prints a program in canonical form. Parsing the output yields a
/// program equal to the input.
std::string to_source(const Program& program);

}  // namespace tabmath::lang
