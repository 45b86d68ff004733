#pragma once

// Arithmetic expression language for coefficient functions.
//
// Grammar (whitespace-insensitive, all binary operators left-associative):
//
//   expr    := term (('+' | '-') term)*
//   term    := power (('*' | '/') power)*
//   power   := unary ('^' unary)*
//   unary   := '-' unary | primary
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Unary minus binds tighter than '^', so "-x1^2" is (-x1)^2.
//
// Variable names: t, x<c>, z<r>, y_<i>_<j> (all indices 1-based).
// Functions: abs min max exp log sqrt pow pos neg sin cos.

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace switchvi {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t position);

    /// Zero-based character offset into the source text.
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BinaryOp { add, sub, mul, div, pow };

enum class Func { abs, min, max, exp, log, sqrt, pow, pos, neg, sin, cos };

struct ExprNode {
    enum class Kind { number, variable, negate, binary, call };

    Kind kind = Kind::number;
    double number = 0.0;
    std::string name;
    BinaryOp op = BinaryOp::add;
    Func func = Func::abs;
    std::vector<std::shared_ptr<const ExprNode>> args;
};

using ExprNodePtr = std::shared_ptr<const ExprNode>;

/// Immutable expression tree. Copies share structure.
class Expression {
public:
    Expression();

    static Expression parse(std::string_view source);

    static Expression number(double value);
    static Expression variable(std::string name);
    static Expression negate(const Expression& operand);
    static Expression binary(BinaryOp op, const Expression& lhs, const Expression& rhs);
    static Expression call(Func func, std::vector<Expression> args);

    double eval(const std::map<std::string, double>& bindings) const;

    std::set<std::string> free_vars() const;

    /// Fully parenthesized text that reparses to the same tree.
    std::string to_string() const;

    const ExprNode& root() const { return *root_; }

    friend bool operator==(const Expression& a, const Expression& b);

private:
    explicit Expression(ExprNodePtr root) : root_(std::move(root)) {}

    ExprNodePtr root_;
};

bool is_valid_variable_name(std::string_view name);

std::string_view func_name(Func f);

/// Maps variable names to slot positions of an evaluation buffer.
class VarLayout {
public:
    void add(const std::string& name);
    /// -1 when the name is not part of the layout.
    int slot(const std::string& name) const;
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::map<std::string, int> index_;
};

/// Flattened postfix form of an Expression bound to a VarLayout.
/// Evaluation reads slots from a span and is reentrant.
class CompiledExpr {
public:
    CompiledExpr() = default;
    CompiledExpr(const Expression& expr, const VarLayout& layout);

    double operator()(std::span<const double> slots) const;

    bool is_constant() const { return constant_; }

private:
    struct Instr {
        enum class Code : unsigned char { push, load, negate, add, sub, mul, div, pow, call };
        Code code;
        Func func;
        unsigned char arity;
        int slot;
        double value;
    };

    std::vector<Instr> code_;
    std::size_t max_depth_ = 0;
    bool constant_ = true;
};

} // namespace switchvi
