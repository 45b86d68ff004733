#include "switchvi/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>

namespace switchvi {

namespace {

struct FuncInfo {
    std::string_view name;
    Func func;
    int min_arity;
    int max_arity; // -1: unbounded
};

constexpr std::array<FuncInfo, 11> kFuncs{{
    {"abs", Func::abs, 1, 1},
    {"min", Func::min, 2, -1},
    {"max", Func::max, 2, -1},
    {"exp", Func::exp, 1, 1},
    {"log", Func::log, 1, 1},
    {"sqrt", Func::sqrt, 1, 1},
    {"pow", Func::pow, 2, 2},
    {"pos", Func::pos, 1, 1},
    {"neg", Func::neg, 1, 1},
    {"sin", Func::sin, 1, 1},
    {"cos", Func::cos, 1, 1},
}};

const FuncInfo* find_func(std::string_view name) {
    for (const auto& info : kFuncs) {
        if (info.name == name) {
            return &info;
        }
    }
    return nullptr;
}

bool all_digits_positive(std::string_view s) {
    if (s.empty() || s.front() == '0') {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

double checked(double value, const char* what) {
    if (!std::isfinite(value)) {
        throw EvalError(std::string("domain error: ") + what + " produced a non-finite value");
    }
    return value;
}

double power(double base, double exponent) {
    if (base < 0.0 && std::trunc(exponent) != exponent) {
        throw EvalError("domain error: negative base raised to a non-integer power");
    }
    if (base == 0.0 && exponent < 0.0) {
        throw EvalError("domain error: zero raised to a negative power");
    }
    return checked(std::pow(base, exponent), "pow");
}

double apply_binary(BinaryOp op, double a, double b) {
    switch (op) {
    case BinaryOp::add: return checked(a + b, "addition");
    case BinaryOp::sub: return checked(a - b, "subtraction");
    case BinaryOp::mul: return checked(a * b, "multiplication");
    case BinaryOp::div:
        if (b == 0.0) {
            throw EvalError("domain error: division by zero");
        }
        return checked(a / b, "division");
    case BinaryOp::pow: return power(a, b);
    }
    return 0.0;
}

double apply_func(Func f, std::span<const double> args) {
    switch (f) {
    case Func::abs: return std::fabs(args[0]);
    case Func::min: return *std::min_element(args.begin(), args.end());
    case Func::max: return *std::max_element(args.begin(), args.end());
    case Func::exp: return checked(std::exp(args[0]), "exp");
    case Func::log:
        if (args[0] <= 0.0) {
            throw EvalError("domain error: log of a non-positive value");
        }
        return std::log(args[0]);
    case Func::sqrt:
        if (args[0] < 0.0) {
            throw EvalError("domain error: sqrt of a negative value");
        }
        return std::sqrt(args[0]);
    case Func::pow: return power(args[0], args[1]);
    case Func::pos: return std::max(args[0], 0.0);
    case Func::neg: return std::max(-args[0], 0.0);
    case Func::sin: return std::sin(args[0]);
    case Func::cos: return std::cos(args[0]);
    }
    return 0.0;
}

char binary_symbol(BinaryOp op) {
    switch (op) {
    case BinaryOp::add: return '+';
    case BinaryOp::sub: return '-';
    case BinaryOp::mul: return '*';
    case BinaryOp::div: return '/';
    case BinaryOp::pow: return '^';
    }
    return '?';
}

std::string format_number(double v) {
    std::array<char, 40> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    ExprNodePtr parse() {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw ParseError("empty expression", pos_);
        }
        auto node = parse_expr();
        skip_ws();
        if (pos_ < src_.size()) {
            throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
        }
        return node;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])) != 0) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static ExprNodePtr make_binary(BinaryOp op, ExprNodePtr a, ExprNodePtr b) {
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::binary;
        n->op = op;
        n->args = {std::move(a), std::move(b)};
        return n;
    }

    ExprNodePtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (accept('+')) {
                lhs = make_binary(BinaryOp::add, lhs, parse_term());
            } else if (accept('-')) {
                lhs = make_binary(BinaryOp::sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    ExprNodePtr parse_term() {
        auto lhs = parse_power();
        for (;;) {
            if (accept('*')) {
                lhs = make_binary(BinaryOp::mul, lhs, parse_power());
            } else if (accept('/')) {
                lhs = make_binary(BinaryOp::div, lhs, parse_power());
            } else {
                return lhs;
            }
        }
    }

    ExprNodePtr parse_power() {
        auto lhs = parse_unary();
        while (accept('^')) {
            lhs = make_binary(BinaryOp::pow, lhs, parse_unary());
        }
        return lhs;
    }

    ExprNodePtr parse_unary() {
        if (accept('-')) {
            auto n = std::make_shared<ExprNode>();
            n->kind = ExprNode::Kind::negate;
            n->args = {parse_unary()};
            return n;
        }
        return parse_primary();
    }

    ExprNodePtr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw ParseError("unexpected end of expression", pos_);
        }
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = parse_expr();
            if (!accept(')')) {
                throw ParseError("expected ')'", pos_);
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) != 0 || c == '.') {
            return parse_number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_') {
            return parse_name();
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    ExprNodePtr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])) != 0) {
            ++pos_;
        }
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])) != 0) {
                ++pos_;
            }
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) {
                ++p;
            }
            if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p])) != 0) {
                pos_ = p;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])) != 0) {
                    ++pos_;
                }
            }
        }
        double value = 0.0;
        auto text = src_.substr(start, pos_ - start);
        auto res = std::from_chars(text.data(), text.data() + text.size(), value);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value)) {
            throw ParseError("malformed number '" + std::string(text) + "'", start);
        }
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::number;
        n->number = value;
        return n;
    }

    ExprNodePtr parse_name() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) != 0 || src_[pos_] == '_')) {
            ++pos_;
        }
        std::string name(src_.substr(start, pos_ - start));
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            const FuncInfo* info = find_func(name);
            if (info == nullptr) {
                throw ParseError("unknown function '" + name + "'", start);
            }
            ++pos_;
            auto n = std::make_shared<ExprNode>();
            n->kind = ExprNode::Kind::call;
            n->func = info->func;
            n->name = name;
            n->args.push_back(parse_expr());
            while (accept(',')) {
                n->args.push_back(parse_expr());
            }
            if (!accept(')')) {
                throw ParseError("expected ')' or ','", pos_);
            }
            const int arity = static_cast<int>(n->args.size());
            if (arity < info->min_arity || (info->max_arity >= 0 && arity > info->max_arity)) {
                throw ParseError("wrong number of arguments to '" + name + "'", start);
            }
            return n;
        }
        if (!is_valid_variable_name(name)) {
            throw ParseError("unknown variable '" + name + "'", start);
        }
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::variable;
        n->name = std::move(name);
        return n;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

double eval_node(const ExprNode& n, const std::map<std::string, double>& bindings) {
    switch (n.kind) {
    case ExprNode::Kind::number: return n.number;
    case ExprNode::Kind::variable: {
        auto it = bindings.find(n.name);
        if (it == bindings.end()) {
            throw EvalError("unbound variable '" + n.name + "'");
        }
        return it->second;
    }
    case ExprNode::Kind::negate: return -eval_node(*n.args[0], bindings);
    case ExprNode::Kind::binary:
        return apply_binary(n.op, eval_node(*n.args[0], bindings), eval_node(*n.args[1], bindings));
    case ExprNode::Kind::call: {
        std::vector<double> vals;
        vals.reserve(n.args.size());
        for (const auto& a : n.args) {
            vals.push_back(eval_node(*a, bindings));
        }
        return apply_func(n.func, vals);
    }
    }
    return 0.0;
}

void collect_vars(const ExprNode& n, std::set<std::string>& out) {
    if (n.kind == ExprNode::Kind::variable) {
        out.insert(n.name);
    }
    for (const auto& a : n.args) {
        collect_vars(*a, out);
    }
}

void print_node(const ExprNode& n, std::string& out) {
    switch (n.kind) {
    case ExprNode::Kind::number:
        if (n.number < 0.0 || std::signbit(n.number)) {
            out += "(-" + format_number(-n.number) + ")";
        } else {
            out += format_number(n.number);
        }
        return;
    case ExprNode::Kind::variable: out += n.name; return;
    case ExprNode::Kind::negate:
        out += "(-";
        print_node(*n.args[0], out);
        out += ")";
        return;
    case ExprNode::Kind::binary:
        out += "(";
        print_node(*n.args[0], out);
        out += ' ';
        out += binary_symbol(n.op);
        out += ' ';
        print_node(*n.args[1], out);
        out += ")";
        return;
    case ExprNode::Kind::call:
        out += func_name(n.func);
        out += "(";
        for (std::size_t k = 0; k < n.args.size(); ++k) {
            if (k > 0) {
                out += ", ";
            }
            print_node(*n.args[k], out);
        }
        out += ")";
        return;
    }
}

bool nodes_equal(const ExprNode& a, const ExprNode& b) {
    if (a.kind != b.kind || a.args.size() != b.args.size()) {
        return false;
    }
    switch (a.kind) {
    case ExprNode::Kind::number:
        if (a.number != b.number) return false;
        break;
    case ExprNode::Kind::variable:
        if (a.name != b.name) return false;
        break;
    case ExprNode::Kind::binary:
        if (a.op != b.op) return false;
        break;
    case ExprNode::Kind::call:
        if (a.func != b.func) return false;
        break;
    case ExprNode::Kind::negate: break;
    }
    for (std::size_t k = 0; k < a.args.size(); ++k) {
        if (!nodes_equal(*a.args[k], *b.args[k])) {
            return false;
        }
    }
    return true;
}

} // namespace

ParseError::ParseError(const std::string& message, std::size_t position)
    : std::runtime_error(message + " at column " + std::to_string(position + 1)), position_(position) {}

bool is_valid_variable_name(std::string_view name) {
    if (name == "t") {
        return true;
    }
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'z')) {
        return all_digits_positive(name.substr(1));
    }
    if (name.size() >= 5 && name.substr(0, 2) == "y_") {
        auto rest = name.substr(2);
        auto sep = rest.find('_');
        if (sep == std::string_view::npos) {
            return false;
        }
        return all_digits_positive(rest.substr(0, sep)) && all_digits_positive(rest.substr(sep + 1));
    }
    return false;
}

std::string_view func_name(Func f) {
    for (const auto& info : kFuncs) {
        if (info.func == f) {
            return info.name;
        }
    }
    return "?";
}

Expression::Expression() : Expression(Expression::number(0.0)) {}

Expression Expression::parse(std::string_view source) {
    return Expression(Parser(source).parse());
}

Expression Expression::number(double value) {
    if (!std::isfinite(value)) {
        throw std::invalid_argument("expression literal must be finite");
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::number;
    n->number = value;
    return Expression(std::move(n));
}

Expression Expression::variable(std::string name) {
    if (!is_valid_variable_name(name)) {
        throw std::invalid_argument("invalid variable name '" + name + "'");
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::variable;
    n->name = std::move(name);
    return Expression(std::move(n));
}

Expression Expression::negate(const Expression& operand) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::negate;
    n->args = {operand.root_};
    return Expression(std::move(n));
}

Expression Expression::binary(BinaryOp op, const Expression& lhs, const Expression& rhs) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::binary;
    n->op = op;
    n->args = {lhs.root_, rhs.root_};
    return Expression(std::move(n));
}

Expression Expression::call(Func func, std::vector<Expression> args) {
    const FuncInfo* info = find_func(func_name(func));
    const int arity = static_cast<int>(args.size());
    if (arity < info->min_arity || (info->max_arity >= 0 && arity > info->max_arity)) {
        throw std::invalid_argument("wrong number of arguments to '" + std::string(info->name) + "'");
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::call;
    n->func = func;
    n->name = std::string(info->name);
    for (auto& a : args) {
        n->args.push_back(a.root_);
    }
    return Expression(std::move(n));
}

double Expression::eval(const std::map<std::string, double>& bindings) const {
    return eval_node(*root_, bindings);
}

std::set<std::string> Expression::free_vars() const {
    std::set<std::string> out;
    collect_vars(*root_, out);
    return out;
}

std::string Expression::to_string() const {
    std::string out;
    print_node(*root_, out);
    return out;
}

bool operator==(const Expression& a, const Expression& b) {
    return nodes_equal(*a.root_, *b.root_);
}

void VarLayout::add(const std::string& name) {
    if (index_.count(name) != 0) {
        return;
    }
    index_[name] = static_cast<int>(names_.size());
    names_.push_back(name);
}

int VarLayout::slot(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

CompiledExpr::CompiledExpr(const Expression& expr, const VarLayout& layout) {
    std::size_t depth = 0;
    std::function<void(const ExprNode&)> emit = [&](const ExprNode& n) {
        Instr ins{};
        switch (n.kind) {
        case ExprNode::Kind::number:
            ins.code = Instr::Code::push;
            ins.value = n.number;
            code_.push_back(ins);
            ++depth;
            break;
        case ExprNode::Kind::variable: {
            const int s = layout.slot(n.name);
            if (s < 0) {
                throw EvalError("unbound variable '" + n.name + "'");
            }
            ins.code = Instr::Code::load;
            ins.slot = s;
            code_.push_back(ins);
            constant_ = false;
            ++depth;
            break;
        }
        case ExprNode::Kind::negate:
            emit(*n.args[0]);
            ins.code = Instr::Code::negate;
            code_.push_back(ins);
            break;
        case ExprNode::Kind::binary:
            emit(*n.args[0]);
            emit(*n.args[1]);
            switch (n.op) {
            case BinaryOp::add: ins.code = Instr::Code::add; break;
            case BinaryOp::sub: ins.code = Instr::Code::sub; break;
            case BinaryOp::mul: ins.code = Instr::Code::mul; break;
            case BinaryOp::div: ins.code = Instr::Code::div; break;
            case BinaryOp::pow: ins.code = Instr::Code::pow; break;
            }
            code_.push_back(ins);
            --depth;
            break;
        case ExprNode::Kind::call:
            for (const auto& a : n.args) {
                emit(*a);
            }
            ins.code = Instr::Code::call;
            ins.func = n.func;
            ins.arity = static_cast<unsigned char>(n.args.size());
            code_.push_back(ins);
            depth -= n.args.size() - 1;
            break;
        }
        max_depth_ = std::max(max_depth_, depth);
    };
    emit(expr.root());
}

double CompiledExpr::operator()(std::span<const double> slots) const {
    constexpr std::size_t kInline = 32;
    std::array<double, kInline> inline_stack{};
    std::vector<double> heap_stack;
    double* stack = inline_stack.data();
    if (max_depth_ > kInline) {
        heap_stack.resize(max_depth_);
        stack = heap_stack.data();
    }
    std::size_t sp = 0;
    for (const Instr& ins : code_) {
        switch (ins.code) {
        case Instr::Code::push: stack[sp++] = ins.value; break;
        case Instr::Code::load: stack[sp++] = slots[static_cast<std::size_t>(ins.slot)]; break;
        case Instr::Code::negate: stack[sp - 1] = -stack[sp - 1]; break;
        case Instr::Code::add:
            --sp;
            stack[sp - 1] = apply_binary(BinaryOp::add, stack[sp - 1], stack[sp]);
            break;
        case Instr::Code::sub:
            --sp;
            stack[sp - 1] = apply_binary(BinaryOp::sub, stack[sp - 1], stack[sp]);
            break;
        case Instr::Code::mul:
            --sp;
            stack[sp - 1] = apply_binary(BinaryOp::mul, stack[sp - 1], stack[sp]);
            break;
        case Instr::Code::div:
            --sp;
            stack[sp - 1] = apply_binary(BinaryOp::div, stack[sp - 1], stack[sp]);
            break;
        case Instr::Code::pow:
            --sp;
            stack[sp - 1] = apply_binary(BinaryOp::pow, stack[sp - 1], stack[sp]);
            break;
        case Instr::Code::call: {
            const std::size_t base = sp - ins.arity;
            const double r = apply_func(ins.func, std::span<const double>(stack + base, ins.arity));
            sp = base;
            stack[sp++] = r;
            break;
        }
        }
    }
    return stack[0];
}

} // namespace switchvi
