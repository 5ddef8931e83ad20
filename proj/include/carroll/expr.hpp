#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carroll/core.hpp"

namespace carroll {

// Small arithmetic grammar used by scenario files, atlas files and CLI inputs.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | func '(' expr ')' | '(' expr ')'
//
// Functions: exp sin cos tan ln log sqrt sinh cosh asinh abs. Constant: pi. The UTF-8 operators
// "·" and "−" are accepted as '*' and '-'.
class Expression {
public:
    Expression() = default;

    /// Parses `src`; identifiers must be in `vars` (argument order) or be `pi`.
    static Expression parse(std::string_view src, std::vector<std::string> vars = {}) {
        Parser p{normalize(src), vars};
        Expression e;
        e.root_ = p.parse_all();
        e.source_ = std::string(src);
        e.vars_ = std::move(vars);
        return e;
    }

    double operator()(std::span<const double> args) const {
        if (!root_) throw ContractViolation("evaluating an empty expression");
        if (args.size() < vars_.size()) {
            throw ContractViolation("expression '" + source_ + "' expects " +
                                    std::to_string(vars_.size()) + " arguments");
        }
        return root_->eval(args);
    }

    double operator()(std::initializer_list<double> args) const {
        return (*this)(std::span<const double>(args.begin(), args.size()));
    }

    double operator()(const Vec& args) const {
        return (*this)(std::span<const double>(args.data(), static_cast<std::size_t>(args.size())));
    }

    bool empty() const { return !root_; }
    const std::string& source() const { return source_; }
    const std::vector<std::string>& variables() const { return vars_; }

    /// True when the expression does not reference variable `name`.
    bool independent_of(std::string_view name) const {
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (vars_[i] == name) return !root_ || !root_->uses(static_cast<int>(i));
        }
        return true;
    }

private:
    enum class Op { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Sin, Cos, Tan, Ln, Sqrt, Sinh, Cosh, Asinh, Abs };

    struct Node {
        Op op = Op::Num;
        double value = 0.0;
        int var = -1;
        std::shared_ptr<const Node> a, b;

        double eval(std::span<const double> args) const {
            switch (op) {
                case Op::Num: return value;
                case Op::Var: return args[static_cast<std::size_t>(var)];
                case Op::Add: return a->eval(args) + b->eval(args);
                case Op::Sub: return a->eval(args) - b->eval(args);
                case Op::Mul: return a->eval(args) * b->eval(args);
                case Op::Div: return a->eval(args) / b->eval(args);
                case Op::Pow: return std::pow(a->eval(args), b->eval(args));
                case Op::Neg: return -a->eval(args);
                case Op::Exp: return std::exp(a->eval(args));
                case Op::Sin: return std::sin(a->eval(args));
                case Op::Cos: return std::cos(a->eval(args));
                case Op::Tan: return std::tan(a->eval(args));
                case Op::Ln: return std::log(a->eval(args));
                case Op::Sqrt: return std::sqrt(a->eval(args));
                case Op::Sinh: return std::sinh(a->eval(args));
                case Op::Cosh: return std::cosh(a->eval(args));
                case Op::Asinh: return std::asinh(a->eval(args));
                case Op::Abs: return std::abs(a->eval(args));
            }
            return 0.0;
        }

        bool uses(int v) const {
            if (op == Op::Var) return var == v;
            return (a && a->uses(v)) || (b && b->uses(v));
        }
    };
    using NodePtr = std::shared_ptr<const Node>;

    static std::string normalize(std::string_view s) {
        std::string out;
        out.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto c = static_cast<unsigned char>(s[i]);
            if (c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xB7) {
                out += '*';
                ++i;
            } else if (c == 0xE2 && i + 2 < s.size() &&
                       static_cast<unsigned char>(s[i + 1]) == 0x88 &&
                       static_cast<unsigned char>(s[i + 2]) == 0x92) {
                out += '-';
                i += 2;
            } else {
                out += s[i];
            }
        }
        return out;
    }

    struct Parser {
        std::string src;
        const std::vector<std::string>& vars;
        std::size_t pos = 0;

        [[noreturn]] void fail(const std::string& what) const {
            throw ParseError("expression '" + src + "': " + what + " at offset " +
                             std::to_string(pos));
        }

        void skip() {
            while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
        }

        bool accept(char c) {
            skip();
            if (pos < src.size() && src[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        static NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
            auto n = std::make_shared<Node>();
            n->op = op;
            n->a = std::move(a);
            n->b = std::move(b);
            return n;
        }

        static NodePtr number(double v) {
            auto n = std::make_shared<Node>();
            n->op = Op::Num;
            n->value = v;
            return n;
        }

        NodePtr parse_all() {
            skip();
            if (pos >= src.size()) fail("empty expression");
            NodePtr e = expr();
            skip();
            if (pos != src.size()) fail("unexpected trailing input");
            return e;
        }

        NodePtr expr() {
            NodePtr lhs = term();
            for (;;) {
                if (accept('+')) {
                    lhs = make(Op::Add, lhs, term());
                } else if (accept('-')) {
                    lhs = make(Op::Sub, lhs, term());
                } else {
                    return lhs;
                }
            }
        }

        NodePtr term() {
            NodePtr lhs = unary();
            for (;;) {
                if (accept('*')) {
                    lhs = make(Op::Mul, lhs, unary());
                } else if (accept('/')) {
                    lhs = make(Op::Div, lhs, unary());
                } else {
                    return lhs;
                }
            }
        }

        NodePtr unary() {
            if (accept('-')) return make(Op::Neg, unary());
            if (accept('+')) return unary();
            return power();
        }

        NodePtr power() {
            NodePtr base = primary();
            if (accept('^')) return make(Op::Pow, base, unary());
            return base;
        }

        NodePtr primary() {
            skip();
            if (pos >= src.size()) fail("unexpected end of input");
            const char c = src[pos];
            if (accept('(')) {
                NodePtr e = expr();
                if (!accept(')')) fail("expected ')'");
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                const char* begin = src.c_str() + pos;
                char* end = nullptr;
                const double v = std::strtod(begin, &end);
                if (end == begin) fail("malformed number");
                pos += static_cast<std::size_t>(end - begin);
                return number(v);
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const std::size_t start = pos;
                while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) ||
                                            src[pos] == '_')) {
                    ++pos;
                }
                const std::string name = src.substr(start, pos - start);
                skip();
                if (pos < src.size() && src[pos] == '(') {
                    ++pos;
                    NodePtr arg = expr();
                    if (!accept(')')) fail("expected ')' after function argument");
                    if (name == "exp") return make(Op::Exp, arg);
                    if (name == "sin") return make(Op::Sin, arg);
                    if (name == "cos") return make(Op::Cos, arg);
                    if (name == "tan") return make(Op::Tan, arg);
                    if (name == "ln" || name == "log") return make(Op::Ln, arg);
                    if (name == "sqrt") return make(Op::Sqrt, arg);
                    if (name == "sinh") return make(Op::Sinh, arg);
                    if (name == "cosh") return make(Op::Cosh, arg);
                    if (name == "asinh") return make(Op::Asinh, arg);
                    if (name == "abs") return make(Op::Abs, arg);
                    fail("unknown function '" + name + "'");
                }
                for (std::size_t i = 0; i < vars.size(); ++i) {
                    if (vars[i] == name) {
                        auto n = std::make_shared<Node>();
                        n->op = Op::Var;
                        n->var = static_cast<int>(i);
                        return n;
                    }
                }
                if (name == "pi") return number(std::numbers::pi);
                fail("unknown variable '" + name + "'");
            }
            fail(std::string("unexpected character '") + c + "'");
        }
    };

    NodePtr root_;
    std::string source_;
    std::vector<std::string> vars_;
};

/// Evaluates a closed expression such as "pi/2".
inline double evaluate_constant(std::string_view src) {
    return Expression::parse(src)({});
}

/// Splits on `sep` and evaluates each piece as a constant expression.
inline std::vector<double> evaluate_list(std::string_view src, char sep = ',') {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= src.size()) {
        const auto end = src.find(sep, start);
        const auto piece = src.substr(start, end == std::string_view::npos ? src.npos : end - start);
        out.push_back(evaluate_constant(piece));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

}  // namespace carroll
