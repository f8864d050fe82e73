// Utility and complexity expressions.
//
// Grammar (documented in the README):
//   expr   := "if" expr "then" expr "else" expr | rel
//   rel    := arith (("=="|"!="|"<"|"<="|">"|">=") arith)?
//   arith  := term (("+"|"-") term)*
//   term   := factor ("*" factor)*
//   factor := "-" factor | atom
//   atom   := INT ("/" INT)? | STRING | IDENT | "isBot" "(" expr ")"
//           | "rot" "(" expr ")" | "(" expr ")"
//
// Variables: t1..tm, tn, a1..am, c1..cm, steps, coinBits, inputBits,
// outputLen, stateCount, bitsSent, bitsRead.  Values are exact rationals,
// strings, booleans (from comparisons) and the non-termination marker BOT.
// Evaluation is side-effect free; type mismatches raise EvalError.
#pragma once

#include "bmg/machine.hpp"
#include "bmg/rational.hpp"

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bmg {

struct ParseError : std::runtime_error {
    std::size_t position;
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// AST

enum class BinOp { Add, Sub, Mul, Eq, Ne, Lt, Le, Gt, Ge };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    struct Lit {
        Rat value;
    };
    struct Str {
        std::string value;
    };
    struct Var {
        std::string name;
    };
    struct Neg {
        Expr child;
    };
    struct Bin {
        BinOp op;
        Expr lhs, rhs;
    };
    struct If {
        Expr cond, then_branch, else_branch;
    };
    struct IsBot {
        Expr child;
    };
    struct Rot {
        Expr child;
    };

    std::variant<Lit, Str, Var, Neg, Bin, If, IsBot, Rot> node;
};

inline Expr expr_lit(Rat v) { return std::make_shared<ExprNode>(ExprNode{ExprNode::Lit{std::move(v)}}); }
inline Expr expr_str(std::string s) {
    return std::make_shared<ExprNode>(ExprNode{ExprNode::Str{std::move(s)}});
}
inline Expr expr_var(std::string name) {
    return std::make_shared<ExprNode>(ExprNode{ExprNode::Var{std::move(name)}});
}
inline Expr expr_neg(Expr e) { return std::make_shared<ExprNode>(ExprNode{ExprNode::Neg{std::move(e)}}); }
inline Expr expr_bin(BinOp op, Expr a, Expr b) {
    return std::make_shared<ExprNode>(ExprNode{ExprNode::Bin{op, std::move(a), std::move(b)}});
}
inline Expr expr_if(Expr c, Expr t, Expr e) {
    return std::make_shared<ExprNode>(ExprNode{ExprNode::If{std::move(c), std::move(t), std::move(e)}});
}
inline Expr expr_isbot(Expr e) {
    return std::make_shared<ExprNode>(ExprNode{ExprNode::IsBot{std::move(e)}});
}
inline Expr expr_rot(Expr e) {
    return std::make_shared<ExprNode>(ExprNode{ExprNode::Rot{std::move(e)}});
}

// ---------------------------------------------------------------------------
// Values and environments

struct BotVal {
    bool operator==(const BotVal&) const = default;
};
using Value = std::variant<Rat, std::string, bool, BotVal>;

inline Value value_of(const Action& a) {
    if (a.is_bot()) return BotVal{};
    return a.str();
}

struct Env {
    std::map<std::string, Value> vars;

    Env& set(std::string name, Value v) {
        vars[std::move(name)] = std::move(v);
        return *this;
    }
};

// ---------------------------------------------------------------------------
// Variable scopes

// The metric variables a complexity model may read.
inline const std::vector<std::string>& metric_variables() {
    static const std::vector<std::string> names = {
        "steps", "coinBits", "inputBits", "outputLen", "stateCount", "bitsSent", "bitsRead"};
    return names;
}

// Checks a variable name against the documented vocabulary.  player_count
// of nullopt allows any positive index.
inline bool known_variable(const std::string& name, std::optional<int> player_count) {
    for (const auto& m : metric_variables())
        if (name == m) return true;
    if (name == "tn") return true;
    if (name.size() >= 2 && (name[0] == 't' || name[0] == 'a' || name[0] == 'c')) {
        for (std::size_t i = 1; i < name.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
        int idx = std::stoi(name.substr(1));
        if (idx < 1) return false;
        return !player_count || idx <= *player_count;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Parser

namespace detail {

struct Lexer {
    const std::string& text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eof() {
        skip_ws();
        return pos >= text.size();
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    bool accept(const std::string& tok) {
        skip_ws();
        if (text.compare(pos, tok.size(), tok) != 0) return false;
        // keywords must not swallow identifier prefixes
        if (std::isalpha(static_cast<unsigned char>(tok[0]))) {
            std::size_t end = pos + tok.size();
            if (end < text.size() &&
                (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_'))
                return false;
        }
        pos += tok.size();
        return true;
    }
    void expect(const std::string& tok) {
        if (!accept(tok)) throw ParseError("expected '" + tok + "'", pos);
    }
};

struct Parser {
    Lexer lex;
    std::optional<int> player_count;

    Expr parse_expr() {
        if (lex.accept("if")) {
            Expr c = parse_expr();
            lex.expect("then");
            Expr t = parse_expr();
            lex.expect("else");
            Expr e = parse_expr();
            return expr_if(c, t, e);
        }
        return parse_rel();
    }

    Expr parse_rel() {
        Expr lhs = parse_arith();
        static const std::pair<const char*, BinOp> rel_ops[] = {
            {"==", BinOp::Eq}, {"!=", BinOp::Ne}, {"<=", BinOp::Le},
            {">=", BinOp::Ge}, {"<", BinOp::Lt},  {">", BinOp::Gt}};
        for (const auto& [tok, op] : rel_ops)
            if (lex.accept(tok)) return expr_bin(op, lhs, parse_arith());
        return lhs;
    }

    Expr parse_arith() {
        Expr e = parse_term();
        while (true) {
            if (lex.accept("+"))
                e = expr_bin(BinOp::Add, e, parse_term());
            else if (lex.accept("-"))
                e = expr_bin(BinOp::Sub, e, parse_term());
            else
                return e;
        }
    }

    Expr parse_term() {
        Expr e = parse_factor();
        while (lex.accept("*")) e = expr_bin(BinOp::Mul, e, parse_factor());
        return e;
    }

    Expr parse_factor() {
        if (lex.accept("-")) return expr_neg(parse_factor());
        return parse_atom();
    }

    Expr parse_atom() {
        lex.skip_ws();
        std::size_t start = lex.pos;
        if (lex.eof()) throw ParseError("unexpected end of expression", start);
        char c = lex.peek();
        if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
        if (c == '"') return parse_string();
        if (lex.accept("isBot")) {
            lex.expect("(");
            Expr e = parse_expr();
            lex.expect(")");
            return expr_isbot(e);
        }
        if (lex.accept("rot")) {
            lex.expect("(");
            Expr e = parse_expr();
            lex.expect(")");
            return expr_rot(e);
        }
        if (lex.accept("(")) {
            Expr e = parse_expr();
            lex.expect(")");
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::string name = parse_ident();
            if (!known_variable(name, player_count))
                throw ParseError("unknown variable '" + name + "'", start);
            return expr_var(name);
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "'", start);
    }

    Expr parse_number() {
        BigInt num = parse_int();
        std::size_t save = lex.pos;
        if (lex.accept("/")) {
            if (std::isdigit(static_cast<unsigned char>(lex.peek()))) {
                BigInt den = parse_int();
                if (den == 0) throw ParseError("zero denominator", lex.pos);
                return expr_lit(Rat(num, den));
            }
            lex.pos = save;
        }
        return expr_lit(Rat(num));
    }

    BigInt parse_int() {
        lex.skip_ws();
        std::size_t start = lex.pos;
        while (lex.pos < lex.text.size() && std::isdigit(static_cast<unsigned char>(lex.text[lex.pos])))
            ++lex.pos;
        if (start == lex.pos) throw ParseError("expected integer", start);
        return BigInt(lex.text.substr(start, lex.pos - start));
    }

    Expr parse_string() {
        std::size_t start = lex.pos;
        ++lex.pos;  // opening quote
        std::string out;
        while (lex.pos < lex.text.size() && lex.text[lex.pos] != '"') out.push_back(lex.text[lex.pos++]);
        if (lex.pos >= lex.text.size()) throw ParseError("unterminated string literal", start);
        ++lex.pos;  // closing quote
        return expr_str(out);
    }

    std::string parse_ident() {
        std::size_t start = lex.pos;
        while (lex.pos < lex.text.size()) {
            char c = lex.text[lex.pos];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
                ++lex.pos;
            else
                break;
        }
        return lex.text.substr(start, lex.pos - start);
    }
};

}  // namespace detail

// Parses an expression.  player_count, when given, bounds the player-indexed
// variables in scope (t3 in a 2-player game is rejected).
inline Expr parse_expression(const std::string& text,
                             std::optional<int> player_count = std::nullopt) {
    detail::Parser p{detail::Lexer{text}, player_count};
    Expr e = p.parse_expr();
    if (!p.lex.eof()) throw ParseError("trailing input", p.lex.pos);
    return e;
}

// ---------------------------------------------------------------------------
// Printer (round-trips through parse_expression)

namespace detail {

inline int precedence_of(const ExprNode& n) {
    if (std::holds_alternative<ExprNode::If>(n.node)) return 0;
    if (const auto* b = std::get_if<ExprNode::Bin>(&n.node)) {
        switch (b->op) {
            case BinOp::Eq:
            case BinOp::Ne:
            case BinOp::Lt:
            case BinOp::Le:
            case BinOp::Gt:
            case BinOp::Ge:
                return 1;
            case BinOp::Add:
            case BinOp::Sub:
                return 2;
            case BinOp::Mul:
                return 3;
        }
    }
    if (std::holds_alternative<ExprNode::Neg>(n.node)) return 4;
    return 5;
}

inline const char* op_token(BinOp op) {
    switch (op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Eq: return "==";
        case BinOp::Ne: return "!=";
        case BinOp::Lt: return "<";
        case BinOp::Le: return "<=";
        case BinOp::Gt: return ">";
        case BinOp::Ge: return ">=";
    }
    return "?";
}

inline void print_expr(const Expr& e, std::string& out, int parent_prec) {
    int prec = precedence_of(*e);
    bool parens = prec < parent_prec;
    if (parens) out.push_back('(');
    std::visit(
        [&](const auto& n) {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ExprNode::Lit>) {
                out += rat_str(n.value);
            } else if constexpr (std::is_same_v<N, ExprNode::Str>) {
                out.push_back('"');
                out += n.value;
                out.push_back('"');
            } else if constexpr (std::is_same_v<N, ExprNode::Var>) {
                out += n.name;
            } else if constexpr (std::is_same_v<N, ExprNode::Neg>) {
                out.push_back('-');
                print_expr(n.child, out, 5);
            } else if constexpr (std::is_same_v<N, ExprNode::Bin>) {
                bool rel = precedence_of(*e) == 1;
                print_expr(n.lhs, out, rel ? prec + 1 : prec);
                out.push_back(' ');
                out += op_token(n.op);
                out.push_back(' ');
                print_expr(n.rhs, out, prec + 1);
            } else if constexpr (std::is_same_v<N, ExprNode::If>) {
                out += "if ";
                print_expr(n.cond, out, 0);
                out += " then ";
                print_expr(n.then_branch, out, 0);
                out += " else ";
                print_expr(n.else_branch, out, 0);
            } else if constexpr (std::is_same_v<N, ExprNode::IsBot>) {
                out += "isBot(";
                print_expr(n.child, out, 0);
                out.push_back(')');
            } else if constexpr (std::is_same_v<N, ExprNode::Rot>) {
                out += "rot(";
                print_expr(n.child, out, 0);
                out.push_back(')');
            }
        },
        e->node);
    if (parens) out.push_back(')');
}

}  // namespace detail

inline std::string print_expression(const Expr& e) {
    std::string out;
    detail::print_expr(e, out, 0);
    return out;
}

// Structural equality via the canonical printed form.
inline bool expr_equal(const Expr& a, const Expr& b) {
    return print_expression(a) == print_expression(b);
}

// ---------------------------------------------------------------------------
// Evaluator

namespace detail {

inline const char* value_kind(const Value& v) {
    if (std::holds_alternative<Rat>(v)) return "number";
    if (std::holds_alternative<std::string>(v)) return "string";
    if (std::holds_alternative<bool>(v)) return "boolean";
    return "BOT";
}

}  // namespace detail

inline Value eval_expr(const Expr& e, const Env& env) {
    auto num = [](const Value& v, const char* ctx) -> const Rat& {
        if (const auto* r = std::get_if<Rat>(&v)) return *r;
        throw EvalError(std::string(ctx) + " applied to " + detail::value_kind(v));
    };
    return std::visit(
        [&](const auto& n) -> Value {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ExprNode::Lit>) {
                return n.value;
            } else if constexpr (std::is_same_v<N, ExprNode::Str>) {
                return n.value;
            } else if constexpr (std::is_same_v<N, ExprNode::Var>) {
                auto it = env.vars.find(n.name);
                if (it == env.vars.end())
                    throw EvalError("variable '" + n.name + "' not bound in this context");
                return it->second;
            } else if constexpr (std::is_same_v<N, ExprNode::Neg>) {
                return Rat(-num(eval_expr(n.child, env), "negation"));
            } else if constexpr (std::is_same_v<N, ExprNode::Bin>) {
                Value a = eval_expr(n.lhs, env);
                Value b = eval_expr(n.rhs, env);
                switch (n.op) {
                    case BinOp::Add: return Rat(num(a, "+") + num(b, "+"));
                    case BinOp::Sub: return Rat(num(a, "-") - num(b, "-"));
                    case BinOp::Mul: return Rat(num(a, "*") * num(b, "*"));
                    case BinOp::Lt: return num(a, "<") < num(b, "<");
                    case BinOp::Le: return num(a, "<=") <= num(b, "<=");
                    case BinOp::Gt: return num(a, ">") > num(b, ">");
                    case BinOp::Ge: return num(a, ">=") >= num(b, ">=");
                    case BinOp::Eq:
                    case BinOp::Ne: {
                        bool eq;
                        // BOT compares unequal to every string.
                        if (std::holds_alternative<BotVal>(a) || std::holds_alternative<BotVal>(b))
                            eq = std::holds_alternative<BotVal>(a) &&
                                 std::holds_alternative<BotVal>(b);
                        else if (a.index() != b.index())
                            throw EvalError(std::string("'==' between ") + detail::value_kind(a) +
                                            " and " + detail::value_kind(b));
                        else
                            eq = (a == b);
                        return n.op == BinOp::Eq ? eq : !eq;
                    }
                }
                throw EvalError("unreachable operator");
            } else if constexpr (std::is_same_v<N, ExprNode::If>) {
                Value c = eval_expr(n.cond, env);
                if (const auto* b = std::get_if<bool>(&c))
                    return eval_expr(*b ? n.then_branch : n.else_branch, env);
                throw EvalError(std::string("if-condition is ") + detail::value_kind(c) +
                                ", expected boolean");
            } else if constexpr (std::is_same_v<N, ExprNode::IsBot>) {
                Value v = eval_expr(n.child, env);
                if (std::holds_alternative<BotVal>(v)) return true;
                if (std::holds_alternative<std::string>(v)) return false;
                throw EvalError(std::string("isBot applied to ") + detail::value_kind(v));
            } else if constexpr (std::is_same_v<N, ExprNode::Rot>) {
                Value v = eval_expr(n.child, env);
                const auto* s = std::get_if<std::string>(&v);
                if (!s) throw EvalError(std::string("rot applied to ") + detail::value_kind(v));
                if (*s == "0") return std::string("1");
                if (*s == "1") return std::string("2");
                if (*s == "2") return std::string("0");
                throw EvalError("rot applied to '" + *s + "', expected \"0\", \"1\" or \"2\"");
            }
        },
        e->node);
}

inline Rat eval_expr_rat(const Expr& e, const Env& env) {
    Value v = eval_expr(e, env);
    if (const auto* r = std::get_if<Rat>(&v)) return *r;
    throw EvalError(std::string("expression evaluated to ") + detail::value_kind(v) +
                    ", expected number");
}

}  // namespace bmg
