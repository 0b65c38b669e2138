#include "gencalc/expression_parser.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "gencalc/error.hpp"

namespace gencalc {
namespace {

class Parser {
public:
    Parser(const std::string& s, const std::map<std::string, int>& vars) : s_(s), vars_(vars) {}

    NetExpr parse() {
        NetExpr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ArgumentError("expression '" + s_ + "': " + what + " at offset " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    NetExpr expr() {
        NetExpr e = term();
        for (;;) {
            if (accept('+')) e = e + term();
            else if (accept('-')) e = e - term();
            else return e;
        }
    }

    NetExpr term() {
        NetExpr e = unary();
        for (;;) {
            if (accept('*')) e = e * unary();
            else if (accept('/')) e = e / unary();
            else return e;
        }
    }

    NetExpr unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    NetExpr power() {
        NetExpr base = atom();
        if (!accept('^')) return base;
        skip();
        bool neg = accept('-');
        skip();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) fail("exponent must be an integer");
        const int n = std::atoi(s_.substr(start, pos_ - start).c_str());
        return pow(base, neg ? -n : n);
    }

    NetExpr atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (accept('(')) {
            NetExpr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            return NetExpr::constant(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            skip();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                ++pos_;
                NetExpr arg = expr();
                expect(')');
                if (name == "sin") return sin(arg);
                if (name == "cos") return cos(arg);
                if (name == "exp") return exp(arg);
                if (name == "log") return log(arg);
                if (name == "abs") return abs(arg);
                pos_ = start;
                fail("unknown function '" + name + "'");
            }
            if (auto it = vars_.find(name); it != vars_.end()) return NetExpr::coordinate(it->second);
            if (name == "eps") return NetExpr::epsilon();
            if (name == "pi") return NetExpr::constant(std::numbers::pi);
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    const std::map<std::string, int>& vars_;
    std::size_t pos_ = 0;
};

}  // namespace

NetExpr parse_expression(const std::string& text, const std::map<std::string, int>& variables) {
    return Parser(text, variables).parse();
}

NetExpr parse_expression(const std::string& text) { return parse_expression(text, {{"x", 0}, {"y", 1}}); }

}  // namespace gencalc
