#include "stopbound/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <vector>

namespace stopbound {

namespace {

using Node = std::function<double(double)>;

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Node parse() {
        Node root = expression();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return root;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ExpressionError("expression error at offset " + std::to_string(pos_) + ": " + what +
                              " in \"" + std::string(text_) + "\"");
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    Node expression() {
        Node lhs = term();
        for (;;) {
            if (accept('+')) {
                Node rhs = term();
                lhs = [lhs, rhs](double y) { return lhs(y) + rhs(y); };
            } else if (accept('-')) {
                Node rhs = term();
                lhs = [lhs, rhs](double y) { return lhs(y) - rhs(y); };
            } else {
                return lhs;
            }
        }
    }

    Node term() {
        Node lhs = unary();
        for (;;) {
            if (accept('*')) {
                Node rhs = unary();
                lhs = [lhs, rhs](double y) { return lhs(y) * rhs(y); };
            } else if (accept('/')) {
                Node rhs = unary();
                lhs = [lhs, rhs](double y) { return lhs(y) / rhs(y); };
            } else {
                return lhs;
            }
        }
    }

    Node unary() {
        if (accept('-')) {
            Node inner = unary();
            return [inner](double y) { return -inner(y); };
        }
        if (accept('+')) return unary();
        return power();
    }

    Node power() {
        Node base = primary();
        if (accept('^')) {
            Node exponent = unary();
            return [base, exponent](double y) { return std::pow(base(y), exponent(y)); };
        }
        return base;
    }

    std::vector<Node> arguments() {
        std::vector<Node> args;
        expect('(');
        args.push_back(expression());
        while (accept(',')) args.push_back(expression());
        expect(')');
        return args;
    }

    Node primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Node inner = expression();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        fail(std::string("unexpected '") + c + "'");
    }

    Node number() {
        double value = 0.0;
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc()) fail("malformed number");
        pos_ += static_cast<std::size_t>(ptr - begin);
        return [value](double) { return value; };
    }

    Node identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        if (name == "y") return [](double y) { return y; };
        if (name == "pi") return [](double) { return M_PI; };

        const auto args = arguments();
        const auto want = [&](std::size_t n) {
            if (args.size() != n)
                fail(name + " takes " + std::to_string(n) + " argument(s), got " + std::to_string(args.size()));
        };
        if (name == "exp") {
            want(1);
            return [a = args[0]](double y) { return std::exp(a(y)); };
        }
        if (name == "log") {
            want(1);
            return [a = args[0]](double y) { return std::log(a(y)); };
        }
        if (name == "sqrt") {
            want(1);
            return [a = args[0]](double y) { return std::sqrt(a(y)); };
        }
        if (name == "abs") {
            want(1);
            return [a = args[0]](double y) { return std::abs(a(y)); };
        }
        if (name == "pow") {
            want(2);
            return [a = args[0], b = args[1]](double y) { return std::pow(a(y), b(y)); };
        }
        if (name == "max") {
            want(2);
            return [a = args[0], b = args[1]](double y) { return std::max(a(y), b(y)); };
        }
        if (name == "min") {
            want(2);
            return [a = args[0], b = args[1]](double y) { return std::min(a(y), b(y)); };
        }
        fail("unknown function '" + name + "'");
    }
};

}  // namespace

std::function<double(double)> compile_expression(std::string_view text) {
    return Parser(text).parse();
}

}  // namespace stopbound
