#include "lmx/formula.hpp"

#include <algorithm>
#include <cctype>

#include "lmx/errors.hpp"

namespace lmx {

namespace {

struct Lexer {
    const std::string& text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!accept(c)) throw ParseError(std::string("expected ") + what, pos);
    }

    bool at_ident() {
        const char c = peek();
        return std::isalpha(static_cast<unsigned char>(c)) || c == '.';
    }

    std::string ident() {
        skip_ws();
        if (!at_ident()) throw ParseError("expected identifier", pos);
        const std::size_t start = pos;
        while (pos < text.size()) {
            const char c = text[pos];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_')
                ++pos;
            else
                break;
        }
        return text.substr(start, pos - start);
    }
};

Term make_term(std::vector<std::string> vars) {
    std::sort(vars.begin(), vars.end());
    return Term{std::move(vars)};
}

void add_term(std::vector<Term>& terms, Term t) {
    if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(std::move(t));
}

}  // namespace

FormulaAst parse_formula(const std::string& text) {
    Lexer lx{text};
    FormulaAst ast;
    ast.response = lx.ident();
    lx.expect('~', "'~'");

    ast.fixed_terms.push_back(Term{});  // implicit intercept
    bool first = true;
    while (true) {
        if (!first) lx.expect('+', "'+'");
        first = false;
        lx.skip_ws();
        if (lx.accept('-') || lx.accept('0'))
            throw ParseError("intercept suppression is unsupported", lx.pos - 1);
        if (lx.accept('1')) {
            // intercept is already implicit
        } else if (lx.accept('(')) {
            RandomSpec spec;
            spec.slope_terms.push_back(Term{});
            bool sfirst = true;
            while (true) {
                if (!sfirst) lx.expect('+', "'+' or '|'");
                sfirst = false;
                lx.skip_ws();
                if (lx.accept('1')) {
                    // implicit
                } else if (lx.at_ident()) {
                    add_term(spec.slope_terms, make_term({lx.ident()}));
                } else {
                    throw ParseError("expected slope term", lx.pos);
                }
                if (lx.peek() == '|') break;
                if (lx.peek() != '+') throw ParseError("expected '+' or '|'", lx.pos);
            }
            lx.expect('|', "'|'");
            if (lx.accept('|')) throw ParseError("'||' syntax is unsupported", lx.pos - 1);
            spec.grouping = lx.ident();
            if (lx.peek() == '/' || lx.peek() == ':')
                throw ParseError("nested grouping syntax is unsupported", lx.pos);
            lx.expect(')', "')'");
            for (const auto& t : spec.slope_terms)
                if (!t.is_intercept() && t.variables[0] == spec.grouping)
                    throw ParseError("grouping variable repeated as slope", lx.pos);
            ast.random_specs.push_back(std::move(spec));
        } else if (lx.at_ident()) {
            const std::string a = lx.ident();
            if (lx.accept(':')) {
                const std::string b = lx.ident();
                if (a == b) throw ParseError("interaction of a variable with itself", lx.pos);
                add_term(ast.fixed_terms, make_term({a, b}));
            } else if (lx.accept('*')) {
                const std::string b = lx.ident();
                if (a == b) throw ParseError("interaction of a variable with itself", lx.pos);
                add_term(ast.fixed_terms, make_term({a}));
                add_term(ast.fixed_terms, make_term({b}));
                add_term(ast.fixed_terms, make_term({a, b}));
            } else {
                add_term(ast.fixed_terms, make_term({a}));
            }
        } else {
            throw ParseError("expected term", lx.pos);
        }
        if (lx.peek() == '\0') break;
        if (lx.peek() != '+') throw ParseError("expected '+' or end of formula", lx.pos);
    }

    // keep user order of main effects, put each interaction after its constituents
    std::stable_sort(ast.fixed_terms.begin(), ast.fixed_terms.end(),
                     [](const Term& a, const Term& b) {
                         return a.variables.size() < b.variables.size();
                     });
    return ast;
}

namespace {

std::string term_text(const Term& t) {
    std::string out;
    for (std::size_t i = 0; i < t.variables.size(); ++i) {
        if (i) out += ':';
        out += t.variables[i];
    }
    return out;
}

}  // namespace

std::string format_formula(const FormulaAst& ast) {
    std::string out = ast.response + " ~ ";
    std::vector<std::string> parts;
    for (const auto& t : ast.fixed_terms)
        if (!t.is_intercept()) parts.push_back(term_text(t));
    for (const auto& spec : ast.random_specs) {
        std::string rs = "(1";
        for (const auto& t : spec.slope_terms)
            if (!t.is_intercept()) rs += "+" + term_text(t);
        rs += "|" + spec.grouping + ")";
        parts.push_back(std::move(rs));
    }
    if (parts.empty()) return out + "1";
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += " + ";
        out += parts[i];
    }
    return out;
}

}  // namespace lmx
