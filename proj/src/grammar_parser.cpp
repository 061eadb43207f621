#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "psdg/error.hpp"
#include "psdg/grammar_io.hpp"

namespace psdg {

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
};

bool is_keyword(const std::string& s) {
  return s == "feature" || s == "start" || s == "prod" || s == "terminals" || s == "values" ||
         s == "prior" || s == "parents" || s == "cpt" || s == "rule" || s == "in" || s == "default";
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Ident;
        while (pos_ < text_.size()) {
          const char d = text_[pos_];
          const bool arrow = d == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>';
          if (arrow) break;
          if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '-' || d == '.') {
            t.text.push_back(d);
            advance();
          } else {
            break;
          }
        }
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
                 (c == '-' && pos_ + 1 < text_.size() &&
                  (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) || text_[pos_ + 1] == '.'))) {
        t.kind = Tok::Number;
        t.text.push_back(c);
        advance();
        while (pos_ < text_.size()) {
          const char d = text_[pos_];
          const bool exponent_sign =
              (d == '-' || d == '+') && (t.text.back() == 'e' || t.text.back() == 'E');
          if (std::isdigit(static_cast<unsigned char>(d)) || d == '.' || d == 'e' || d == 'E' ||
              exponent_sign) {
            t.text.push_back(d);
            advance();
          } else {
            break;
          }
        }
      } else if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
        t.kind = Tok::Punct;
        t.text = "->";
        advance();
        advance();
      } else if (std::string_view("{}:;,|&*").find(c) != std::string_view::npos) {
        t.kind = Tok::Punct;
        t.text = std::string(1, c);
        advance();
      } else {
        throw ParseError(line_, column_, std::string("unexpected character '") + c + "'");
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  GrammarDefinition run() {
    GrammarDefinition def;
    bool saw_start = false;
    if (peek().kind == Tok::End) fail(peek(), "empty grammar: expected 'feature', 'start' or 'prod'");
    while (peek().kind != Tok::End) {
      const Token& t = peek();
      if (is_ident(t, "feature")) {
        def.features.push_back(parse_feature());
      } else if (is_ident(t, "start")) {
        if (saw_start) fail(t, "duplicate start declaration");
        next();
        const Token& name = expect_name("start symbol");
        def.start = name.text;
        def.start_where = {name.line, name.column};
        saw_start = true;
      } else if (is_ident(t, "terminals")) {
        next();
        def.terminals_where = {t.line, t.column};
        std::vector<std::string> names;
        names.push_back(expect_name("terminal").text);
        while (accept(",")) names.push_back(expect_name("terminal").text);
        if (def.declared_terminals) fail(t, "duplicate terminals declaration");
        def.declared_terminals = std::move(names);
      } else if (is_ident(t, "prod")) {
        def.productions.push_back(parse_production());
      } else {
        fail(t, "expected 'feature', 'start', 'terminals' or 'prod', found '" + t.text + "'");
      }
    }
    if (!saw_start) fail(peek(), "missing start declaration");
    return def;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }
  static bool is_ident(const Token& t, std::string_view word) {
    return t.kind == Tok::Ident && t.text == word;
  }
  static bool is_punct(const Token& t, std::string_view p) {
    return t.kind == Tok::Punct && t.text == p;
  }
  bool accept(std::string_view p) {
    if (is_punct(peek(), p)) {
      next();
      return true;
    }
    return false;
  }
  [[noreturn]] static void fail(const Token& t, const std::string& message) {
    throw ParseError(t.line, t.column, message);
  }
  void expect(std::string_view p) {
    if (!accept(p)) {
      fail(peek(), "expected '" + std::string(p) + "', found '" + describe(peek()) + "'");
    }
  }
  static std::string describe(const Token& t) { return t.kind == Tok::End ? "end of file" : t.text; }

  const Token& expect_name(const char* what) {
    const Token& t = peek();
    if (t.kind != Tok::Ident || is_keyword(t.text)) {
      fail(t, std::string("expected ") + what + ", found '" + describe(t) + "'");
    }
    return next();
  }

  double expect_number() {
    const Token& t = peek();
    if (t.kind != Tok::Number) fail(t, "expected a number, found '" + describe(t) + "'");
    char* end = nullptr;
    const double v = std::strtod(t.text.c_str(), &end);
    if (end != t.text.c_str() + t.text.size()) fail(t, "malformed number '" + t.text + "'");
    next();
    return v;
  }

  std::vector<double> number_list() {
    std::vector<double> out{expect_number()};
    while (accept(",")) out.push_back(expect_number());
    return out;
  }

  RawFeature parse_feature() {
    const Token& kw = next();
    RawFeature f;
    f.where = {kw.line, kw.column};
    f.name = expect_name("feature name").text;
    expect("{");
    while (!accept("}")) {
      const Token& field = peek();
      if (is_ident(field, "values")) {
        next();
        expect(":");
        f.values.push_back(expect_name("value label").text);
        while (accept(",")) f.values.push_back(expect_name("value label").text);
      } else if (is_ident(field, "prior")) {
        next();
        expect(":");
        f.prior = number_list();
      } else if (is_ident(field, "parents")) {
        next();
        expect(":");
        if (peek().kind == Tok::Ident && !is_keyword(peek().text)) {
          f.parents.push_back(expect_name("parent feature").text);
          while (accept(",")) f.parents.push_back(expect_name("parent feature").text);
        }
      } else if (is_ident(field, "cpt")) {
        next();
        expect(":");
        f.cpt.push_back(parse_cpt_row());
        // Further rows follow `;` until the next field keyword or `}`.
        while (is_punct(peek(), ";") && !is_punct(peek(1), "}") && !is_field_keyword(peek(1))) {
          next();
          f.cpt.push_back(parse_cpt_row());
        }
      } else {
        fail(field, "expected 'values', 'prior', 'parents' or 'cpt', found '" + describe(field) + "'");
      }
      if (!accept(";") && !is_punct(peek(), "}")) {
        fail(peek(), "expected ';' or '}', found '" + describe(peek()) + "'");
      }
    }
    return f;
  }

  static bool is_field_keyword(const Token& t) {
    return is_ident(t, "values") || is_ident(t, "prior") || is_ident(t, "parents") ||
           is_ident(t, "cpt");
  }

  std::string cpt_atom() {
    const Token& t = peek();
    if (is_punct(t, "*")) {
      next();
      return "*";
    }
    if (t.kind == Tok::Ident && !is_keyword(t.text)) return next().text;
    fail(t, "expected a value, terminal or '*', found '" + describe(t) + "'");
  }

  RawCptRow parse_cpt_row() {
    RawCptRow row;
    row.where = {peek().line, peek().column};
    std::vector<std::string> atoms{cpt_atom()};
    while (accept(",")) atoms.push_back(cpt_atom());
    if (accept("|")) {
      row.parent_values = std::move(atoms);
      row.terminal = cpt_atom();
    } else {
      if (atoms.size() != 1) fail(peek(), "expected '|' after parent values");
      row.terminal = atoms.front();
    }
    expect("->");
    row.distribution = number_list();
    return row;
  }

  RawProduction parse_production() {
    const Token& kw = next();
    RawProduction p;
    p.where = {kw.line, kw.column};
    const Token& index = peek();
    if (index.kind != Tok::Number) fail(index, "expected production index after 'prod'");
    long label = 0;
    auto [ptr, ec] = std::from_chars(index.text.data(), index.text.data() + index.text.size(), label);
    if (ec != std::errc() || ptr != index.text.data() + index.text.size() || label < 0) {
      fail(index, "production index must be a non-negative integer");
    }
    p.label = label;
    next();
    expect(":");
    p.lhs = expect_name("left-hand side").text;
    expect("->");
    while (peek().kind == Tok::Ident && !is_keyword(peek().text)) {
      const Token& s = next();
      p.rhs.push_back(s.text);
      p.rhs_where.push_back({s.line, s.column});
    }
    if (accept("{")) {
      p.probability.present = true;
      while (!accept("}")) {
        const Token& t = peek();
        if (is_ident(t, "rule")) {
          next();
          RawRule rule;
          rule.where = {t.line, t.column};
          rule.guard.push_back(parse_guard_term());
          while (accept("&")) rule.guard.push_back(parse_guard_term());
          expect(":");
          rule.value = expect_number();
          p.probability.rules.push_back(std::move(rule));
        } else if (is_ident(t, "default")) {
          next();
          expect(":");
          if (p.probability.default_value) fail(t, "duplicate default");
          p.probability.default_value = expect_number();
        } else {
          fail(t, "expected 'rule' or 'default', found '" + describe(t) + "'");
        }
        if (!accept(";") && !is_punct(peek(), "}")) {
          fail(peek(), "expected ';' or '}', found '" + describe(peek()) + "'");
        }
      }
    }
    return p;
  }

  RawGuardTerm parse_guard_term() {
    RawGuardTerm term;
    const Token& name = expect_name("feature in guard");
    term.feature = name.text;
    term.where = {name.line, name.column};
    if (!is_ident(peek(), "in")) fail(peek(), "expected 'in' after guard feature");
    next();
    expect("{");
    term.values.push_back(expect_name("value label").text);
    while (accept(",")) term.values.push_back(expect_name("value label").text);
    expect("}");
    return term;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

GrammarDefinition parse_grammar(std::string_view text) {
  return Parser(Lexer(text).run()).run();
}

Psdg load_grammar(std::string_view text, const ValidateOptions& options) {
  return validate(parse_grammar(text), options);
}

Psdg load_grammar_file(const std::filesystem::path& path, const ValidateOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open grammar file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_grammar(buffer.str(), options);
}

}  // namespace psdg
