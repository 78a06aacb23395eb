#include "pcfuzz/grammar.hpp"

#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "pcfuzz/error.hpp"

namespace pcfuzz {

const Rule* Grammar::find_rule(std::string_view name) const {
  for (const auto& r : rules) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const TokenDecl* Grammar::find_token(std::string_view name) const {
  for (const auto& t : tokens) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

namespace {

bool item_has_ebnf(const Item& item) {
  if (item.repeat != Repeat::kNone || item.kind == Item::Kind::kGroup) {
    return true;
  }
  return false;
}

bool item_has_literal(const Item& item) {
  if (item.kind == Item::Kind::kLiteral) return true;
  for (const auto& alt : item.alternatives) {
    for (const auto& sub : alt) {
      if (item_has_literal(sub)) return true;
    }
  }
  return false;
}

}  // namespace

bool Grammar::has_ebnf() const {
  for (const auto& r : rules) {
    for (const auto& alt : r.alternatives) {
      for (const auto& item : alt) {
        if (item_has_ebnf(item)) return true;
      }
    }
  }
  return false;
}

bool Grammar::has_literals() const {
  for (const auto& r : rules) {
    for (const auto& alt : r.alternatives) {
      for (const auto& item : alt) {
        if (item_has_literal(item)) return true;
      }
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { kIdent, kLiteral, kColon, kBar, kSemi, kLParen, kRParen,
                 kStar, kPlus, kQuestion, kEnd };

struct Lexeme {
  Tok kind;
  std::string text;
  SourceLoc loc;
};

std::string where(SourceLoc loc) {
  return std::to_string(loc.line) + ":" + std::to_string(loc.column);
}

[[noreturn]] void syntax_error(SourceLoc loc, const std::string& msg) {
  throw InputError("grammar syntax error at " + where(loc) + ": " + msg);
}

class GrammarLexer {
 public:
  explicit GrammarLexer(std::string_view text) : text_(text) {}

  std::vector<Lexeme> run() {
    std::vector<Lexeme> out;
    while (true) {
      skip_space_and_comments();
      SourceLoc loc{line_, col_};
      if (pos_ >= text_.size()) {
        out.push_back({Tok::kEnd, "", loc});
        return out;
      }
      char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string ident;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_')) {
          ident += text_[pos_];
          advance();
        }
        out.push_back({Tok::kIdent, ident, loc});
        continue;
      }
      if (c == '\'' || c == '"') {
        out.push_back({Tok::kLiteral, read_literal(c, loc), loc});
        continue;
      }
      Tok kind;
      switch (c) {
        case ':': kind = Tok::kColon; break;
        case '|': kind = Tok::kBar; break;
        case ';': kind = Tok::kSemi; break;
        case '(': kind = Tok::kLParen; break;
        case ')': kind = Tok::kRParen; break;
        case '*': kind = Tok::kStar; break;
        case '+': kind = Tok::kPlus; break;
        case '?': kind = Tok::kQuestion; break;
        case '{':
          syntax_error(loc, "actions are not supported");
        case '[':
          syntax_error(loc, "character sets are not supported; declare the "
                            "token in a tokenizer spec instead");
        default:
          syntax_error(loc, std::string("unexpected character '") + c + "'");
      }
      advance();
      out.push_back({kind, std::string(1, c), loc});
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (text_.substr(pos_, 2) == "//") {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (text_.substr(pos_, 2) == "/*") {
        SourceLoc loc{line_, col_};
        advance();
        advance();
        while (pos_ < text_.size() && text_.substr(pos_, 2) != "*/") advance();
        if (pos_ >= text_.size()) syntax_error(loc, "unterminated comment");
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  std::string read_literal(char quote, SourceLoc loc) {
    advance();
    std::string value;
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n') {
        syntax_error(loc, "unterminated literal");
      }
      char c = text_[pos_];
      if (c == quote) {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= text_.size()) syntax_error(loc, "unterminated literal");
        char e = text_[pos_];
        switch (e) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case 'r': value += '\r'; break;
          default: value += e; break;
        }
        advance();
        continue;
      }
      value += c;
      advance();
    }
    if (value.empty()) syntax_error(loc, "empty literal");
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_token_name(std::string_view name) {
  return !name.empty() && std::isupper(static_cast<unsigned char>(name[0]));
}

class GrammarParser {
 public:
  explicit GrammarParser(std::vector<Lexeme> lexemes)
      : lex_(std::move(lexemes)) {}

  Grammar run() {
    Grammar g;
    std::map<std::string, SourceLoc> defined;
    skip_header();
    while (peek().kind != Tok::kEnd) {
      const Lexeme& name = expect(Tok::kIdent, "rule name");
      if (name.text == "fragment" || name.text == "lexer" ||
          name.text == "parser" || name.text == "options" ||
          name.text == "import" || name.text == "channels" ||
          name.text == "mode") {
        syntax_error(name.loc, "unsupported construct '" + name.text + "'");
      }
      if (auto it = defined.find(name.text); it != defined.end()) {
        throw InputError("duplicate definition of '" + name.text + "' at " +
                         where(name.loc) + " (first defined at " +
                         where(it->second) + ")");
      }
      defined.emplace(name.text, name.loc);
      expect(Tok::kColon, "':'");
      auto alts = parse_alternatives();
      expect(Tok::kSemi, "';'");
      if (is_token_name(name.text)) {
        g.tokens.push_back(lexer_rule(name, alts));
      } else {
        g.rules.push_back(Rule{name.text, std::move(alts), name.loc});
      }
    }
    if (g.rules.empty()) {
      syntax_error(peek().loc, "no entry rule (grammar has no parser rules)");
    }
    g.entry = g.rules.front().name;
    check_references(g);
    return g;
  }

 private:
  const Lexeme& peek() const { return lex_[pos_]; }

  const Lexeme& expect(Tok kind, const char* what) {
    const Lexeme& l = lex_[pos_];
    if (l.kind != kind) {
      syntax_error(l.loc, std::string("expected ") + what + ", found " +
                              (l.kind == Tok::kEnd ? "end of input"
                                                   : "'" + l.text + "'"));
    }
    ++pos_;
    return l;
  }

  // Optional ANTLR header `grammar Name ;`.
  void skip_header() {
    if (peek().kind == Tok::kIdent && peek().text == "grammar" &&
        lex_[pos_ + 1].kind == Tok::kIdent &&
        lex_[pos_ + 2].kind == Tok::kSemi) {
      pos_ += 3;
    }
  }

  std::vector<Alternative> parse_alternatives() {
    std::vector<Alternative> alts;
    alts.push_back(parse_sequence());
    while (peek().kind == Tok::kBar) {
      ++pos_;
      alts.push_back(parse_sequence());
    }
    return alts;
  }

  Alternative parse_sequence() {
    Alternative seq;
    while (true) {
      const Lexeme& l = peek();
      Item item;
      item.loc = l.loc;
      if (l.kind == Tok::kIdent && l.text == Vocabulary::kEndMarkerName) {
        // Explicit end-of-input references are implied by sequence length.
        ++pos_;
        continue;
      }
      if (l.kind == Tok::kIdent) {
        item.kind = is_token_name(l.text) ? Item::Kind::kToken
                                          : Item::Kind::kNonterminal;
        item.text = l.text;
        ++pos_;
      } else if (l.kind == Tok::kLiteral) {
        item.kind = Item::Kind::kLiteral;
        item.text = l.text;
        ++pos_;
      } else if (l.kind == Tok::kLParen) {
        ++pos_;
        item.kind = Item::Kind::kGroup;
        item.alternatives = parse_alternatives();
        expect(Tok::kRParen, "')'");
      } else {
        return seq;
      }
      switch (peek().kind) {
        case Tok::kStar: item.repeat = Repeat::kStar; ++pos_; break;
        case Tok::kPlus: item.repeat = Repeat::kPlus; ++pos_; break;
        case Tok::kQuestion: item.repeat = Repeat::kOptional; ++pos_; break;
        default: break;
      }
      seq.push_back(std::move(item));
    }
  }

  TokenDecl lexer_rule(const Lexeme& name,
                       const std::vector<Alternative>& alts) {
    if (alts.size() != 1 || alts[0].size() != 1 ||
        alts[0][0].kind != Item::Kind::kLiteral ||
        alts[0][0].repeat != Repeat::kNone) {
      syntax_error(name.loc, "token rule '" + name.text +
                                 "' must be a single quoted literal; declare "
                                 "other tokens in a tokenizer spec");
    }
    return TokenDecl{name.text, alts[0][0].text, name.loc};
  }

  void check_item(const Grammar& g, const Item& item) {
    if (item.kind == Item::Kind::kNonterminal && !g.find_rule(item.text)) {
      throw InputError("undefined nonterminal '" + item.text + "' at " +
                       where(item.loc));
    }
    for (const auto& alt : item.alternatives) {
      for (const auto& sub : alt) check_item(g, sub);
    }
  }

  void check_references(const Grammar& g) {
    for (const auto& r : g.rules) {
      for (const auto& alt : r.alternatives) {
        for (const auto& item : alt) check_item(g, item);
      }
    }
  }

  std::vector<Lexeme> lex_;
  std::size_t pos_ = 0;
};

}  // namespace

Grammar parse_grammar(std::string_view text) {
  return GrammarParser(GrammarLexer(text).run()).run();
}

// ---------------------------------------------------------------------------
// Formatting

namespace {

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    switch (c) {
      case '\'': out += "\\'"; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "'";
}

void format_alternatives(std::ostringstream& out,
                         const std::vector<Alternative>& alts);

void format_item(std::ostringstream& out, const Item& item) {
  switch (item.kind) {
    case Item::Kind::kNonterminal:
    case Item::Kind::kToken:
      out << item.text;
      break;
    case Item::Kind::kLiteral:
      out << quote(item.text);
      break;
    case Item::Kind::kGroup:
      out << "( ";
      format_alternatives(out, item.alternatives);
      out << " )";
      break;
  }
  switch (item.repeat) {
    case Repeat::kStar: out << '*'; break;
    case Repeat::kPlus: out << '+'; break;
    case Repeat::kOptional: out << '?'; break;
    case Repeat::kNone: break;
  }
}

void format_alternatives(std::ostringstream& out,
                         const std::vector<Alternative>& alts) {
  for (std::size_t a = 0; a < alts.size(); ++a) {
    if (a) out << " |";
    for (std::size_t i = 0; i < alts[a].size(); ++i) {
      if (a || i) out << ' ';
      format_item(out, alts[a][i]);
    }
  }
}

}  // namespace

std::string format_grammar(const Grammar& g) {
  std::ostringstream out;
  for (const auto& r : g.rules) {
    out << r.name << " : ";
    format_alternatives(out, r.alternatives);
    out << " ;\n";
  }
  for (const auto& t : g.tokens) {
    if (t.literal) out << t.name << " : " << quote(*t.literal) << " ;\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Literal replacement

namespace {

const std::unordered_map<char, std::string>& punctuation_names() {
  static const std::unordered_map<char, std::string> names = {
      {',', "COMMA"},  {';', "SEMI"},   {':', "COLON"},  {'{', "LBRACE"},
      {'}', "RBRACE"}, {'[', "LBRACK"}, {']', "RBRACK"}, {'(', "LPAREN"},
      {')', "RPAREN"}, {'+', "PLUS"},   {'-', "MINUS"},  {'*', "STAR"},
      {'/', "SLASH"},  {'=', "EQ"},     {'<', "LT"},     {'>', "GT"},
      {'.', "DOT"},    {'!', "BANG"},   {'?', "QUESTION"}, {'&', "AMP"},
      {'|', "BAR"},    {'%', "PERCENT"}, {'@', "AT"},    {'#', "HASH"},
      {'$', "DOLLAR"}, {'^', "CARET"},  {'~', "TILDE"},  {'"', "DQUOTE"},
      {'\'', "QUOTE"}, {'\\', "BACKSLASH"}, {'_', "UNDERSCORE"},
  };
  return names;
}

std::string literal_token_name(const std::string& literal) {
  bool identifier = std::isalpha(static_cast<unsigned char>(literal[0])) ||
                    literal[0] == '_';
  for (char c : literal) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') {
      identifier = false;
    }
  }
  if (identifier) {
    std::string name;
    for (char c : literal) {
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    if (name[0] == '_') name = "T" + name;
    return name;
  }
  std::string name;
  for (char c : literal) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (!name.empty() && name.back() != '_' &&
          !std::isalnum(static_cast<unsigned char>(name.back()))) {
        name += '_';
      }
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      continue;
    }
    auto it = punctuation_names().find(c);
    if (it == punctuation_names().end()) return {};
    if (!name.empty()) name += '_';
    name += it->second;
  }
  return name;
}

class LiteralReplacer {
 public:
  explicit LiteralReplacer(const Grammar& g) : out_(g) {
    out_.tokens.clear();
    for (const auto& t : g.tokens) declare(t);
  }

  std::pair<Grammar, Vocabulary> run() {
    for (auto& r : out_.rules) {
      for (auto& alt : r.alternatives) {
        for (auto& item : alt) visit(item);
      }
    }
    Vocabulary vocab;
    for (const auto& t : out_.tokens) vocab.add(t.name);
    return {std::move(out_), std::move(vocab)};
  }

 private:
  void declare(const TokenDecl& t) {
    if (used_names_.count(t.name)) return;
    used_names_.insert(t.name);
    if (t.literal && !by_literal_.count(*t.literal)) {
      by_literal_.emplace(*t.literal, t.name);
    }
    out_.tokens.push_back(t);
  }

  void visit(Item& item) {
    if (item.kind == Item::Kind::kToken) {
      declare(TokenDecl{item.text, std::nullopt, item.loc});
    } else if (item.kind == Item::Kind::kLiteral) {
      item.kind = Item::Kind::kToken;
      item.text = token_for(item.text, item.loc);
    }
    for (auto& alt : item.alternatives) {
      for (auto& sub : alt) visit(sub);
    }
  }

  std::string token_for(const std::string& literal, SourceLoc loc) {
    if (auto it = by_literal_.find(literal); it != by_literal_.end()) {
      return it->second;
    }
    std::string base = literal_token_name(literal);
    if (base.empty()) base = "T__" + std::to_string(fallback_counter_++);
    std::string name = base;
    for (int k = 2; used_names_.count(name) || reserved(name); ++k) {
      name = base + "_" + std::to_string(k);
    }
    declare(TokenDecl{name, literal, loc});
    return name;
  }

  bool reserved(const std::string& name) const {
    return name == Vocabulary::kEndMarkerName;
  }

  Grammar out_;
  std::set<std::string> used_names_;
  std::map<std::string, std::string> by_literal_;
  int fallback_counter_ = 0;
};

}  // namespace

std::pair<Grammar, Vocabulary> replace_literals(const Grammar& g) {
  return LiteralReplacer(g).run();
}

Vocabulary grammar_vocabulary(const Grammar& g) {
  if (g.has_literals()) {
    throw UsageError("grammar still contains inline literals");
  }
  return replace_literals(g).second;
}

}  // namespace pcfuzz
