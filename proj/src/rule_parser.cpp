#include <cctype>
#include <optional>

#include "sdsn/core/error.hpp"
#include "sdsn/regulation/catalog.hpp"
#include "sdsn/regulation/rule.hpp"

// Parser for the rule grammar:
//
//   rule <id> priority <int>
//   when <condition-expr>
//   then <Fn>(<k>=<v>, ...) [; <Fn>(...)]*
//   end
//
// Conditions:  msg.<field> <op> <literal> | event(<name>) | allOf(e1,e2,...)
//              | state(<key>) <op> <literal> | flow.<attr> <op> <literal>
//              | time.<attr> <op> <literal> | true | false
// combined with and / or / not and parentheses.
// Ops: == != < <= > >=.  '#' starts a comment running to end of line.

namespace sdsn::regulation {

namespace {

enum class Tok {
  Ident, Number, String, Symbol, End
};

struct Token {
  Tok kind;
  std::string text;   // identifier text / symbol / raw string value
  Scalar value;       // Number/String payload
  int line = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw err(ErrorCode::Parse, "line " + std::to_string(tok_.line) + ": " + message);
  }

 private:
  void advance() {
    skipSpace();
    tok_.line = line_;
    if (pos_ >= src_.size()) {
      tok_ = {Tok::End, "", false, line_};
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      tok_ = {Tok::Ident, src_.substr(start, pos_ - start), false, line_};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      size_t start = pos_;
      ++pos_;
      bool decimal = false;
      while (pos_ < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
              (src_[pos_] == '.' && pos_ + 1 < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))))) {
        decimal = decimal || src_[pos_] == '.';
        ++pos_;
      }
      std::string text = src_.substr(start, pos_ - start);
      Scalar v = decimal ? Scalar(std::stod(text))
                         : Scalar(static_cast<std::int64_t>(std::stoll(text)));
      tok_ = {Tok::Number, text, v, line_};
      return;
    }
    if (c == '"') {
      ++pos_;
      std::string out;
      while (pos_ < src_.size() && src_[pos_] != '"') {
        if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) ++pos_;
        if (src_[pos_] == '\n') ++line_;
        out.push_back(src_[pos_++]);
      }
      if (pos_ >= src_.size()) {
        throw err(ErrorCode::Parse, "line " + std::to_string(line_) + ": unterminated string");
      }
      ++pos_;  // closing quote
      tok_ = {Tok::String, out, out, line_};
      return;
    }
    // Two-char operators first.
    static const char* twos[] = {"==", "!=", "<=", ">="};
    for (const char* t : twos) {
      if (src_.compare(pos_, 2, t) == 0) {
        pos_ += 2;
        tok_ = {Tok::Symbol, t, false, line_};
        return;
      }
    }
    static const std::string singles = "()<>=,;.";
    if (singles.find(c) != std::string::npos) {
      ++pos_;
      tok_ = {Tok::Symbol, std::string(1, c), false, line_};
      return;
    }
    throw err(ErrorCode::Parse,
              "line " + std::to_string(line_) + ": unexpected character '" + std::string(1, c) + "'");
  }

  void skipSpace() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  Token tok_;
};

class RuleParser {
 public:
  RuleParser(const std::string& src, RuleDialect dialect) : lex_(src), dialect_(dialect) {}

  std::vector<RegulationRule> parseAll() {
    std::vector<RegulationRule> rules;
    while (lex_.peek().kind != Tok::End) {
      rules.push_back(parseRule());
    }
    return rules;
  }

 private:
  Token expectIdent(const std::string& what) {
    if (lex_.peek().kind != Tok::Ident) lex_.fail("expected " + what);
    return lex_.take();
  }

  void expectKeyword(const std::string& kw) {
    if (lex_.peek().kind != Tok::Ident || lex_.peek().text != kw) {
      lex_.fail("expected '" + kw + "'");
    }
    lex_.take();
  }

  void expectSymbol(const std::string& sym) {
    if (lex_.peek().kind != Tok::Symbol || lex_.peek().text != sym) {
      lex_.fail("expected '" + sym + "'");
    }
    lex_.take();
  }

  bool trySymbol(const std::string& sym) {
    if (lex_.peek().kind == Tok::Symbol && lex_.peek().text == sym) {
      lex_.take();
      return true;
    }
    return false;
  }

  bool peekKeyword(const std::string& kw) const {
    return lex_.peek().kind == Tok::Ident && lex_.peek().text == kw;
  }

  // Dotted identifier chain rendered back as "a.b.c".
  std::string parseDottedName(const std::string& what) {
    std::string out = expectIdent(what).text;
    while (trySymbol(".")) {
      out += "." + expectIdent("identifier after '.'").text;
    }
    return out;
  }

  CmpOp parseOp() {
    if (lex_.peek().kind != Tok::Symbol) lex_.fail("expected comparison operator");
    auto op = cmpOpFromName(lex_.peek().text);
    if (!op) lex_.fail("expected comparison operator, got '" + lex_.peek().text + "'");
    lex_.take();
    return *op;
  }

  Scalar parseLiteral() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Number || t.kind == Tok::String) return lex_.take().value;
    if (t.kind == Tok::Ident && (t.text == "true" || t.text == "false")) {
      return Scalar(lex_.take().text == "true");
    }
    lex_.fail("expected literal");
  }

  ConditionPtr parseCondition() { return parseOr(); }

  ConditionPtr parseOr() {
    auto left = parseAnd();
    while (peekKeyword("or")) {
      lex_.take();
      auto node = std::make_unique<Condition>();
      node->node = Condition::Node::Or;
      node->children.push_back(std::move(left));
      node->children.push_back(parseAnd());
      left = std::move(node);
    }
    return left;
  }

  ConditionPtr parseAnd() {
    auto left = parseUnary();
    while (peekKeyword("and")) {
      lex_.take();
      auto node = std::make_unique<Condition>();
      node->node = Condition::Node::And;
      node->children.push_back(std::move(left));
      node->children.push_back(parseUnary());
      left = std::move(node);
    }
    return left;
  }

  ConditionPtr parseUnary() {
    if (peekKeyword("not")) {
      lex_.take();
      auto node = std::make_unique<Condition>();
      node->node = Condition::Node::Not;
      node->children.push_back(parseUnary());
      return node;
    }
    if (trySymbol("(")) {
      auto inner = parseCondition();
      expectSymbol(")");
      return inner;
    }
    return parsePredicate();
  }

  ConditionPtr parsePredicate() {
    auto node = std::make_unique<Condition>();
    node->node = Condition::Node::Pred;
    if (lex_.peek().kind != Tok::Ident) lex_.fail("expected predicate");
    std::string head = lex_.take().text;

    if (head == "true" || head == "false") {
      node->pred = PredKind::Literal;
      node->literal = head == "true";
      return node;
    }
    if (head == "msg" || head == "flow" || head == "time") {
      expectSymbol(".");
      node->pred = head == "msg" ? PredKind::MsgField
                 : head == "flow" ? PredKind::FlowAttr
                                  : PredKind::ClockCmp;
      node->subject = parseDottedName("field name");
      node->op = parseOp();
      node->literal = parseLiteral();
      return node;
    }
    if (head == "event") {
      expectSymbol("(");
      node->pred = PredKind::EventSingle;
      node->events.push_back(expectIdent("event name").text);
      expectSymbol(")");
      return node;
    }
    if (head == "allOf") {
      expectSymbol("(");
      node->pred = PredKind::EventAll;
      node->events.push_back(expectIdent("event name").text);
      while (trySymbol(",")) {
        node->events.push_back(expectIdent("event name").text);
      }
      expectSymbol(")");
      return node;
    }
    if (head == "state") {
      expectSymbol("(");
      node->pred = PredKind::StateCmp;
      if (lex_.peek().kind == Tok::String) {
        node->subject = lex_.take().text;
      } else {
        node->subject = parseDottedName("state key");
      }
      expectSymbol(")");
      node->op = parseOp();
      node->literal = parseLiteral();
      return node;
    }
    lex_.fail("unknown predicate '" + head + "'");
  }

  FunctionInvocation parseAction(const Id& ruleId) {
    FunctionInvocation inv;
    inv.fn = expectIdent("function name").text;
    expectSymbol("(");
    if (!trySymbol(")")) {
      while (true) {
        std::string key = expectIdent("parameter name").text;
        expectSymbol("=");
        const Token& t = lex_.peek();
        if (t.kind == Tok::Ident && t.text != "true" && t.text != "false") {
          // Bare identifiers (possibly dotted) are string values:
          // PublishEvent(name=eAssist), Route(to=EP1.iSendLoc).
          inv.params[key] = parseDottedName("value");
        } else {
          inv.params[key] = parseLiteral();
        }
        if (!trySymbol(",")) break;
      }
      expectSymbol(")");
    }
    checkInvocation(dialect_, ruleId, inv);
    return inv;
  }

  RegulationRule parseRule() {
    expectKeyword("rule");
    RegulationRule rule;
    rule.id = expectIdent("rule id").text;
    expectKeyword("priority");
    if (lex_.peek().kind != Tok::Number || kindOf(lex_.peek().value) != ScalarKind::Integer) {
      lex_.fail("rule " + rule.id + ": priority must be an integer");
    }
    rule.priority = static_cast<int>(std::get<std::int64_t>(lex_.take().value));
    expectKeyword("when");
    rule.condition = *parseCondition();
    expectKeyword("then");
    if (peekKeyword("end")) {
      throw err(ErrorCode::BadParams, "rule " + rule.id + ": empty action list");
    }
    rule.actions.push_back(parseAction(rule.id));
    while (trySymbol(";")) {
      rule.actions.push_back(parseAction(rule.id));
    }
    expectKeyword("end");
    return rule;
  }

  Lexer lex_;
  RuleDialect dialect_;
};

}  // namespace

std::string FunctionInvocation::text() const {
  std::string out = fn + "(";
  bool first = true;
  for (const auto& [key, value] : params) {
    if (!first) out += ", ";
    first = false;
    out += key + "=" + scalarToText(value);
  }
  return out + ")";
}

std::string RegulationRule::text() const {
  std::string out = "rule " + id + " priority " + std::to_string(priority) + " when " +
                    condition.text() + " then ";
  for (size_t i = 0; i < actions.size(); ++i) {
    if (i) out += "; ";
    out += actions[i].text();
  }
  return out + " end";
}

bool RegulationRule::sameContent(const RegulationRule& other) const {
  return id == other.id && priority == other.priority &&
         condition.text() == other.condition.text() && actions == other.actions;
}

std::vector<RegulationRule> parseRulesDialect(const std::string& text, RuleDialect dialect) {
  return RuleParser(text, dialect).parseAll();
}

std::vector<RegulationRule> parseRules(const std::string& text) {
  return RuleParser(text, RuleDialect::Runtime).parseAll();
}

RegulationRule parseSingleRule(const std::string& text) {
  auto rules = parseRules(text);
  if (rules.size() != 1) {
    throw err(ErrorCode::Parse, "expected exactly one rule, got " + std::to_string(rules.size()));
  }
  return std::move(rules.front());
}

std::string rulesToText(const std::vector<RegulationRule>& rules) {
  std::string out;
  for (const auto& r : rules) {
    out += r.text();
    out += "\n";
  }
  return out;
}

}  // namespace sdsn::regulation
