#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clutter/catalog.hpp"
#include "clutter/grammar.hpp"

namespace clutter {

struct DslError : std::runtime_error {
  int line, col;
  DslError(int line, int col, const std::string& msg)
      : std::runtime_error("rule dsl " + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
};

namespace dsl {

struct Token {
  enum Type { Ident, Int, Punct, Eof } type = Eof;
  std::string text;
  int line = 0, col = 0;
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

 private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        bump();
      } else {
        break;
      }
    }
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.type = Token::Eof;
      tok_.text = "<eof>";
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_')) {
        s += src_[pos_];
        bump();
      }
      tok_.type = Token::Ident;
      tok_.text = s;
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string s;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        s += src_[pos_];
        bump();
      }
      tok_.type = Token::Int;
      tok_.text = s;
      return;
    }
    if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
      bump();
      bump();
      tok_.type = Token::Punct;
      tok_.text = "->";
      return;
    }
    if (std::string("{}():;,|").find(c) != std::string::npos) {
      bump();
      tok_.type = Token::Punct;
      tok_.text = std::string(1, c);
      return;
    }
    throw DslError(line_, col_, std::string("unexpected character '") + c +
                                    "'");
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

struct NodeStmt {
  std::string name;
  unsigned kind_mask = 0;
  std::vector<int> classes, metas;
  // concrete form (rhs use)
  bool concrete = false;
  NodeKind kind = NodeKind::ObjectSlot;
  int subtype = -1;
  int line = 0, col = 0;
};

struct EdgeStmt {
  std::string from, to;
  bool any_label = false;
  int label = kPrimitiveLabel;
  int line = 0, col = 0;
};

struct Block {
  std::vector<NodeStmt> nodes;
  std::vector<EdgeStmt> edges;
};

class Parser {
 public:
  Parser(const std::string& src, const Catalog& cat) : lex_(src), cat_(cat) {}

  RuleSet parse() {
    RuleSet rs;
    while (lex_.peek().type != Token::Eof) {
      rs.rules.push_back(parse_rule());
      const Rule& r = rs.rules.back();
      for (std::size_t i = 0; i + 1 < rs.rules.size(); ++i)
        if (rs.rules[i].name == r.name)
          fail("duplicate rule name " + r.name);
    }
    if (rs.rules.empty()) fail("no rules");
    return rs;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw DslError(lex_.peek().line, lex_.peek().col, msg);
  }
  [[noreturn]] void fail_at(int line, int col, const std::string& msg) {
    throw DslError(line, col, msg);
  }

  Token expect(Token::Type t, const std::string& what) {
    if (lex_.peek().type != t)
      fail("expected " + what + ", got '" + lex_.peek().text + "'");
    return lex_.take();
  }
  void expect_punct(const std::string& p) {
    if (lex_.peek().type != Token::Punct || lex_.peek().text != p)
      fail("expected '" + p + "', got '" + lex_.peek().text + "'");
    lex_.take();
  }
  bool accept_punct(const std::string& p) {
    if (lex_.peek().type == Token::Punct && lex_.peek().text == p) {
      lex_.take();
      return true;
    }
    return false;
  }
  bool peek_ident(const std::string& s) {
    return lex_.peek().type == Token::Ident && lex_.peek().text == s;
  }
  void expect_ident(const std::string& s) {
    if (!peek_ident(s)) fail("expected '" + s + "'");
    lex_.take();
  }

  Rule parse_rule() {
    expect_ident("rule");
    Token name = expect(Token::Ident, "rule name");
    expect_punct("{");
    expect_ident("lhs");
    Block lhs = parse_block(/*rhs=*/false);
    expect_ident("rhs");
    Block rhs = parse_block(/*rhs=*/true);
    std::vector<Token> keep_names;
    if (peek_ident("keep")) {
      lex_.take();
      keep_names.push_back(expect(Token::Ident, "kept node name"));
      while (accept_punct(","))
        keep_names.push_back(expect(Token::Ident, "kept node name"));
    }
    expect_punct("}");
    return assemble(name, lhs, rhs, keep_names);
  }

  Block parse_block(bool rhs) {
    Block b;
    expect_punct("{");
    while (!accept_punct("}")) {
      if (peek_ident("node")) {
        lex_.take();
        b.nodes.push_back(parse_node_stmt(rhs));
      } else if (peek_ident("edge")) {
        lex_.take();
        b.edges.push_back(parse_edge_stmt(rhs));
      } else {
        fail("expected 'node', 'edge', or '}'");
      }
      accept_punct(";");
    }
    return b;
  }

  NodeStmt parse_node_stmt(bool rhs) {
    NodeStmt st;
    Token name = expect(Token::Ident, "node name");
    st.name = name.text;
    st.line = name.line;
    st.col = name.col;
    expect_punct(":");
    parse_kind_alt(st, rhs);
    while (!rhs && accept_punct("|")) parse_kind_alt(st, rhs);
    if (rhs) st.concrete = true;
    return st;
  }

  void parse_kind_alt(NodeStmt& st, bool rhs) {
    Token kt = expect(Token::Ident, "node kind");
    const std::string& k = kt.text;
    if (k == "any") {
      if (rhs) fail_at(kt.line, kt.col, "rhs node kind cannot be 'any'");
      return;  // mask stays permissive
    }
    NodeKind kind;
    if (k == "Tray")
      kind = NodeKind::Tray;
    else if (k == "ObjectSlot")
      kind = NodeKind::ObjectSlot;
    else if (k == "End")
      kind = NodeKind::End;
    else if (k == "Object")
      kind = NodeKind::Object;
    else if (k == "MetaGroup")
      kind = NodeKind::MetaGroup;
    else
      fail_at(kt.line, kt.col, "unknown node kind " + k);
    st.kind_mask |= kind_bit(kind);
    st.kind = kind;
    std::vector<std::string> args;
    if (accept_punct("(")) {
      args.push_back(expect(Token::Ident, "subtype name").text);
      while (accept_punct("|"))
        args.push_back(expect(Token::Ident, "subtype name").text);
      expect_punct(")");
    }
    if (!args.empty() && kind != NodeKind::Object && kind != NodeKind::MetaGroup)
      fail_at(kt.line, kt.col, k + " takes no subtype arguments");
    if (rhs && (kind == NodeKind::Object || kind == NodeKind::MetaGroup) &&
        args.size() != 1)
      fail_at(kt.line, kt.col, "rhs " + k + " needs exactly one subtype");
    for (const std::string& a : args) {
      if (kind == NodeKind::Object) {
        auto id = cat_.find_class(a);
        if (!id) fail_at(kt.line, kt.col, "unknown object class " + a);
        st.classes.push_back(*id);
        st.subtype = *id;
      } else {
        auto id = cat_.find_meta(a);
        if (!id) fail_at(kt.line, kt.col, "unknown meta name " + a);
        st.metas.push_back(*id);
        st.subtype = *id;
      }
    }
  }

  EdgeStmt parse_edge_stmt(bool rhs) {
    EdgeStmt st;
    Token from = expect(Token::Ident, "edge source");
    st.from = from.text;
    st.line = from.line;
    st.col = from.col;
    expect_punct("->");
    st.to = expect(Token::Ident, "edge target").text;
    expect_punct(":");
    Token lt = expect(Token::Ident, "edge label");
    if (lt.text == "primitive") {
      st.label = kPrimitiveLabel;
    } else if (lt.text == "orient") {
      expect_punct("(");
      Token k = expect(Token::Int, "orientation index");
      st.label = std::stoi(k.text);
      if (st.label < 0 || st.label >= kOrientationCount)
        fail_at(k.line, k.col, "orientation index out of range");
      expect_punct(")");
    } else if (lt.text == "any") {
      if (rhs) fail_at(lt.line, lt.col, "rhs edge label cannot be 'any'");
      st.any_label = true;
    } else {
      fail_at(lt.line, lt.col, "unknown edge label " + lt.text);
    }
    return st;
  }

  Rule assemble(const Token& name, const Block& lhs, const Block& rhs,
                const std::vector<Token>& keep_names) {
    Rule r;
    r.name = name.text;
    if (lhs.nodes.empty())
      fail_at(name.line, name.col, "rule " + r.name + " has empty lhs");
    for (const NodeStmt& ns : lhs.nodes) {
      if (r.lhs.index_of(ns.name) >= 0)
        fail_at(ns.line, ns.col, "duplicate lhs node " + ns.name);
      PatternNode pn;
      pn.name = ns.name;
      pn.kind_mask = ns.kind_mask;
      pn.classes = ns.classes;
      pn.metas = ns.metas;
      r.lhs.nodes.push_back(pn);
    }
    for (const EdgeStmt& es : lhs.edges) {
      PatternEdge pe;
      pe.from = r.lhs.index_of(es.from);
      pe.to = r.lhs.index_of(es.to);
      if (pe.from < 0 || pe.to < 0)
        fail_at(es.line, es.col, "lhs edge references undeclared node");
      pe.any_label = es.any_label;
      pe.label = es.label;
      r.lhs.edges.push_back(pe);
    }
    for (const Token& kn : keep_names) {
      int idx = r.lhs.index_of(kn.text);
      if (idx < 0)
        fail_at(kn.line, kn.col, "keep references unknown lhs node " + kn.text);
      if (r.keeps(idx))
        fail_at(kn.line, kn.col, "keep lists " + kn.text + " twice");
      r.keep.push_back(idx);
    }

    auto rhs_index = [&](const std::string& n) -> int {
      for (std::size_t i = 0; i < r.rhs_nodes.size(); ++i)
        if (r.rhs_nodes[i].name == n) return static_cast<int>(i);
      return -1;
    };
    // kept lhs nodes enter the rhs namespace first, in keep order
    for (int idx : r.keep) {
      RhsNode rn;
      rn.name = r.lhs.nodes[idx].name;
      rn.iface = idx;
      r.rhs_nodes.push_back(rn);
    }
    for (const NodeStmt& ns : rhs.nodes) {
      int existing = rhs_index(ns.name);
      if (existing >= 0) {
        RhsNode& rn = r.rhs_nodes[existing];
        if (rn.declared)
          fail_at(ns.line, ns.col, "duplicate rhs node " + ns.name);
        rn.declared = true;  // re-kind of a kept node
        rn.kind = ns.kind;
        rn.subtype = ns.subtype;
      } else {
        if (r.lhs.index_of(ns.name) >= 0)
          fail_at(ns.line, ns.col,
                  "rhs node " + ns.name + " shadows non-kept lhs node");
        RhsNode rn;
        rn.name = ns.name;
        rn.declared = true;
        rn.kind = ns.kind;
        rn.subtype = ns.subtype;
        r.rhs_nodes.push_back(rn);
      }
    }
    for (const EdgeStmt& es : rhs.edges) {
      RhsEdge re;
      re.from = rhs_index(es.from);
      re.to = rhs_index(es.to);
      if (re.from < 0 || re.to < 0)
        fail_at(es.line, es.col,
                "rhs edge endpoint " +
                    (re.from < 0 ? es.from : es.to) +
                    " is neither a fresh rhs node nor a kept node");
      re.label = es.label;
      r.rhs_edges.push_back(re);
    }
    return r;
  }

  Lexer lex_;
  const Catalog& cat_;
};

}  // namespace dsl

inline RuleSet parse_rule_set(const std::string& text, const Catalog& cat) {
  dsl::Parser p(text, cat);
  return p.parse();
}

inline RuleSet load_rule_file(const std::string& path, const Catalog& cat) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rule file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rule_set(ss.str(), cat);
}

// The shipped grammar, generated from the catalog:
//   drop_object, stack_object, end, one insert per class, one insert per
//   meta, the 10 orientation relabels, and a trailing terminate no-op.
// 7 classes + 9 metas -> 30 rules; 14 + 21 -> 49.
inline std::string emit_default_rules(const Catalog& cat) {
  std::ostringstream o;
  o << "# clutter grammar for catalog '" << cat.name << "': "
    << cat.class_count() << " classes, " << cat.meta_count() << " metas\n\n";
  o << "rule drop_object {\n"
       "  lhs { node a: Tray }\n"
       "  rhs { node b: ObjectSlot; edge a->b: primitive }\n"
       "  keep a\n"
       "}\n\n";
  o << "rule stack_object {\n"
       "  lhs { node a: Object|MetaGroup }\n"
       "  rhs { node b: ObjectSlot; edge a->b: primitive }\n"
       "  keep a\n"
       "}\n\n";
  o << "rule end {\n"
       "  lhs { node a: ObjectSlot }\n"
       "  rhs { node a: End }\n"
       "  keep a\n"
       "}\n\n";
  for (const ObjectSpec& s : cat.specs)
    o << "rule insert_" << s.cls.name << " {\n"
      << "  lhs { node a: ObjectSlot }\n"
      << "  rhs { node a: Object(" << s.cls.name << ") }\n"
      << "  keep a\n"
      << "}\n\n";
  for (const MetaSpec& m : cat.metas) {
    const std::string member = cat.spec(m.member_class).cls.name;
    const int orient = cat.spec(m.member_class).default_orientation();
    o << "rule insert_" << m.name << " {\n"
      << "  lhs { node a: Tray; node b: ObjectSlot; edge a->b: primitive }\n"
      << "  rhs {\n"
      << "    node b: MetaGroup(" << m.name << ")\n";
    for (int i = 0; i < m.count; ++i)
      o << "    node m" << i << ": Object(" << member << ")\n";
    o << "    edge a->b: primitive\n";
    for (int i = 0; i < m.count; ++i)
      o << "    edge b->m" << i << ": orient(" << orient << ")\n";
    o << "  }\n"
      << "  keep a, b\n"
      << "}\n\n";
  }
  static const char* kOrientRuleNames[kOrientationCount] = {
      "upright",   "upside_down", "side_xp",    "side_xn", "side_yp",
      "side_yn",   "yaw45",       "side_yaw45", "lying_x", "lying_y"};
  for (int k = 0; k < kOrientationCount; ++k)
    o << "rule orient_" << kOrientRuleNames[k] << " {\n"
      << "  lhs { node a: Tray|Object; node b: Object|ObjectSlot; edge a->b: "
         "primitive }\n"
      << "  rhs { edge a->b: orient(" << k << ") }\n"
      << "  keep a, b\n"
      << "}\n\n";
  o << "rule terminate {\n"
       "  lhs { node a: End }\n"
       "  rhs { }\n"
       "  keep a\n"
       "}\n";
  return o.str();
}

inline RuleSet default_rule_set(const Catalog& cat) {
  return parse_rule_set(emit_default_rules(cat), cat);
}

}  // namespace clutter
