#include "fgcard/query.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <unordered_set>

#include "fgcard/error.hpp"

namespace fgcard {

namespace {

enum class Tok { Ident, QuotedIdent, Int, Real, String, Symbol, End };

struct Token {
	Tok kind = Tok::End;
	std::string text;
	size_t line = 1;
	size_t column = 1;
};

std::string upper(std::string_view s) {
	std::string out(s);
	for (auto &c : out) {
		c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
	}
	return out;
}

std::vector<Token> tokenize(std::string_view text) {
	std::vector<Token> out;
	size_t i = 0, line = 1, col = 1;
	auto advance = [&](size_t n) {
		for (size_t k = 0; k < n; ++k) {
			if (text[i] == '\n') {
				++line;
				col = 1;
			} else {
				++col;
			}
			++i;
		}
	};
	while (i < text.size()) {
		char c = text[i];
		if (std::isspace(static_cast<unsigned char>(c))) {
			advance(1);
			continue;
		}
		if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') {
			while (i < text.size() && text[i] != '\n') {
				advance(1);
			}
			continue;
		}
		Token tok;
		tok.line = line;
		tok.column = col;
		if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
			size_t j = i;
			while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
				++j;
			}
			tok.kind = Tok::Ident;
			tok.text = std::string(text.substr(i, j - i));
			advance(j - i);
		} else if (std::isdigit(static_cast<unsigned char>(c)) ||
		           (c == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
			size_t j = i;
			bool real = false;
			while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
				++j;
			}
			if (j < text.size() && text[j] == '.') {
				real = true;
				++j;
				while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
					++j;
				}
			}
			if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
				size_t k = j + 1;
				if (k < text.size() && (text[k] == '+' || text[k] == '-')) {
					++k;
				}
				if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
					real = true;
					j = k;
					while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
						++j;
					}
				}
			}
			tok.kind = real ? Tok::Real : Tok::Int;
			tok.text = std::string(text.substr(i, j - i));
			advance(j - i);
		} else if (c == '\'' || c == '"') {
			char quote = c;
			advance(1);
			std::string value;
			bool closed = false;
			while (i < text.size()) {
				if (text[i] == quote) {
					if (i + 1 < text.size() && text[i + 1] == quote) {
						value.push_back(quote);
						advance(2);
						continue;
					}
					advance(1);
					closed = true;
					break;
				}
				value.push_back(text[i]);
				advance(1);
			}
			if (!closed) {
				throw ParseError("unterminated quoted literal", tok.line, tok.column);
			}
			tok.kind = quote == '\'' ? Tok::String : Tok::QuotedIdent;
			tok.text = std::move(value);
		} else {
			static const char *two[] = {"<>", "!=", "<=", ">="};
			tok.kind = Tok::Symbol;
			for (auto *t : two) {
				if (text.substr(i, 2) == t) {
					tok.text = t;
				}
			}
			if (tok.text.empty()) {
				if (std::string_view("(),.*;=<>-").find(c) == std::string_view::npos) {
					throw ParseError(std::string("unexpected character '") + c + "'", line, col);
				}
				tok.text = std::string(1, c);
			}
			advance(tok.text.size());
		}
		out.push_back(std::move(tok));
	}
	Token end;
	end.kind = Tok::End;
	end.line = line;
	end.column = col;
	out.push_back(end);
	return out;
}

struct RawColumn {
	std::string qualifier;
	std::string name;
	size_t line = 0, column = 0;
};

struct Operand {
	bool is_column = false;
	RawColumn col;
	Literal lit;
};

//! Parsed WHERE expression before alias resolution.
struct Expr {
	enum class Kind { Compare, In, Like, And, Or, Not } kind = Kind::Compare;
	Operand lhs, rhs;
	CompareOp op = CompareOp::Eq;
	std::vector<Literal> list;
	std::vector<Expr> children;
	size_t line = 0, column = 0;
};

class Parser {
public:
	Parser(std::string_view text, const Catalog &catalog) : toks_(tokenize(text)), catalog_(catalog) {
	}

	QueryIR parse_statement() {
		expect_keyword("SELECT");
		expect_keyword("COUNT");
		expect_symbol("(");
		expect_symbol("*");
		expect_symbol(")");
		expect_keyword("FROM");
		do {
			parse_table_ref();
		} while (accept_symbol(","));
		std::vector<Expr> conjuncts;
		if (accept_keyword("WHERE")) {
			auto e = parse_or();
			flatten_and(std::move(e), conjuncts);
		}
		accept_symbol(";");
		if (peek().kind != Tok::End) {
			fail("unexpected '" + peek().text + "' after end of statement");
		}
		for (auto &c : conjuncts) {
			lower_conjunct(c);
		}
		for (auto &[alias, parts] : filter_parts_) {
			ir_.filters[alias] = Predicate::all_of(std::move(parts));
		}
		ir_.normalize();
		return std::move(ir_);
	}

	//! Parses a bare filter expression in the context of fixed aliases (JSON filter strings).
	Predicate parse_filter(const std::map<std::string, std::string> &aliases, const std::string &alias) {
		ir_.aliases = aliases;
		default_alias_ = alias;
		auto e = parse_or();
		if (peek().kind != Tok::End) {
			fail("unexpected '" + peek().text + "' after filter expression");
		}
		std::string owner;
		auto p = to_predicate(e, owner);
		if (!owner.empty() && owner != alias) {
			throw ParseError("filter for alias " + alias + " references alias " + owner, e.line, e.column);
		}
		return p;
	}

private:
	const Token &peek(size_t ahead = 0) const {
		return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
	}
	const Token &next() {
		const Token &t = peek();
		if (pos_ < toks_.size() - 1) {
			++pos_;
		}
		return t;
	}
	[[noreturn]] void fail(const std::string &msg) const {
		throw ParseError(msg, peek().line, peek().column);
	}
	bool is_keyword(const Token &t, std::string_view kw) const {
		return t.kind == Tok::Ident && upper(t.text) == kw;
	}
	bool accept_keyword(std::string_view kw) {
		if (is_keyword(peek(), kw)) {
			next();
			return true;
		}
		return false;
	}
	void expect_keyword(std::string_view kw) {
		if (!accept_keyword(kw)) {
			fail("expected " + std::string(kw) + ", found '" + describe(peek()) + "'");
		}
	}
	bool accept_symbol(std::string_view s) {
		if (peek().kind == Tok::Symbol && peek().text == s) {
			next();
			return true;
		}
		return false;
	}
	void expect_symbol(std::string_view s) {
		if (!accept_symbol(s)) {
			fail("expected '" + std::string(s) + "', found '" + describe(peek()) + "'");
		}
	}
	static std::string describe(const Token &t) {
		return t.kind == Tok::End ? "end of input" : t.text;
	}
	static bool reserved(const Token &t) {
		static const std::set<std::string> words {"SELECT", "FROM", "WHERE", "AND", "OR",   "NOT",
		                                          "IN",     "LIKE", "AS",    "BETWEEN", "COUNT"};
		return t.kind == Tok::Ident && words.count(upper(t.text));
	}
	std::string identifier(const char *what) {
		auto &t = peek();
		if ((t.kind != Tok::Ident && t.kind != Tok::QuotedIdent) || reserved(t)) {
			fail(std::string("expected ") + what + ", found '" + describe(t) + "'");
		}
		return next().text;
	}

	void parse_table_ref() {
		auto at = peek();
		auto table = identifier("table name");
		if (!catalog_.find_table(table)) {
			throw ParseError("unknown table '" + table + "'", at.line, at.column);
		}
		std::string alias = table;
		if (accept_keyword("AS") || ((peek().kind == Tok::Ident || peek().kind == Tok::QuotedIdent) && !reserved(peek()))) {
			at = peek();
			alias = identifier("alias");
		}
		if (!ir_.aliases.emplace(alias, table).second) {
			throw ParseError("duplicate alias '" + alias + "'", at.line, at.column);
		}
	}

	Expr parse_or() {
		auto first = parse_and();
		if (!is_keyword(peek(), "OR")) {
			return first;
		}
		Expr e;
		e.kind = Expr::Kind::Or;
		e.line = first.line;
		e.column = first.column;
		e.children.push_back(std::move(first));
		while (accept_keyword("OR")) {
			e.children.push_back(parse_and());
		}
		return e;
	}
	Expr parse_and() {
		auto first = parse_not();
		if (!is_keyword(peek(), "AND")) {
			return first;
		}
		Expr e;
		e.kind = Expr::Kind::And;
		e.line = first.line;
		e.column = first.column;
		e.children.push_back(std::move(first));
		while (accept_keyword("AND")) {
			e.children.push_back(parse_not());
		}
		return e;
	}
	Expr parse_not() {
		auto at = peek();
		if (accept_keyword("NOT")) {
			Expr e;
			e.kind = Expr::Kind::Not;
			e.line = at.line;
			e.column = at.column;
			e.children.push_back(parse_not());
			return e;
		}
		if (accept_symbol("(")) {
			auto e = parse_or();
			expect_symbol(")");
			return e;
		}
		return parse_comparison();
	}

	Literal parse_literal() {
		bool negative = accept_symbol("-");
		auto &t = peek();
		if (t.kind == Tok::Int) {
			int64_t v = 0;
			auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
			if (ec != std::errc()) {
				// too large for 64 bits: keep it as a double
				double d = 0;
				std::from_chars(t.text.data(), t.text.data() + t.text.size(), d);
				next();
				return negative ? -d : d;
			}
			next();
			return negative ? -v : v;
		}
		if (t.kind == Tok::Real) {
			double d = 0;
			std::from_chars(t.text.data(), t.text.data() + t.text.size(), d);
			next();
			return negative ? -d : d;
		}
		if (t.kind == Tok::String && !negative) {
			return next().text;
		}
		fail("expected a literal, found '" + describe(t) + "'");
	}

	Operand parse_operand() {
		Operand o;
		auto &t = peek();
		if ((t.kind == Tok::Ident || t.kind == Tok::QuotedIdent) && !reserved(t)) {
			o.is_column = true;
			o.col.line = t.line;
			o.col.column = t.column;
			auto first = next().text;
			if (accept_symbol(".")) {
				o.col.qualifier = first;
				o.col.name = identifier("column name");
			} else {
				o.col.name = first;
			}
			return o;
		}
		o.lit = parse_literal();
		return o;
	}

	Expr parse_comparison() {
		auto at = peek();
		Expr e;
		e.line = at.line;
		e.column = at.column;
		e.lhs = parse_operand();
		bool negated = accept_keyword("NOT");
		if (accept_keyword("IN")) {
			e.kind = Expr::Kind::In;
			expect_symbol("(");
			do {
				e.list.push_back(parse_literal());
				if (e.list.size() > MAX_IN_LIST) {
					fail("IN list longer than " + std::to_string(MAX_IN_LIST) + " literals");
				}
			} while (accept_symbol(","));
			expect_symbol(")");
		} else if (accept_keyword("LIKE")) {
			e.kind = Expr::Kind::Like;
			if (peek().kind != Tok::String) {
				fail("LIKE expects a string pattern");
			}
			e.list.push_back(next().text);
		} else if (accept_keyword("BETWEEN")) {
			auto lo = parse_literal();
			expect_keyword("AND");
			auto hi = parse_literal();
			Expr ge, le;
			ge.kind = le.kind = Expr::Kind::Compare;
			ge.line = le.line = at.line;
			ge.column = le.column = at.column;
			ge.lhs = le.lhs = e.lhs;
			ge.op = CompareOp::Ge;
			ge.rhs.lit = lo;
			le.op = CompareOp::Le;
			le.rhs.lit = hi;
			e.kind = Expr::Kind::And;
			e.children.push_back(std::move(ge));
			e.children.push_back(std::move(le));
		} else {
			if (negated) {
				fail("expected IN, LIKE or BETWEEN after NOT");
			}
			auto &t = peek();
			static const std::map<std::string, CompareOp> ops {{"=", CompareOp::Eq},  {"<>", CompareOp::Ne},
			                                                   {"!=", CompareOp::Ne}, {"<", CompareOp::Lt},
			                                                   {"<=", CompareOp::Le}, {">", CompareOp::Gt},
			                                                   {">=", CompareOp::Ge}};
			auto it = t.kind == Tok::Symbol ? ops.find(t.text) : ops.end();
			if (it == ops.end()) {
				fail("expected a comparison operator, found '" + describe(t) + "'");
			}
			next();
			e.kind = Expr::Kind::Compare;
			e.op = it->second;
			e.rhs = parse_operand();
			if (!e.lhs.is_column && !e.rhs.is_column) {
				throw ParseError("comparison between two literals", at.line, at.column);
			}
			if (!e.lhs.is_column) {
				std::swap(e.lhs, e.rhs);
				static const std::map<CompareOp, CompareOp> flip {{CompareOp::Lt, CompareOp::Gt},
				                                                  {CompareOp::Le, CompareOp::Ge},
				                                                  {CompareOp::Gt, CompareOp::Lt},
				                                                  {CompareOp::Ge, CompareOp::Le}};
				if (auto f = flip.find(e.op); f != flip.end()) {
					e.op = f->second;
				}
			}
		}
		if (!e.lhs.is_column && e.kind != Expr::Kind::Compare) {
			throw ParseError("IN, LIKE and BETWEEN need a column on the left", at.line, at.column);
		}
		if (negated) {
			Expr n;
			n.kind = Expr::Kind::Not;
			n.line = at.line;
			n.column = at.column;
			n.children.push_back(std::move(e));
			return n;
		}
		return e;
	}

	static void flatten_and(Expr e, std::vector<Expr> &out) {
		if (e.kind == Expr::Kind::And) {
			for (auto &c : e.children) {
				flatten_and(std::move(c), out);
			}
		} else {
			out.push_back(std::move(e));
		}
	}

	ColumnRef resolve(const RawColumn &c) const {
		if (!c.qualifier.empty()) {
			auto it = ir_.aliases.find(c.qualifier);
			if (it == ir_.aliases.end()) {
				throw ParseError("unknown alias '" + c.qualifier + "'", c.line, c.column);
			}
			if (!catalog_.table(it->second).column_index(c.name)) {
				throw ParseError("unknown column " + c.qualifier + "." + c.name, c.line, c.column);
			}
			return ColumnRef {c.qualifier, c.name};
		}
		if (!default_alias_.empty()) {
			auto &table = ir_.aliases.at(default_alias_);
			if (catalog_.table(table).column_index(c.name)) {
				return ColumnRef {default_alias_, c.name};
			}
			throw ParseError("unknown column " + default_alias_ + "." + c.name, c.line, c.column);
		}
		std::vector<std::string> owners;
		for (auto &[alias, table] : ir_.aliases) {
			if (catalog_.table(table).column_index(c.name)) {
				owners.push_back(alias);
			}
		}
		if (owners.empty()) {
			throw ParseError("unknown column '" + c.name + "'", c.line, c.column);
		}
		if (owners.size() > 1) {
			throw ParseError("ambiguous column '" + c.name + "'", c.line, c.column);
		}
		return ColumnRef {owners.front(), c.name};
	}

	void lower_conjunct(const Expr &e) {
		if (e.kind == Expr::Kind::Compare && e.lhs.is_column && e.rhs.is_column) {
			if (e.op != CompareOp::Eq) {
				throw ParseError("non-equal joins are not supported", e.line, e.column);
			}
			auto l = resolve(e.lhs.col);
			auto r = resolve(e.rhs.col);
			if (l == r) {
				throw ParseError("join condition compares " + l.str() + " with itself", e.line, e.column);
			}
			if (r < l) {
				std::swap(l, r);
			}
			ir_.joins.push_back(JoinCondition {l, r});
			return;
		}
		std::string owner;
		auto p = to_predicate(e, owner);
		filter_parts_[owner].push_back(std::move(p));
	}

	Predicate to_predicate(const Expr &e, std::string &owner) const {
		auto claim = [&](const ColumnRef &ref) {
			if (owner.empty()) {
				owner = ref.alias;
			} else if (owner != ref.alias) {
				throw ParseError("filter expression references more than one alias (" + owner + ", " + ref.alias + ")",
				                 e.line, e.column);
			}
		};
		switch (e.kind) {
		case Expr::Kind::Compare: {
			if (e.rhs.is_column) {
				throw ParseError("column-to-column comparisons are only allowed as top-level equi-join conditions",
				                 e.line, e.column);
			}
			auto ref = resolve(e.lhs.col);
			claim(ref);
			return Predicate::compare(ref.column, e.op, e.rhs.lit);
		}
		case Expr::Kind::In: {
			auto ref = resolve(e.lhs.col);
			claim(ref);
			return Predicate::in_list(ref.column, e.list);
		}
		case Expr::Kind::Like: {
			auto ref = resolve(e.lhs.col);
			claim(ref);
			return Predicate::like(ref.column, std::get<std::string>(e.list.front()));
		}
		case Expr::Kind::Not:
			return Predicate::negate(to_predicate(e.children.front(), owner));
		case Expr::Kind::And:
		case Expr::Kind::Or: {
			std::vector<Predicate> kids;
			for (auto &c : e.children) {
				kids.push_back(to_predicate(c, owner));
			}
			return e.kind == Expr::Kind::And ? Predicate::all_of(std::move(kids)) : Predicate::any_of(std::move(kids));
		}
		}
		throw ParseError("unsupported expression", e.line, e.column);
	}

	std::vector<Token> toks_;
	size_t pos_ = 0;
	const Catalog &catalog_;
	QueryIR ir_;
	std::string default_alias_;
	std::map<std::string, std::vector<Predicate>> filter_parts_;
};

void normalize_predicate(Predicate &p) {
	if (p.kind == Predicate::Kind::Atom) {
		if (p.op == CompareOp::In) {
			std::sort(p.literals.begin(), p.literals.end());
			p.literals.erase(std::unique(p.literals.begin(), p.literals.end()), p.literals.end());
		}
		return;
	}
	for (auto &c : p.children) {
		normalize_predicate(c);
	}
	if (p.kind == Predicate::Kind::Not) {
		return;
	}
	std::vector<Predicate> flat;
	for (auto &c : p.children) {
		if (c.kind == p.kind) {
			for (auto &g : c.children) {
				flat.push_back(std::move(g));
			}
		} else {
			flat.push_back(std::move(c));
		}
	}
	std::vector<std::pair<std::string, Predicate>> keyed;
	for (auto &c : flat) {
		keyed.emplace_back(c.to_sql(), std::move(c));
	}
	std::sort(keyed.begin(), keyed.end(), [](auto &a, auto &b) { return a.first < b.first; });
	keyed.erase(std::unique(keyed.begin(), keyed.end(), [](auto &a, auto &b) { return a.first == b.first; }),
	            keyed.end());
	p.children.clear();
	for (auto &[k, c] : keyed) {
		p.children.push_back(std::move(c));
	}
	if (p.children.size() == 1) {
		Predicate only = std::move(p.children.front());
		p = std::move(only);
	}
}

std::vector<Predicate> conjuncts_of(const Predicate &p) {
	if (p.kind == Predicate::Kind::And) {
		return p.children;
	}
	return {p};
}

} // namespace

void QueryIR::normalize() {
	for (auto &j : joins) {
		if (j.right < j.left) {
			std::swap(j.left, j.right);
		}
	}
	std::sort(joins.begin(), joins.end());
	joins.erase(std::unique(joins.begin(), joins.end()), joins.end());
	for (auto &[alias, p] : filters) {
		normalize_predicate(p);
	}
}

std::string QueryIR::to_sql() const {
	std::string out = "SELECT COUNT(*) FROM ";
	bool first = true;
	for (auto &[alias, table] : aliases) {
		out += (first ? "" : ", ") + table + " AS " + alias;
		first = false;
	}
	std::vector<std::string> conds;
	for (auto &j : joins) {
		conds.push_back(j.left.str() + " = " + j.right.str());
	}
	for (auto &[alias, p] : filters) {
		for (auto &c : conjuncts_of(p)) {
			conds.push_back(c.to_sql(alias));
		}
	}
	for (size_t i = 0; i < conds.size(); ++i) {
		out += (i ? " AND " : " WHERE ") + conds[i];
	}
	return out + ";";
}

nlohmann::json QueryIR::to_json() const {
	nlohmann::json j;
	j["aliases"] = aliases;
	j["joins"] = nlohmann::json::array();
	for (auto &c : joins) {
		j["joins"].push_back(c.left.str() + " = " + c.right.str());
	}
	j["filters"] = nlohmann::json::object();
	for (auto &[alias, p] : filters) {
		j["filters"][alias] = p.to_json();
	}
	return j;
}

QueryIR QueryIR::restrict_to(const std::vector<std::string> &subset) const {
	std::set<std::string> keep(subset.begin(), subset.end());
	QueryIR out;
	for (auto &a : keep) {
		out.aliases.emplace(a, aliases.at(a));
		if (auto it = filters.find(a); it != filters.end()) {
			out.filters.emplace(a, it->second);
		}
	}
	for (auto &j : joins) {
		if (keep.count(j.left.alias) && keep.count(j.right.alias)) {
			out.joins.push_back(j);
		}
	}
	return out;
}

QueryIR parse_sql(std::string_view text, const Catalog &catalog) {
	auto ir = Parser(text, catalog).parse_statement();
	validate_query(ir, catalog);
	return ir;
}

namespace {

ColumnRef column_ref_from_text(std::string_view text) {
	auto trim = [](std::string_view s) {
		while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
			s.remove_prefix(1);
		}
		while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
			s.remove_suffix(1);
		}
		return s;
	};
	text = trim(text);
	auto dot = text.find('.');
	if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size()) {
		throw ParseError("expected alias.column, got '" + std::string(text) + "'");
	}
	return ColumnRef {std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
}

} // namespace

QueryIR query_from_json(const nlohmann::json &doc, const Catalog &catalog) {
	QueryIR ir;
	try {
		for (auto &[alias, table] : doc.at("aliases").items()) {
			ir.aliases.emplace(alias, table.get<std::string>());
		}
		if (doc.contains("joins")) {
			for (auto &j : doc.at("joins")) {
				JoinCondition c;
				if (j.is_string()) {
					auto text = j.get<std::string>();
					auto eq = text.find('=');
					if (eq == std::string::npos) {
						throw ParseError("join condition must look like x.a = y.b, got '" + text + "'");
					}
					c.left = column_ref_from_text(std::string_view(text).substr(0, eq));
					c.right = column_ref_from_text(std::string_view(text).substr(eq + 1));
				} else {
					c.left = column_ref_from_text(j.at(0).get<std::string>());
					c.right = column_ref_from_text(j.at(1).get<std::string>());
				}
				if (c.left == c.right) {
					throw ParseError("join condition compares " + c.left.str() + " with itself");
				}
				ir.joins.push_back(std::move(c));
			}
		}
		for (auto &a : ir.aliases) {
			if (!catalog.find_table(a.second)) {
				throw ParseError("unknown table '" + a.second + "'");
			}
		}
		if (doc.contains("filters")) {
			for (auto &[alias, f] : doc.at("filters").items()) {
				if (!ir.aliases.count(alias)) {
					throw ParseError("filter for unknown alias '" + alias + "'");
				}
				if (f.is_string()) {
					ir.filters[alias] = Parser(f.get<std::string>(), catalog).parse_filter(ir.aliases, alias);
				} else {
					ir.filters[alias] = Predicate::from_json(f);
				}
			}
		}
	} catch (const nlohmann::json::exception &e) {
		throw ParseError(std::string("malformed query JSON: ") + e.what());
	}
	ir.normalize();
	validate_query(ir, catalog);
	return ir;
}

QueryIR parse_query(std::string_view text, const Catalog &catalog) {
	auto first = text.find_first_not_of(" \t\r\n");
	if (first != std::string_view::npos && text[first] == '{') {
		nlohmann::json doc;
		try {
			doc = nlohmann::json::parse(text);
		} catch (const nlohmann::json::exception &e) {
			throw ParseError(std::string("query JSON does not parse: ") + e.what());
		}
		return query_from_json(doc, catalog);
	}
	return parse_sql(text, catalog);
}

void validate_query(const QueryIR &query, const Catalog &catalog) {
	if (query.aliases.empty()) {
		throw ParseError("query has no tables");
	}
	if (query.aliases.size() > MAX_ALIASES) {
		throw ParseError("query has more than " + std::to_string(MAX_ALIASES) + " aliases");
	}
	for (auto &[alias, table] : query.aliases) {
		if (!catalog.find_table(table)) {
			throw ParseError("unknown table '" + table + "'");
		}
	}
	for (auto &[alias, p] : query.filters) {
		auto it = query.aliases.find(alias);
		if (it == query.aliases.end()) {
			throw ParseError("filter for unknown alias '" + alias + "'");
		}
		BoundPredicate check(p, catalog.table(it->second));
	}
	for (auto &j : query.joins) {
		for (auto *side : {&j.left, &j.right}) {
			auto it = query.aliases.find(side->alias);
			if (it == query.aliases.end()) {
				throw ParseError("join condition references unknown alias '" + side->alias + "'");
			}
			if (!catalog.table(it->second).column_index(side->column)) {
				throw ParseError("unknown column " + side->str());
			}
			if (!catalog.is_join_key(KeyRef {it->second, side->column})) {
				throw SchemaError("join condition on " + side->str() + ", which is not a join key");
			}
		}
		int lg = catalog.group_of(KeyRef {query.aliases.at(j.left.alias), j.left.column});
		int rg = catalog.group_of(KeyRef {query.aliases.at(j.right.alias), j.right.column});
		if (lg != rg) {
			throw SchemaError("join condition " + j.left.str() + " = " + j.right.str() +
			                  " links keys of different equivalence groups");
		}
	}
}

int JoinGraph::alias_index(std::string_view alias) const {
	auto it = std::lower_bound(aliases.begin(), aliases.end(), alias);
	if (it == aliases.end() || *it != alias) {
		return -1;
	}
	return static_cast<int>(it - aliases.begin());
}

int JoinGraph::key_index(const ColumnRef &key) const {
	auto it = std::lower_bound(keys.begin(), keys.end(), key);
	if (it == keys.end() || *it != key) {
		return -1;
	}
	return static_cast<int>(it - keys.begin());
}

std::vector<std::string> JoinGraph::alias_names(uint64_t mask) const {
	std::vector<std::string> out;
	for (size_t i = 0; i < aliases.size(); ++i) {
		if (mask >> i & 1) {
			out.push_back(aliases[i]);
		}
	}
	return out;
}

bool JoinGraph::connected(uint64_t mask) const {
	if (mask == 0) {
		return false;
	}
	uint64_t seen = mask & (~mask + 1);
	uint64_t frontier = seen;
	while (frontier) {
		uint64_t grow = 0;
		for (uint64_t f = frontier; f; f &= f - 1) {
			grow |= adjacency[std::countr_zero(f)];
		}
		grow &= mask & ~seen;
		seen |= grow;
		frontier = grow;
	}
	return seen == mask;
}

JoinGraph build_join_graph(const QueryIR &query, const Catalog &catalog) {
	validate_query(query, catalog);
	JoinGraph g;
	std::set<std::string> tables_seen;
	for (auto &[alias, table] : query.aliases) {
		g.aliases.push_back(alias);
		g.tables.push_back(table);
		if (!tables_seen.insert(table).second) {
			g.has_self_join = true;
		}
	}
	std::set<ColumnRef> keyset;
	for (auto &j : query.joins) {
		keyset.insert(j.left);
		keyset.insert(j.right);
	}
	g.keys.assign(keyset.begin(), keyset.end());
	std::vector<int> parent(g.keys.size());
	std::iota(parent.begin(), parent.end(), 0);
	auto find = [&](int x) {
		while (parent[x] != x) {
			x = parent[x] = parent[parent[x]];
		}
		return x;
	};
	g.adjacency.assign(g.aliases.size(), 0);
	for (auto &j : query.joins) {
		int l = g.key_index(j.left), r = g.key_index(j.right);
		g.edges.emplace_back(l, r);
		parent[find(l)] = find(r);
		int la = g.alias_index(j.left.alias), ra = g.alias_index(j.right.alias);
		if (la != ra) {
			g.adjacency[la] |= uint64_t {1} << ra;
			g.adjacency[ra] |= uint64_t {1} << la;
		}
	}
	// groups numbered by their smallest key node
	g.key_group.assign(g.keys.size(), -1);
	std::map<int, int> root_to_group;
	for (size_t k = 0; k < g.keys.size(); ++k) {
		int root = find(static_cast<int>(k));
		auto [it, fresh] = root_to_group.emplace(root, static_cast<int>(g.groups.size()));
		if (fresh) {
			g.groups.emplace_back();
			auto &key = g.keys[k];
			g.catalog_group.push_back(catalog.group_of(KeyRef {query.aliases.at(key.alias), key.column}));
		}
		g.key_group[k] = it->second;
		g.groups[it->second].push_back(static_cast<int>(k));
	}
	// bipartite alias-group graph: a cycle exists iff edges > nodes - components
	std::set<std::pair<int, int>> incidences;
	for (size_t k = 0; k < g.keys.size(); ++k) {
		incidences.emplace(g.alias_index(g.keys[k].alias), g.key_group[k]);
	}
	size_t nodes = g.aliases.size() + g.groups.size();
	std::vector<int> comp(nodes);
	std::iota(comp.begin(), comp.end(), 0);
	std::function<int(int)> croot = [&](int x) { return comp[x] == x ? x : comp[x] = croot(comp[x]); };
	bool cyclic = false;
	for (auto [a, grp] : incidences) {
		int x = croot(a), y = croot(static_cast<int>(g.aliases.size()) + grp);
		if (x == y) {
			cyclic = true;
		} else {
			comp[x] = y;
		}
	}
	// two keys of one alias in the same group also close a cycle through that alias
	g.is_cyclic = cyclic || incidences.size() < g.keys.size();
	return g;
}

SubPlanList enumerate_subplans(const JoinGraph &graph, size_t cap) {
	SubPlanList out;
	size_t m = graph.aliases.size();
	if (m == 0) {
		return out;
	}
	auto indices = [](uint64_t mask) {
		std::vector<int> idx;
		for (; mask; mask &= mask - 1) {
			idx.push_back(std::countr_zero(mask));
		}
		return idx;
	};
	// ascending bit order equals lexicographic alias order because aliases are sorted
	auto lex_less = [](uint64_t a, uint64_t b) {
		while (a && b) {
			int x = std::countr_zero(a), y = std::countr_zero(b);
			if (x != y) {
				return x < y;
			}
			a &= a - 1;
			b &= b - 1;
		}
		return b != 0 && a == 0;
	};
	std::vector<uint64_t> level;
	for (size_t i = 0; i < m; ++i) {
		level.push_back(uint64_t {1} << i);
	}
	while (!level.empty()) {
		for (auto mask : level) {
			if (out.plans.size() >= cap) {
				out.truncated = true;
				return out;
			}
			out.plans.push_back(SubPlan {mask, indices(mask)});
		}
		std::unordered_set<uint64_t> next;
		for (auto mask : level) {
			uint64_t frontier = 0;
			for (uint64_t f = mask; f; f &= f - 1) {
				frontier |= graph.adjacency[std::countr_zero(f)];
			}
			frontier &= ~mask;
			for (; frontier; frontier &= frontier - 1) {
				next.insert(mask | (frontier & (~frontier + 1)));
			}
		}
		level.assign(next.begin(), next.end());
		std::sort(level.begin(), level.end(), lex_less);
	}
	return out;
}

} // namespace fgcard
