#include "fgcard/predicate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "fgcard/error.hpp"

namespace fgcard {

std::string_view to_string(CompareOp op) {
	switch (op) {
	case CompareOp::Eq:
		return "=";
	case CompareOp::Ne:
		return "<>";
	case CompareOp::Lt:
		return "<";
	case CompareOp::Le:
		return "<=";
	case CompareOp::Gt:
		return ">";
	case CompareOp::Ge:
		return ">=";
	case CompareOp::In:
		return "IN";
	case CompareOp::Like:
		return "LIKE";
	}
	return "?";
}

Predicate Predicate::compare(std::string column, CompareOp op, Literal value) {
	Predicate p;
	p.kind = Kind::Atom;
	p.column = std::move(column);
	p.op = op;
	p.literals.push_back(std::move(value));
	return p;
}

Predicate Predicate::in_list(std::string column, std::vector<Literal> values) {
	if (values.empty() || values.size() > MAX_IN_LIST) {
		throw ParseError("IN list must hold between 1 and " + std::to_string(MAX_IN_LIST) + " literals");
	}
	Predicate p;
	p.kind = Kind::Atom;
	p.column = std::move(column);
	p.op = CompareOp::In;
	p.literals = std::move(values);
	return p;
}

Predicate Predicate::like(std::string column, std::string pattern) {
	return compare(std::move(column), CompareOp::Like, Literal {std::move(pattern)});
}

Predicate Predicate::all_of(std::vector<Predicate> children) {
	if (children.size() == 1) {
		return std::move(children.front());
	}
	Predicate p;
	p.kind = Kind::And;
	p.children = std::move(children);
	return p;
}

Predicate Predicate::any_of(std::vector<Predicate> children) {
	if (children.size() == 1) {
		return std::move(children.front());
	}
	Predicate p;
	p.kind = Kind::Or;
	p.children = std::move(children);
	return p;
}

Predicate Predicate::negate(Predicate child) {
	Predicate p;
	p.kind = Kind::Not;
	p.children.push_back(std::move(child));
	return p;
}

std::string literal_to_sql(const Literal &lit) {
	if (auto *i = std::get_if<int64_t>(&lit)) {
		return std::to_string(*i);
	}
	if (auto *d = std::get_if<double>(&lit)) {
		char buf[64];
		auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), *d);
		std::string text(buf, ptr);
		// keep a decimal marker so the literal re-parses as a double
		if (text.find_first_of(".eEni") == std::string::npos) {
			text += ".0";
		}
		return text;
	}
	std::string out = "'";
	for (char ch : std::get<std::string>(lit)) {
		if (ch == '\'') {
			out += "''";
		} else {
			out.push_back(ch);
		}
	}
	return out + "'";
}

std::string Predicate::to_sql(const std::string &alias) const {
	auto col = alias.empty() ? column : alias + "." + column;
	switch (kind) {
	case Kind::Atom:
		if (op == CompareOp::In) {
			std::string out = col + " IN (";
			for (size_t i = 0; i < literals.size(); ++i) {
				out += (i ? ", " : "") + literal_to_sql(literals[i]);
			}
			return out + ")";
		}
		return col + " " + std::string(fgcard::to_string(op)) + " " + literal_to_sql(literals.at(0));
	case Kind::And:
	case Kind::Or: {
		std::string out = "(";
		for (size_t i = 0; i < children.size(); ++i) {
			if (i) {
				out += kind == Kind::And ? " AND " : " OR ";
			}
			out += children[i].to_sql(alias);
		}
		return out + ")";
	}
	case Kind::Not:
		return "NOT " + children.at(0).to_sql(alias);
	}
	return "";
}

namespace {

nlohmann::json literal_to_json(const Literal &lit) {
	if (auto *i = std::get_if<int64_t>(&lit)) {
		return *i;
	}
	if (auto *d = std::get_if<double>(&lit)) {
		return *d;
	}
	return std::get<std::string>(lit);
}

Literal literal_from_json(const nlohmann::json &j) {
	if (j.is_number_integer()) {
		return j.get<int64_t>();
	}
	if (j.is_number()) {
		return j.get<double>();
	}
	if (j.is_string()) {
		return j.get<std::string>();
	}
	throw ParseError("unsupported literal in predicate JSON: " + j.dump());
}

CompareOp op_from_string(const std::string &op) {
	if (op == "=" || op == "==") {
		return CompareOp::Eq;
	}
	if (op == "<>" || op == "!=") {
		return CompareOp::Ne;
	}
	if (op == "<") {
		return CompareOp::Lt;
	}
	if (op == "<=") {
		return CompareOp::Le;
	}
	if (op == ">") {
		return CompareOp::Gt;
	}
	if (op == ">=") {
		return CompareOp::Ge;
	}
	if (op == "in" || op == "IN") {
		return CompareOp::In;
	}
	if (op == "like" || op == "LIKE") {
		return CompareOp::Like;
	}
	throw ParseError("unknown predicate operator '" + op + "'");
}

} // namespace

nlohmann::json Predicate::to_json() const {
	switch (kind) {
	case Kind::Atom: {
		nlohmann::json j {{"op", std::string(fgcard::to_string(op))}, {"col", column}};
		if (op == CompareOp::In) {
			j["values"] = nlohmann::json::array();
			for (auto &l : literals) {
				j["values"].push_back(literal_to_json(l));
			}
		} else {
			j["value"] = literal_to_json(literals.at(0));
		}
		return j;
	}
	case Kind::And:
	case Kind::Or: {
		nlohmann::json j {{"op", kind == Kind::And ? "and" : "or"}, {"args", nlohmann::json::array()}};
		for (auto &c : children) {
			j["args"].push_back(c.to_json());
		}
		return j;
	}
	case Kind::Not:
		return nlohmann::json {{"op", "not"}, {"arg", children.at(0).to_json()}};
	}
	return {};
}

Predicate Predicate::from_json(const nlohmann::json &doc) {
	try {
		auto op = doc.at("op").get<std::string>();
		if (op == "and" || op == "or") {
			std::vector<Predicate> kids;
			for (auto &a : doc.at("args")) {
				kids.push_back(from_json(a));
			}
			if (kids.empty()) {
				throw ParseError("empty " + op + " in predicate JSON");
			}
			return op == "and" ? all_of(std::move(kids)) : any_of(std::move(kids));
		}
		if (op == "not") {
			return negate(from_json(doc.at("arg")));
		}
		auto cop = op_from_string(op);
		auto col = doc.at("col").get<std::string>();
		if (cop == CompareOp::In) {
			std::vector<Literal> values;
			for (auto &v : doc.at("values")) {
				values.push_back(literal_from_json(v));
			}
			return in_list(std::move(col), std::move(values));
		}
		return compare(std::move(col), cop, literal_from_json(doc.at("value")));
	} catch (const nlohmann::json::exception &e) {
		throw ParseError(std::string("malformed predicate JSON: ") + e.what());
	}
}

std::vector<std::string> Predicate::columns() const {
	std::set<std::string> cols;
	std::vector<const Predicate *> stack {this};
	while (!stack.empty()) {
		auto *p = stack.back();
		stack.pop_back();
		if (p->kind == Kind::Atom) {
			cols.insert(p->column);
		}
		for (auto &c : p->children) {
			stack.push_back(&c);
		}
	}
	return {cols.begin(), cols.end()};
}

bool Predicate::contains_like() const {
	if (kind == Kind::Atom) {
		return op == CompareOp::Like;
	}
	return std::any_of(children.begin(), children.end(), [](const Predicate &c) { return c.contains_like(); });
}

bool like_match(std::string_view text, std::string_view pattern) {
	// iterative matcher with single-star backtracking
	size_t t = 0, p = 0;
	size_t star = std::string_view::npos, mark = 0;
	while (t < text.size()) {
		if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == text[t])) {
			++t;
			++p;
		} else if (p < pattern.size() && pattern[p] == '%') {
			star = p++;
			mark = t;
		} else if (star != std::string_view::npos) {
			p = star + 1;
			t = ++mark;
		} else {
			return false;
		}
	}
	while (p < pattern.size() && pattern[p] == '%') {
		++p;
	}
	return p == pattern.size();
}

BoundPredicate::BoundPredicate(const Predicate &predicate, const TableDef &def) {
	root_ = compile(predicate, def);
}

size_t BoundPredicate::compile(const Predicate &p, const TableDef &def) {
	Node node;
	node.kind = p.kind;
	if (p.kind == Predicate::Kind::Atom) {
		auto idx = def.column_index(p.column);
		if (!idx) {
			throw ParseError("unknown column " + def.name + "." + p.column);
		}
		node.column = *idx;
		node.op = p.op;
		node.column_kind = def.columns[*idx].kind;
		bool string_column = node.column_kind == ColumnKind::Categorical || node.column_kind == ColumnKind::Text;
		if (p.op == CompareOp::Like && node.column_kind != ColumnKind::Text) {
			throw ParseError("LIKE applies only to text columns, " + def.name + "." + p.column + " is " +
			                 std::string(to_string(node.column_kind)));
		}
		for (auto &lit : p.literals) {
			if (string_column) {
				auto *s = std::get_if<std::string>(&lit);
				if (!s) {
					throw ParseError("type mismatch: " + def.name + "." + p.column + " compared with a number");
				}
				node.strings.push_back(*s);
			} else {
				if (std::holds_alternative<std::string>(lit)) {
					throw ParseError("type mismatch: " + def.name + "." + p.column + " compared with a string");
				}
				node.numbers.push_back(std::holds_alternative<int64_t>(lit) ? static_cast<double>(std::get<int64_t>(lit))
				                                                             : std::get<double>(lit));
			}
		}
		if (p.op == CompareOp::In) {
			std::sort(node.numbers.begin(), node.numbers.end());
			std::sort(node.strings.begin(), node.strings.end());
		}
	} else {
		for (auto &c : p.children) {
			node.children.push_back(compile(c, def));
		}
	}
	nodes_.push_back(std::move(node));
	return nodes_.size() - 1;
}

namespace {

template <class T>
bool compare_values(CompareOp op, const T &a, const T &b) {
	switch (op) {
	case CompareOp::Eq:
		return a == b;
	case CompareOp::Ne:
		return a != b;
	case CompareOp::Lt:
		return a < b;
	case CompareOp::Le:
		return a <= b;
	case CompareOp::Gt:
		return a > b;
	case CompareOp::Ge:
		return a >= b;
	default:
		return false;
	}
}

} // namespace

bool BoundPredicate::eval(const Table &table, size_t row) const {
	return eval_node(root_, table, row);
}

bool BoundPredicate::eval_node(size_t idx, const Table &table, size_t row) const {
	auto &n = nodes_[idx];
	switch (n.kind) {
	case Predicate::Kind::And:
		for (auto c : n.children) {
			if (!eval_node(c, table, row)) {
				return false;
			}
		}
		return true;
	case Predicate::Kind::Or:
		for (auto c : n.children) {
			if (eval_node(c, table, row)) {
				return true;
			}
		}
		return false;
	case Predicate::Kind::Not:
		return !eval_node(n.children.front(), table, row);
	case Predicate::Kind::Atom:
		break;
	}
	auto &col = table.columns[n.column];
	if (col.is_null(row)) {
		return false;
	}
	if (col.is_string()) {
		auto &s = col.strs[row];
		if (n.op == CompareOp::In) {
			return std::binary_search(n.strings.begin(), n.strings.end(), s);
		}
		if (n.op == CompareOp::Like) {
			return like_match(s, n.strings.front());
		}
		return compare_values(n.op, s, n.strings.front());
	}
	double v = col.is_integral() ? static_cast<double>(col.ints[row]) : col.reals[row];
	if (n.op == CompareOp::In) {
		return std::binary_search(n.numbers.begin(), n.numbers.end(), v);
	}
	return compare_values(n.op, v, n.numbers.front());
}

bool eval_predicate(const Table &table, size_t row, const Predicate &predicate) {
	return BoundPredicate(predicate, table.def).eval(table, row);
}

} // namespace fgcard
