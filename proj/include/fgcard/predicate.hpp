#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fgcard/table.hpp"
#include "json.hpp"

namespace fgcard {

using Literal = std::variant<int64_t, double, std::string>;

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge, In, Like };

std::string_view to_string(CompareOp op);

//! Maximum number of literals in one IN list.
inline constexpr size_t MAX_IN_LIST = 1024;

//! Boolean filter over the columns of a single table (alias).
struct Predicate {
	enum class Kind { Atom, And, Or, Not };

	Kind kind = Kind::Atom;
	std::string column;
	CompareOp op = CompareOp::Eq;
	//! One literal for comparisons and LIKE, the list for IN.
	std::vector<Literal> literals;
	std::vector<Predicate> children;

	static Predicate compare(std::string column, CompareOp op, Literal value);
	static Predicate in_list(std::string column, std::vector<Literal> values);
	static Predicate like(std::string column, std::string pattern);
	static Predicate all_of(std::vector<Predicate> children);
	static Predicate any_of(std::vector<Predicate> children);
	static Predicate negate(Predicate child);

	bool operator==(const Predicate &) const = default;

	//! SQL rendering with columns qualified by `alias` (unqualified when empty).
	std::string to_sql(const std::string &alias = "") const;
	nlohmann::json to_json() const;
	static Predicate from_json(const nlohmann::json &doc);

	//! Columns referenced anywhere in the tree (sorted, unique).
	std::vector<std::string> columns() const;
	bool contains_like() const;
};

std::string literal_to_sql(const Literal &lit);

//! A predicate resolved against a table layout; type-checked once, evaluated per row.
class BoundPredicate {
public:
	//! Throws ParseError on unknown columns or column/literal type mismatches.
	BoundPredicate(const Predicate &predicate, const TableDef &def);

	bool eval(const Table &table, size_t row) const;

private:
	struct Node {
		Predicate::Kind kind;
		size_t column = 0;
		CompareOp op = CompareOp::Eq;
		ColumnKind column_kind = ColumnKind::Integer;
		std::vector<double> numbers;
		std::vector<std::string> strings;
		std::vector<size_t> children;
	};
	size_t compile(const Predicate &p, const TableDef &def);
	bool eval_node(size_t idx, const Table &table, size_t row) const;

	std::vector<Node> nodes_;
	size_t root_ = 0;
};

//! Evaluates a predicate on one row; nulls never satisfy a comparison.
bool eval_predicate(const Table &table, size_t row, const Predicate &predicate);

//! SQL LIKE: '%' matches any sequence, '_' exactly one character; case-sensitive.
bool like_match(std::string_view text, std::string_view pattern);

} // namespace fgcard
