#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fgcard/catalog.hpp"
#include "fgcard/predicate.hpp"
#include "json.hpp"

namespace fgcard {

//! alias.column
struct ColumnRef {
	std::string alias;
	std::string column;

	auto operator<=>(const ColumnRef &) const = default;
	bool operator==(const ColumnRef &) const = default;
	std::string str() const {
		return alias + "." + column;
	}
};

//! Equi-join condition; normalized so that left < right.
struct JoinCondition {
	ColumnRef left;
	ColumnRef right;

	auto operator<=>(const JoinCondition &) const = default;
	bool operator==(const JoinCondition &) const = default;
};

//! COUNT(*) query over aliased tables with equi-joins and per-alias filters.
struct QueryIR {
	std::map<std::string, std::string> aliases; //!< alias -> table
	std::vector<JoinCondition> joins;
	std::map<std::string, Predicate> filters; //!< alias -> filter

	bool operator==(const QueryIR &) const = default;

	//! Sorts and dedups join conditions and flattens/sorts AND and OR children of filters.
	void normalize();
	std::string to_sql() const;
	nlohmann::json to_json() const;

	//! Query induced by a subset of aliases (joins with both sides inside, their filters).
	QueryIR restrict_to(const std::vector<std::string> &subset) const;
};

//! Parses the supported SQL subset. Throws ParseError (with line/column) on syntax and name-resolution errors.
QueryIR parse_sql(std::string_view text, const Catalog &catalog);
//! Parses the JSON form {aliases:{alias:table}, joins:["x.a = y.b"|[l,r]], filters:{alias: predicate|SQL}}.
QueryIR query_from_json(const nlohmann::json &doc, const Catalog &catalog);
//! Dispatches on the first non-blank character: '{' selects JSON, anything else SQL.
QueryIR parse_query(std::string_view text, const Catalog &catalog);
//! Checks aliases, columns, filter types and join keys against the catalog; throws ParseError or SchemaError.
void validate_query(const QueryIR &query, const Catalog &catalog);

inline constexpr size_t MAX_ALIASES = 64;

struct JoinGraph {
	std::vector<std::string> aliases; //!< sorted; alias index = position
	std::vector<std::string> tables;  //!< table of each alias
	std::vector<ColumnRef> keys;      //!< join-key nodes, sorted
	std::vector<std::pair<int, int>> edges;
	std::vector<std::vector<int>> groups; //!< per-query equivalent key groups (key node indices)
	std::vector<int> key_group;           //!< key node -> per-query group
	std::vector<int> catalog_group;       //!< per-query group -> catalog group id
	std::vector<uint64_t> adjacency;      //!< alias index -> neighbouring aliases (bitmask)
	bool is_cyclic = false;
	bool has_self_join = false;

	int alias_index(std::string_view alias) const;
	int key_index(const ColumnRef &key) const;
	std::vector<std::string> alias_names(uint64_t mask) const;
	bool connected(uint64_t mask) const;
};

//! Throws SchemaError when a condition joins keys of different catalog groups or non-key columns.
JoinGraph build_join_graph(const QueryIR &query, const Catalog &catalog);

struct SubPlan {
	uint64_t mask = 0;
	std::vector<int> aliases; //!< ascending alias indices
};

struct SubPlanList {
	std::vector<SubPlan> plans;
	bool truncated = false;
};

inline constexpr size_t DEFAULT_SUBPLAN_CAP = 16384;

//! Connected alias subsets ordered by size and then by alias tuple, at most `cap` of them (singletons included).
SubPlanList enumerate_subplans(const JoinGraph &graph, size_t cap = DEFAULT_SUBPLAN_CAP);

} // namespace fgcard
