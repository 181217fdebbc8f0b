#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fgcard {

enum class ColumnKind { IntegerKey, Integer, Float, Categorical, Text };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view name);

struct ColumnDef {
	std::string name;
	ColumnKind kind = ColumnKind::Integer;
};

struct TableDef {
	std::string name;
	std::vector<ColumnDef> columns;
	uint64_t row_count = 0;

	std::optional<size_t> column_index(std::string_view column) const;
	//! Throws SchemaError when the column does not exist.
	size_t require_column(std::string_view column) const;
};

//! A (table, column) pair naming one join key.
struct KeyRef {
	std::string table;
	std::string column;

	auto operator<=>(const KeyRef &) const = default;
	bool operator==(const KeyRef &) const = default;

	std::string str() const {
		return table + "." + column;
	}
	//! Parses "table.column".
	static KeyRef parse(std::string_view text);
};

struct EquivalenceGroup {
	int id = 0;
	//! Sorted ascending.
	std::vector<KeyRef> members;
};

struct JoinRelation {
	KeyRef left;
	KeyRef right;
};

//! Schema of the database: tables, the declared join relations and the equivalence groups of join keys derived
//! from them. Immutable once built by load_schema.
class Catalog {
public:
	std::vector<TableDef> tables;
	std::vector<JoinRelation> relations;
	std::vector<EquivalenceGroup> groups;
	int version = 1;

	const TableDef *find_table(std::string_view name) const;
	const TableDef &table(std::string_view name) const;
	TableDef &table(std::string_view name);

	bool is_join_key(const KeyRef &key) const;
	//! Group id of a join key; throws SchemaError for anything that is not an integer-key column.
	int group_of(const KeyRef &key) const;
	const EquivalenceGroup &group(int id) const;
	//! Join keys of one table in column order.
	std::vector<KeyRef> join_keys(std::string_view table) const;
	std::vector<KeyRef> all_join_keys() const;

	nlohmann::json to_json() const;
	static Catalog from_json(const nlohmann::json &doc);

	//! Recomputes groups from tables + relations and rebuilds lookup indexes.
	void finalize();

private:
	std::map<KeyRef, int> key_group_;
};

//! Builds a catalog from a schema descriptor {version, tables:[{name, columns:[{name, kind}]}], joins:["A.id=B.Aid"]}.
Catalog load_schema(const nlohmann::json &descriptor);
Catalog load_schema_file(const std::filesystem::path &path);
nlohmann::json schema_descriptor(const Catalog &catalog);

} // namespace fgcard
