#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fgcard/catalog.hpp"

namespace fgcard {

//! Columnar storage for one column. Only the vector matching `kind` is populated.
struct Column {
	ColumnKind kind = ColumnKind::Integer;
	std::vector<int64_t> ints;
	std::vector<double> reals;
	std::vector<std::string> strs;
	std::vector<uint8_t> valid;

	size_t size() const {
		return valid.size();
	}
	bool is_null(size_t row) const {
		return valid[row] == 0;
	}
	bool is_integral() const {
		return kind == ColumnKind::IntegerKey || kind == ColumnKind::Integer;
	}
	bool is_string() const {
		return kind == ColumnKind::Categorical || kind == ColumnKind::Text;
	}
	void reserve(size_t n);
	void push_null();
	//! Appends row `row` of `other` (same kind).
	void push_from(const Column &other, size_t row);
	bool equal_at(size_t row, const Column &other, size_t other_row) const;
};

struct Table {
	TableDef def;
	std::vector<Column> columns;

	size_t num_rows() const {
		return columns.empty() ? 0 : columns.front().size();
	}
	const Column &column(std::string_view name) const {
		return columns[def.require_column(name)];
	}
	void append_row_from(const Table &other, size_t row);

	static Table empty_like(const TableDef &def);
	//! Rows at the given indices, in that order.
	Table select_rows(const std::vector<size_t> &rows) const;
	uint64_t row_hash(size_t row) const;
	bool rows_equal(size_t row, const Table &other, size_t other_row) const;
};

//! Removes one matching row per row of `deleted` (matched on every column), then appends `inserted`. Throws
//! DataError and leaves the table unchanged if a deleted row does not exist.
void apply_row_delta(Table &table, const Table &inserted, const Table &deleted);

//! Exact value -> count map of one join key. Nulls are never stored.
class ValueCountStore {
public:
	void add(int64_t value, int64_t delta);
	int64_t count(int64_t value) const;
	size_t ndv() const {
		return counts_.size();
	}
	int64_t total() const {
		return total_;
	}
	const std::map<int64_t, int64_t> &counts() const {
		return counts_;
	}
	bool operator==(const ValueCountStore &) const = default;

private:
	std::map<int64_t, int64_t> counts_;
	int64_t total_ = 0;
};

ValueCountStore build_value_counts(const Column &column);

struct IngestResult {
	Table table;
	//! One store per integer-key column, by column name.
	std::map<std::string, ValueCountStore> stores;
};

//! Parses RFC-4180 CSV (header row required, empty unquoted cell = null) into a table.
IngestResult ingest_table(std::istream &csv, const TableDef &def);
IngestResult ingest_table_file(const std::filesystem::path &path, const TableDef &def);

//! Writes a table as CSV with a header row.
void write_table_csv(std::ostream &out, const Table &table);

//! Loaded data for a whole catalog.
struct Database {
	Catalog catalog;
	std::vector<Table> tables;
	std::map<KeyRef, ValueCountStore> stores;

	const Table &table(std::string_view name) const;
	size_t table_index(std::string_view name) const;
};

//! Reads <data_dir>/<table>.csv for every table of the catalog and fills row counts.
Database load_database(Catalog catalog, const std::filesystem::path &data_dir);
//! Builds a database from in-memory tables (row counts and stores are recomputed).
Database make_database(Catalog catalog, std::vector<Table> tables);

} // namespace fgcard
