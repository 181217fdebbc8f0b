#include "fgcard/table.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "fgcard/csv.hpp"
#include "fgcard/error.hpp"

namespace fgcard {

void Column::reserve(size_t n) {
	valid.reserve(n);
	if (is_integral()) {
		ints.reserve(n);
	} else if (kind == ColumnKind::Float) {
		reals.reserve(n);
	} else {
		strs.reserve(n);
	}
}

void Column::push_null() {
	valid.push_back(0);
	if (is_integral()) {
		ints.push_back(0);
	} else if (kind == ColumnKind::Float) {
		reals.push_back(0.0);
	} else {
		strs.emplace_back();
	}
}

void Column::push_from(const Column &other, size_t row) {
	valid.push_back(other.valid[row]);
	if (is_integral()) {
		ints.push_back(other.ints[row]);
	} else if (kind == ColumnKind::Float) {
		reals.push_back(other.reals[row]);
	} else {
		strs.push_back(other.strs[row]);
	}
}

bool Column::equal_at(size_t row, const Column &other, size_t other_row) const {
	if (valid[row] != other.valid[other_row]) {
		return false;
	}
	if (!valid[row]) {
		return true;
	}
	if (is_integral()) {
		return ints[row] == other.ints[other_row];
	}
	if (kind == ColumnKind::Float) {
		return reals[row] == other.reals[other_row];
	}
	return strs[row] == other.strs[other_row];
}

void Table::append_row_from(const Table &other, size_t row) {
	for (size_t c = 0; c < columns.size(); ++c) {
		columns[c].push_from(other.columns[c], row);
	}
}

Table Table::empty_like(const TableDef &def) {
	Table t;
	t.def = def;
	t.def.row_count = 0;
	for (auto &c : def.columns) {
		Column col;
		col.kind = c.kind;
		t.columns.push_back(std::move(col));
	}
	return t;
}

Table Table::select_rows(const std::vector<size_t> &rows) const {
	Table out = empty_like(def);
	for (auto &c : out.columns) {
		c.reserve(rows.size());
	}
	for (auto r : rows) {
		out.append_row_from(*this, r);
	}
	out.def.row_count = rows.size();
	return out;
}

uint64_t Table::row_hash(size_t row) const {
	uint64_t h = 1469598103934665603ull;
	auto mix = [&](uint64_t v) {
		h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
	};
	for (auto &c : columns) {
		if (c.is_null(row)) {
			mix(0xabcdef);
		} else if (c.is_integral()) {
			mix(std::hash<int64_t> {}(c.ints[row]));
		} else if (c.kind == ColumnKind::Float) {
			mix(std::hash<double> {}(c.reals[row]));
		} else {
			mix(std::hash<std::string> {}(c.strs[row]));
		}
	}
	return h;
}

bool Table::rows_equal(size_t row, const Table &other, size_t other_row) const {
	for (size_t c = 0; c < columns.size(); ++c) {
		if (!columns[c].equal_at(row, other.columns[c], other_row)) {
			return false;
		}
	}
	return true;
}

void apply_row_delta(Table &table, const Table &inserted, const Table &deleted) {
	std::vector<uint8_t> removed(table.num_rows(), 0);
	if (deleted.num_rows() > 0) {
		std::unordered_multimap<uint64_t, size_t> index;
		index.reserve(table.num_rows());
		for (size_t r = 0; r < table.num_rows(); ++r) {
			index.emplace(table.row_hash(r), r);
		}
		for (size_t d = 0; d < deleted.num_rows(); ++d) {
			auto [lo, hi] = index.equal_range(deleted.row_hash(d));
			bool found = false;
			for (auto it = lo; it != hi; ++it) {
				if (table.rows_equal(it->second, deleted, d)) {
					removed[it->second] = 1;
					index.erase(it);
					found = true;
					break;
				}
			}
			if (!found) {
				throw DataError("table " + table.def.name + ": deleted row " + std::to_string(d + 1) +
				                " does not exist");
			}
		}
	}
	Table out = Table::empty_like(table.def);
	for (auto &c : out.columns) {
		c.reserve(table.num_rows() + inserted.num_rows());
	}
	for (size_t r = 0; r < table.num_rows(); ++r) {
		if (!removed[r]) {
			out.append_row_from(table, r);
		}
	}
	for (size_t r = 0; r < inserted.num_rows(); ++r) {
		out.append_row_from(inserted, r);
	}
	out.def.row_count = out.num_rows();
	table = std::move(out);
}

void ValueCountStore::add(int64_t value, int64_t delta) {
	auto it = counts_.find(value);
	int64_t current = it == counts_.end() ? 0 : it->second;
	int64_t next = current + delta;
	if (next < 0) {
		throw DataError("value " + std::to_string(value) + " would drop below zero count");
	}
	if (next == 0) {
		if (it != counts_.end()) {
			counts_.erase(it);
		}
	} else if (it == counts_.end()) {
		counts_.emplace(value, next);
	} else {
		it->second = next;
	}
	total_ += delta;
}

int64_t ValueCountStore::count(int64_t value) const {
	auto it = counts_.find(value);
	return it == counts_.end() ? 0 : it->second;
}

ValueCountStore build_value_counts(const Column &column) {
	ValueCountStore store;
	for (size_t r = 0; r < column.size(); ++r) {
		if (!column.is_null(r)) {
			store.add(column.ints[r], 1);
		}
	}
	return store;
}

namespace {

template <class T>
bool parse_number(const std::string &text, T &out) {
	const char *begin = text.data();
	const char *end = text.data() + text.size();
	if (begin != end && *begin == '+') {
		++begin;
	}
	auto [ptr, ec] = std::from_chars(begin, end, out);
	return ec == std::errc() && ptr == end && begin != end;
}

void push_cell(Column &col, const CsvField &field, const std::string &where) {
	if (field.text.empty() && !field.quoted) {
		col.push_null();
		return;
	}
	switch (col.kind) {
	case ColumnKind::IntegerKey:
	case ColumnKind::Integer: {
		int64_t v = 0;
		if (!parse_number(field.text, v)) {
			throw DataError(where + ": expected an integer, got '" + field.text + "'");
		}
		col.ints.push_back(v);
		break;
	}
	case ColumnKind::Float: {
		double v = 0;
		if (!parse_number(field.text, v)) {
			throw DataError(where + ": expected a number, got '" + field.text + "'");
		}
		col.reals.push_back(v);
		break;
	}
	case ColumnKind::Categorical:
	case ColumnKind::Text:
		col.strs.push_back(field.text);
		break;
	}
	col.valid.push_back(1);
}

} // namespace

IngestResult ingest_table(std::istream &csv, const TableDef &def) {
	CsvReader reader(csv);
	std::vector<CsvField> fields;
	IngestResult result;
	result.table = Table::empty_like(def);
	if (!reader.next(fields)) {
		throw DataError("table " + def.name + ": missing CSV header row");
	}
	// header position -> column index
	std::vector<size_t> mapping;
	std::set<std::string> seen;
	for (auto &f : fields) {
		auto idx = def.column_index(f.text);
		if (!idx) {
			throw DataError("table " + def.name + ": unknown column '" + f.text + "' in CSV header");
		}
		if (!seen.insert(f.text).second) {
			throw DataError("table " + def.name + ": duplicate column '" + f.text + "' in CSV header");
		}
		mapping.push_back(*idx);
	}
	if (mapping.size() != def.columns.size()) {
		throw DataError("table " + def.name + ": CSV header does not list every column");
	}
	auto &cols = result.table.columns;
	while (reader.next(fields)) {
		if (fields.size() == 1 && fields[0].text.empty() && !fields[0].quoted) {
			continue; // blank line
		}
		if (fields.size() != mapping.size()) {
			throw DataError("table " + def.name + ", line " + std::to_string(reader.line()) + ": expected " +
			                std::to_string(mapping.size()) + " fields, got " + std::to_string(fields.size()));
		}
		for (size_t i = 0; i < fields.size(); ++i) {
			auto &col = cols[mapping[i]];
			push_cell(col, fields[i],
			          "table " + def.name + ", line " + std::to_string(reader.line()) + ", column " +
			              def.columns[mapping[i]].name);
		}
	}
	result.table.def.row_count = result.table.num_rows();
	for (size_t c = 0; c < def.columns.size(); ++c) {
		if (def.columns[c].kind == ColumnKind::IntegerKey) {
			auto store = build_value_counts(cols[c]);
			size_t non_null = 0;
			for (auto v : cols[c].valid) {
				non_null += v;
			}
			if (static_cast<size_t>(store.total()) != non_null) {
				throw DataError("internal: value counts of " + def.name + "." + def.columns[c].name +
				                " do not add up to the non-null row count");
			}
			result.stores.emplace(def.columns[c].name, std::move(store));
		}
	}
	return result;
}

IngestResult ingest_table_file(const std::filesystem::path &path, const TableDef &def) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw DataError("cannot open " + path.string());
	}
	return ingest_table(in, def);
}

void write_table_csv(std::ostream &out, const Table &table) {
	auto &def = table.def;
	for (size_t c = 0; c < def.columns.size(); ++c) {
		out << (c ? "," : "") << csv_escape(def.columns[c].name);
	}
	out << '\n';
	char buf[64];
	for (size_t r = 0; r < table.num_rows(); ++r) {
		for (size_t c = 0; c < table.columns.size(); ++c) {
			if (c) {
				out << ',';
			}
			auto &col = table.columns[c];
			if (col.is_null(r)) {
				continue;
			}
			if (col.is_integral()) {
				out << col.ints[r];
			} else if (col.kind == ColumnKind::Float) {
				auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), col.reals[r]);
				out.write(buf, ptr - buf);
			} else {
				out << csv_escape(col.strs[r]);
			}
		}
		out << '\n';
	}
}

const Table &Database::table(std::string_view name) const {
	return tables[table_index(name)];
}

size_t Database::table_index(std::string_view name) const {
	for (size_t i = 0; i < tables.size(); ++i) {
		if (tables[i].def.name == name) {
			return i;
		}
	}
	throw SchemaError("unknown table '" + std::string(name) + "'");
}

Database make_database(Catalog catalog, std::vector<Table> tables) {
	Database db;
	db.catalog = std::move(catalog);
	for (auto &t : db.catalog.tables) {
		auto it = std::find_if(tables.begin(), tables.end(), [&](const Table &x) { return x.def.name == t.name; });
		if (it == tables.end()) {
			throw DataError("no data for table " + t.name);
		}
		Table table = std::move(*it);
		table.def.columns = t.columns;
		t.row_count = table.num_rows();
		table.def.row_count = t.row_count;
		for (size_t c = 0; c < t.columns.size(); ++c) {
			if (t.columns[c].kind == ColumnKind::IntegerKey) {
				db.stores[KeyRef {t.name, t.columns[c].name}] = build_value_counts(table.columns[c]);
			}
		}
		db.tables.push_back(std::move(table));
	}
	return db;
}

Database load_database(Catalog catalog, const std::filesystem::path &data_dir) {
	Database db;
	db.catalog = std::move(catalog);
	for (auto &t : db.catalog.tables) {
		auto result = ingest_table_file(data_dir / (t.name + ".csv"), t);
		t.row_count = result.table.num_rows();
		for (auto &[col, store] : result.stores) {
			db.stores[KeyRef {t.name, col}] = std::move(store);
		}
		db.tables.push_back(std::move(result.table));
	}
	return db;
}

} // namespace fgcard
