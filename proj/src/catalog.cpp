#include "fgcard/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "fgcard/error.hpp"

namespace fgcard {

std::string_view to_string(ColumnKind kind) {
	switch (kind) {
	case ColumnKind::IntegerKey:
		return "integer-key";
	case ColumnKind::Integer:
		return "integer";
	case ColumnKind::Float:
		return "float";
	case ColumnKind::Categorical:
		return "categorical";
	case ColumnKind::Text:
		return "text";
	}
	return "unknown";
}

ColumnKind column_kind_from_string(std::string_view name) {
	if (name == "integer-key" || name == "key") {
		return ColumnKind::IntegerKey;
	}
	if (name == "integer" || name == "int") {
		return ColumnKind::Integer;
	}
	if (name == "float" || name == "real" || name == "double") {
		return ColumnKind::Float;
	}
	if (name == "categorical") {
		return ColumnKind::Categorical;
	}
	if (name == "text" || name == "string") {
		return ColumnKind::Text;
	}
	throw SchemaError("unknown column kind '" + std::string(name) + "'");
}

std::optional<size_t> TableDef::column_index(std::string_view column) const {
	for (size_t i = 0; i < columns.size(); ++i) {
		if (columns[i].name == column) {
			return i;
		}
	}
	return std::nullopt;
}

size_t TableDef::require_column(std::string_view column) const {
	auto idx = column_index(column);
	if (!idx) {
		throw SchemaError("unknown column " + name + "." + std::string(column));
	}
	return *idx;
}

KeyRef KeyRef::parse(std::string_view text) {
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
		throw SchemaError("expected table.column, got '" + std::string(text) + "'");
	}
	return KeyRef {std::string(trim(text.substr(0, dot))), std::string(trim(text.substr(dot + 1)))};
}

const TableDef *Catalog::find_table(std::string_view name) const {
	for (auto &t : tables) {
		if (t.name == name) {
			return &t;
		}
	}
	return nullptr;
}

const TableDef &Catalog::table(std::string_view name) const {
	auto *t = find_table(name);
	if (!t) {
		throw SchemaError("unknown table '" + std::string(name) + "'");
	}
	return *t;
}

TableDef &Catalog::table(std::string_view name) {
	return const_cast<TableDef &>(static_cast<const Catalog &>(*this).table(name));
}

bool Catalog::is_join_key(const KeyRef &key) const {
	return key_group_.count(key) > 0;
}

int Catalog::group_of(const KeyRef &key) const {
	auto it = key_group_.find(key);
	if (it == key_group_.end()) {
		throw SchemaError(key.str() + " is not a join key");
	}
	return it->second;
}

const EquivalenceGroup &Catalog::group(int id) const {
	if (id < 0 || static_cast<size_t>(id) >= groups.size()) {
		throw SchemaError("unknown group id " + std::to_string(id));
	}
	return groups[id];
}

std::vector<KeyRef> Catalog::join_keys(std::string_view table_name) const {
	std::vector<KeyRef> out;
	for (auto &col : table(table_name).columns) {
		if (col.kind == ColumnKind::IntegerKey) {
			out.push_back(KeyRef {std::string(table_name), col.name});
		}
	}
	return out;
}

std::vector<KeyRef> Catalog::all_join_keys() const {
	std::vector<KeyRef> out;
	for (auto &t : tables) {
		for (auto &col : t.columns) {
			if (col.kind == ColumnKind::IntegerKey) {
				out.push_back(KeyRef {t.name, col.name});
			}
		}
	}
	std::sort(out.begin(), out.end());
	return out;
}

namespace {

struct UnionFind {
	std::vector<size_t> parent;
	explicit UnionFind(size_t n) : parent(n) {
		std::iota(parent.begin(), parent.end(), size_t {0});
	}
	size_t find(size_t x) {
		while (parent[x] != x) {
			parent[x] = parent[parent[x]];
			x = parent[x];
		}
		return x;
	}
	void unite(size_t a, size_t b) {
		a = find(a);
		b = find(b);
		if (a != b) {
			parent[std::max(a, b)] = std::min(a, b);
		}
	}
};

} // namespace

void Catalog::finalize() {
	std::set<std::string> table_names;
	for (auto &t : tables) {
		if (!table_names.insert(t.name).second) {
			throw SchemaError("duplicate table '" + t.name + "'");
		}
		std::set<std::string> cols;
		for (auto &c : t.columns) {
			if (!cols.insert(c.name).second) {
				throw SchemaError("duplicate column '" + t.name + "." + c.name + "'");
			}
		}
	}
	auto keys = all_join_keys();
	std::map<KeyRef, size_t> index;
	for (size_t i = 0; i < keys.size(); ++i) {
		index[keys[i]] = i;
	}
	UnionFind uf(keys.size());
	for (auto &rel : relations) {
		for (auto *side : {&rel.left, &rel.right}) {
			auto *t = find_table(side->table);
			if (!t || !t->column_index(side->column)) {
				throw SchemaError("join relation references unknown column " + side->str());
			}
			if (!index.count(*side)) {
				throw SchemaError("join relation on non integer-key column " + side->str());
			}
		}
		uf.unite(index[rel.left], index[rel.right]);
	}
	// Keys are sorted, so the root of each component is its smallest member and components come out ordered by it.
	std::map<size_t, std::vector<KeyRef>> components;
	for (size_t i = 0; i < keys.size(); ++i) {
		components[uf.find(i)].push_back(keys[i]);
	}
	groups.clear();
	key_group_.clear();
	for (auto &[root, members] : components) {
		EquivalenceGroup g;
		g.id = static_cast<int>(groups.size());
		g.members = members;
		for (auto &m : members) {
			key_group_[m] = g.id;
		}
		groups.push_back(std::move(g));
	}
}

nlohmann::json Catalog::to_json() const {
	nlohmann::json doc = schema_descriptor(*this);
	nlohmann::json rows = nlohmann::json::object();
	for (auto &t : tables) {
		rows[t.name] = t.row_count;
	}
	doc["row_counts"] = rows;
	return doc;
}

Catalog Catalog::from_json(const nlohmann::json &doc) {
	Catalog cat = load_schema(doc);
	if (doc.contains("row_counts")) {
		for (auto &t : cat.tables) {
			t.row_count = doc["row_counts"].value(t.name, uint64_t {0});
		}
	}
	return cat;
}

Catalog load_schema(const nlohmann::json &descriptor) {
	Catalog cat;
	try {
		cat.version = descriptor.value("version", 1);
		for (auto &jt : descriptor.at("tables")) {
			TableDef t;
			t.name = jt.at("name").get<std::string>();
			for (auto &jc : jt.at("columns")) {
				ColumnDef c;
				c.name = jc.at("name").get<std::string>();
				c.kind = column_kind_from_string(jc.at("kind").get<std::string>());
				t.columns.push_back(std::move(c));
			}
			cat.tables.push_back(std::move(t));
		}
		if (descriptor.contains("joins")) {
			for (auto &jj : descriptor.at("joins")) {
				auto text = jj.get<std::string>();
				auto eq = text.find('=');
				if (eq == std::string::npos) {
					throw SchemaError("join relation must look like A.x=B.y, got '" + text + "'");
				}
				cat.relations.push_back(JoinRelation {KeyRef::parse(std::string_view(text).substr(0, eq)),
				                                      KeyRef::parse(std::string_view(text).substr(eq + 1))});
			}
		}
	} catch (const nlohmann::json::exception &e) {
		throw SchemaError(std::string("malformed schema descriptor: ") + e.what());
	}
	cat.finalize();
	return cat;
}

Catalog load_schema_file(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw SchemaError("cannot open schema file " + path.string());
	}
	nlohmann::json doc;
	try {
		in >> doc;
	} catch (const nlohmann::json::exception &e) {
		throw SchemaError("schema file " + path.string() + " is not valid JSON: " + e.what());
	}
	return load_schema(doc);
}

nlohmann::json schema_descriptor(const Catalog &catalog) {
	nlohmann::json doc;
	doc["version"] = catalog.version;
	doc["tables"] = nlohmann::json::array();
	for (auto &t : catalog.tables) {
		nlohmann::json jt;
		jt["name"] = t.name;
		jt["columns"] = nlohmann::json::array();
		for (auto &c : t.columns) {
			jt["columns"].push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}});
		}
		doc["tables"].push_back(std::move(jt));
	}
	doc["joins"] = nlohmann::json::array();
	for (auto &r : catalog.relations) {
		doc["joins"].push_back(r.left.str() + "=" + r.right.str());
	}
	return doc;
}

} // namespace fgcard
