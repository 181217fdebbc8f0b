#include "fgcard/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fgcard/error.hpp"
#include "fgcard/predicate.hpp"

namespace fgcard {

namespace {

using u128 = unsigned __int128;
using Values = std::vector<int64_t>;

struct ValuesHash {
	size_t operator()(const Values &v) const {
		uint64_t h = 0x9e3779b97f4a7c15ULL ^ v.size();
		for (int64_t x : v) {
			h ^= static_cast<uint64_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
		}
		return h;
	}
};

struct CountFactor {
	std::vector<int> vars; //!< ascending
	std::unordered_map<Values, u128, ValuesHash> cells;
};

u128 mul_checked(u128 a, u128 b) {
	if (a != 0 && b > std::numeric_limits<u128>::max() / a) {
		throw DataError("exact cardinality overflows");
	}
	return a * b;
}

std::vector<size_t> filtered_rows(const QueryIR &query, const std::string &alias, const Table &table) {
	std::vector<size_t> rows;
	auto it = query.filters.find(alias);
	if (it == query.filters.end()) {
		rows.resize(table.num_rows());
		std::iota(rows.begin(), rows.end(), size_t {0});
		return rows;
	}
	BoundPredicate bp(it->second, table.def);
	for (size_t r = 0; r < table.num_rows(); ++r) {
		if (bp.eval(table, r)) {
			rows.push_back(r);
		}
	}
	return rows;
}

CountFactor multiply(const CountFactor &a, const CountFactor &b) {
	std::vector<int> shared, uni;
	std::set_intersection(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(shared));
	std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(uni));
	auto pos = [](const std::vector<int> &vars, int v) {
		return static_cast<int>(std::lower_bound(vars.begin(), vars.end(), v) - vars.begin());
	};
	std::vector<int> a_shared, b_shared;
	for (int v : shared) {
		a_shared.push_back(pos(a.vars, v));
		b_shared.push_back(pos(b.vars, v));
	}
	// output slot -> (from a?, index)
	std::vector<std::pair<bool, int>> src;
	for (int v : uni) {
		if (std::binary_search(a.vars.begin(), a.vars.end(), v)) {
			src.emplace_back(true, pos(a.vars, v));
		} else {
			src.emplace_back(false, pos(b.vars, v));
		}
	}
	std::unordered_map<Values, std::vector<const std::pair<const Values, u128> *>, ValuesHash> index;
	for (auto &cell : b.cells) {
		Values k;
		for (int p : b_shared) {
			k.push_back(cell.first[p]);
		}
		index[std::move(k)].push_back(&cell);
	}
	CountFactor out;
	out.vars = uni;
	Values probe, key(uni.size());
	for (auto &cell : a.cells) {
		probe.clear();
		for (int p : a_shared) {
			probe.push_back(cell.first[p]);
		}
		auto it = index.find(probe);
		if (it == index.end()) {
			continue;
		}
		for (auto *other : it->second) {
			for (size_t i = 0; i < src.size(); ++i) {
				key[i] = src[i].first ? cell.first[src[i].second] : other->first[src[i].second];
			}
			u128 &slot = out.cells[key];
			slot += mul_checked(cell.second, other->second);
			if (out.cells.size() > ORACLE_MAX_GROUPS) {
				throw DataError("exact cardinality exceeds the oracle memory cap");
			}
		}
	}
	return out;
}

CountFactor marginalize(const CountFactor &f, int var) {
	int p = static_cast<int>(std::lower_bound(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
	CountFactor out;
	out.vars = f.vars;
	out.vars.erase(out.vars.begin() + p);
	for (auto &[k, c] : f.cells) {
		Values key = k;
		key.erase(key.begin() + p);
		out.cells[key] += c;
	}
	return out;
}

uint64_t to_u64(u128 v) {
	if (v > std::numeric_limits<uint64_t>::max()) {
		throw DataError("exact cardinality overflows");
	}
	return static_cast<uint64_t>(v);
}

} // namespace

uint64_t exact_cardinality(const QueryIR &query, const Database &db) {
	JoinGraph g = build_join_graph(query, db.catalog);
	std::vector<CountFactor> factors;
	for (size_t a = 0; a < g.aliases.size(); ++a) {
		const Table &t = db.table(g.tables[a]);
		std::vector<const Column *> cols;
		std::vector<int> groups;
		for (size_t k = 0; k < g.keys.size(); ++k) {
			if (g.keys[k].alias == g.aliases[a]) {
				cols.push_back(&t.column(g.keys[k].column));
				groups.push_back(g.key_group[k]);
			}
		}
		CountFactor f;
		f.vars = groups;
		std::sort(f.vars.begin(), f.vars.end());
		f.vars.erase(std::unique(f.vars.begin(), f.vars.end()), f.vars.end());
		Values key(f.vars.size());
		std::vector<bool> seen(f.vars.size());
		for (size_t r : filtered_rows(query, g.aliases[a], t)) {
			bool ok = true;
			std::fill(seen.begin(), seen.end(), false);
			for (size_t k = 0; k < cols.size() && ok; ++k) {
				if (cols[k]->is_null(r)) {
					ok = false;
					break;
				}
				int p = static_cast<int>(std::lower_bound(f.vars.begin(), f.vars.end(), groups[k]) - f.vars.begin());
				int64_t v = cols[k]->ints[r];
				if (seen[p] && key[p] != v) {
					ok = false;
				}
				key[p] = v;
				seen[p] = true;
			}
			if (ok) {
				f.cells[key] += 1;
			}
		}
		factors.push_back(std::move(f));
	}

	while (true) {
		std::map<int, int> degree;
		for (auto &f : factors) {
			for (int v : f.vars) {
				++degree[v];
			}
		}
		if (degree.empty()) {
			break;
		}
		int best = degree.begin()->first;
		for (auto &[v, d] : degree) {
			if (d < degree[best]) {
				best = v;
			}
		}
		std::vector<CountFactor> rest;
		std::optional<CountFactor> acc;
		for (auto &f : factors) {
			if (std::binary_search(f.vars.begin(), f.vars.end(), best)) {
				acc = acc ? multiply(*acc, f) : std::move(f);
			} else {
				rest.push_back(std::move(f));
			}
		}
		rest.push_back(marginalize(*acc, best));
		factors = std::move(rest);
	}
	u128 total = 1;
	for (auto &f : factors) {
		u128 c = f.cells.empty() ? 0 : f.cells.begin()->second;
		total = mul_checked(total, c);
	}
	return to_u64(total);
}

uint64_t nested_loop_cardinality(const QueryIR &query, const Database &db) {
	std::vector<std::string> aliases;
	for (auto &[a, t] : query.aliases) {
		aliases.push_back(a);
	}
	std::map<std::string, size_t> index;
	for (size_t i = 0; i < aliases.size(); ++i) {
		index[aliases[i]] = i;
	}
	std::vector<const Table *> tables;
	std::vector<std::vector<size_t>> rows;
	for (auto &a : aliases) {
		tables.push_back(&db.table(query.aliases.at(a)));
		rows.push_back(filtered_rows(query, a, *tables.back()));
	}
	struct Check {
		size_t other;
		const Column *mine;
		const Column *theirs;
	};
	// conditions checked when their later alias is bound
	std::vector<std::vector<Check>> checks(aliases.size());
	for (auto &j : query.joins) {
		size_t l = index.at(j.left.alias), r = index.at(j.right.alias);
		const Column *lc = &tables[l]->column(j.left.column);
		const Column *rc = &tables[r]->column(j.right.column);
		if (l >= r) {
			checks[l].push_back({r, lc, rc});
		} else {
			checks[r].push_back({l, rc, lc});
		}
	}
	std::vector<size_t> bound(aliases.size());
	uint64_t count = 0;
	auto rec = [&](auto &&self, size_t level) -> void {
		if (level == aliases.size()) {
			++count;
			return;
		}
		for (size_t r : rows[level]) {
			bound[level] = r;
			bool ok = true;
			for (auto &c : checks[level]) {
				size_t o = bound[c.other];
				if (c.mine->is_null(r) || c.theirs->is_null(o) || c.mine->ints[r] != c.theirs->ints[o]) {
					ok = false;
					break;
				}
			}
			if (ok) {
				self(self, level + 1);
			}
		}
	};
	rec(rec, 0);
	return count;
}

// ---- synthetic data ----

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json &doc) {
	SyntheticSpec s;
	s.seed = doc.value("seed", uint64_t {1});
	for (auto &jt : doc.at("tables")) {
		SyntheticTable t;
		t.name = jt.at("name").get<std::string>();
		t.rows = jt.value("rows", uint64_t {1000});
		for (auto &jk : jt.value("keys", nlohmann::json::array())) {
			SyntheticKey k;
			k.name = jk.at("name").get<std::string>();
			k.domain = jk.value("domain", uint64_t {100});
			k.skew = jk.value("skew", 0.0);
			k.unique = jk.value("unique", false);
			k.null_fraction = jk.value("null_fraction", 0.0);
			t.keys.push_back(std::move(k));
		}
		for (auto &ja : jt.value("attributes", nlohmann::json::array())) {
			SyntheticAttribute a;
			a.name = ja.at("name").get<std::string>();
			a.kind = column_kind_from_string(ja.value("kind", std::string("integer")));
			a.domain = ja.value("domain", uint64_t {100});
			a.correlated_with = ja.value("correlated_with", std::string());
			a.correlation = ja.value("correlation", 0.0);
			a.null_fraction = ja.value("null_fraction", 0.0);
			t.attributes.push_back(std::move(a));
		}
		s.tables.push_back(std::move(t));
	}
	s.joins = doc.value("joins", std::vector<std::string> {});
	return s;
}

nlohmann::json SyntheticSpec::to_json() const {
	nlohmann::json j;
	j["seed"] = seed;
	j["joins"] = joins;
	auto &ts = j["tables"] = nlohmann::json::array();
	for (auto &t : tables) {
		nlohmann::json jt {{"name", t.name}, {"rows", t.rows}};
		jt["keys"] = nlohmann::json::array();
		for (auto &k : t.keys) {
			jt["keys"].push_back({{"name", k.name},
			                      {"domain", k.domain},
			                      {"skew", k.skew},
			                      {"unique", k.unique},
			                      {"null_fraction", k.null_fraction}});
		}
		jt["attributes"] = nlohmann::json::array();
		for (auto &a : t.attributes) {
			jt["attributes"].push_back({{"name", a.name},
			                            {"kind", std::string(to_string(a.kind))},
			                            {"domain", a.domain},
			                            {"correlated_with", a.correlated_with},
			                            {"correlation", a.correlation},
			                            {"null_fraction", a.null_fraction}});
		}
		ts.push_back(std::move(jt));
	}
	return j;
}

nlohmann::json synthetic_schema(const SyntheticSpec &spec) {
	nlohmann::json j;
	j["version"] = 1;
	auto &ts = j["tables"] = nlohmann::json::array();
	for (auto &t : spec.tables) {
		nlohmann::json cols = nlohmann::json::array();
		for (auto &k : t.keys) {
			cols.push_back({{"name", k.name}, {"kind", std::string(to_string(ColumnKind::IntegerKey))}});
		}
		for (auto &a : t.attributes) {
			cols.push_back({{"name", a.name}, {"kind", std::string(to_string(a.kind))}});
		}
		ts.push_back({{"name", t.name}, {"columns", cols}});
	}
	j["joins"] = spec.joins;
	return j;
}

namespace {

//! Inverse-CDF sampler of ranks 1..n with P(r) proportional to r^-s.
class ZipfSampler {
public:
	ZipfSampler(uint64_t n, double s) {
		cdf_.reserve(n);
		double acc = 0;
		for (uint64_t r = 1; r <= n; ++r) {
			acc += std::pow(static_cast<double>(r), -s);
			cdf_.push_back(acc);
		}
	}
	int64_t operator()(std::mt19937_64 &rng) const {
		std::uniform_real_distribution<double> u(0.0, cdf_.back());
		double x = u(rng);
		auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
		if (it == cdf_.end()) {
			--it;
		}
		return static_cast<int64_t>(it - cdf_.begin()) + 1;
	}

private:
	std::vector<double> cdf_;
};

} // namespace

Database generate_db(const SyntheticSpec &spec) {
	Catalog catalog = load_schema(synthetic_schema(spec));
	std::mt19937_64 rng(spec.seed);
	std::vector<Table> tables;
	for (auto &st : spec.tables) {
		if (st.keys.empty() && st.attributes.empty()) {
			throw std::invalid_argument("synthetic table " + st.name + " has no columns");
		}
		Table t = Table::empty_like(catalog.table(st.name));
		for (auto &c : t.columns) {
			c.reserve(st.rows);
		}
		std::vector<ZipfSampler> samplers;
		for (auto &k : st.keys) {
			if (!k.unique && k.domain == 0) {
				throw std::invalid_argument("key " + st.name + "." + k.name + " has an empty domain");
			}
			samplers.emplace_back(k.unique ? 1 : k.domain, k.skew);
		}
		std::bernoulli_distribution coin(0.5);
		std::vector<int64_t> key_values(st.keys.size());
		for (uint64_t r = 0; r < st.rows; ++r) {
			for (size_t k = 0; k < st.keys.size(); ++k) {
				auto &col = t.columns[k];
				auto &spec_k = st.keys[k];
				int64_t v = spec_k.unique ? static_cast<int64_t>(r + 1) : samplers[k](rng);
				key_values[k] = v;
				if (spec_k.null_fraction > 0 && std::bernoulli_distribution(spec_k.null_fraction)(rng)) {
					col.push_null();
				} else {
					col.ints.push_back(v);
					col.valid.push_back(1);
				}
			}
			for (size_t a = 0; a < st.attributes.size(); ++a) {
				auto &sa = st.attributes[a];
				auto &col = t.columns[st.keys.size() + a];
				uint64_t dom = std::max<uint64_t>(sa.domain, 1);
				int64_t base = std::uniform_int_distribution<int64_t>(0, static_cast<int64_t>(dom) - 1)(rng);
				if (!sa.correlated_with.empty() && sa.correlation > 0 &&
				    std::bernoulli_distribution(sa.correlation)(rng)) {
					auto it = std::find_if(st.keys.begin(), st.keys.end(),
					                       [&](const SyntheticKey &k) { return k.name == sa.correlated_with; });
					if (it == st.keys.end()) {
						throw std::invalid_argument("attribute " + sa.name + " follows unknown key " + sa.correlated_with);
					}
					base = key_values[it - st.keys.begin()] % static_cast<int64_t>(dom);
				}
				if (sa.null_fraction > 0 && std::bernoulli_distribution(sa.null_fraction)(rng)) {
					col.push_null();
					continue;
				}
				switch (sa.kind) {
				case ColumnKind::Integer:
				case ColumnKind::IntegerKey:
					col.ints.push_back(base);
					break;
				case ColumnKind::Float:
					col.reals.push_back(static_cast<double>(base) + std::uniform_real_distribution<double>(0, 1)(rng));
					break;
				case ColumnKind::Categorical:
					col.strs.push_back("v" + std::to_string(base));
					break;
				case ColumnKind::Text:
					col.strs.push_back("w" + std::to_string(base) + (coin(rng) ? " alpha" : " beta"));
					break;
				}
				col.valid.push_back(1);
			}
		}
		tables.push_back(std::move(t));
	}
	return make_database(std::move(catalog), std::move(tables));
}

void write_database(const Database &db, const std::filesystem::path &dir) {
	std::filesystem::create_directories(dir);
	{
		std::ofstream out(dir / "schema.json");
		out << schema_descriptor(db.catalog).dump(2) << "\n";
		if (!out) {
			throw DataError("cannot write " + (dir / "schema.json").string());
		}
	}
	for (auto &t : db.tables) {
		std::ofstream out(dir / (t.def.name + ".csv"), std::ios::binary);
		write_table_csv(out, t);
		if (!out) {
			throw DataError("cannot write " + (dir / (t.def.name + ".csv")).string());
		}
	}
}

SyntheticSpec star_spec(int dimensions, uint64_t fact_rows, uint64_t dim_rows, double skew, uint64_t seed) {
	SyntheticSpec s;
	s.seed = seed;
	SyntheticTable fact {"F", fact_rows, {}, {}};
	for (int i = 0; i < dimensions; ++i) {
		std::string d = "D" + std::to_string(i);
		SyntheticTable dim {d, dim_rows, {{"id", dim_rows, 0.0, true, 0.0}}, {}};
		dim.attributes.push_back({"a", ColumnKind::Integer, 20, "id", 0.5, 0.0});
		s.tables.push_back(std::move(dim));
		fact.keys.push_back({"d" + std::to_string(i), dim_rows, skew, false, 0.0});
		s.joins.push_back(d + ".id=F.d" + std::to_string(i));
	}
	fact.attributes.push_back({"x", ColumnKind::Integer, 100, dimensions > 0 ? "d0" : "", 0.6, 0.0});
	fact.attributes.push_back({"c", ColumnKind::Categorical, 8, "", 0.0, 0.0});
	s.tables.insert(s.tables.begin(), std::move(fact));
	return s;
}

SyntheticSpec chain_spec(int tables, uint64_t rows, double skew, uint64_t seed) {
	SyntheticSpec s;
	s.seed = seed;
	for (int i = 0; i < tables; ++i) {
		SyntheticTable t {"T" + std::to_string(i), rows, {{"id", rows, 0.0, true, 0.0}}, {}};
		if (i > 0) {
			t.keys.push_back({"prev", rows, skew, false, 0.0});
			s.joins.push_back("T" + std::to_string(i - 1) + ".id=T" + std::to_string(i) + ".prev");
		}
		t.attributes.push_back({"a", ColumnKind::Integer, 50, i > 0 ? "prev" : "id", 0.6, 0.0});
		s.tables.push_back(std::move(t));
	}
	return s;
}

// ---- workloads ----

namespace {

struct Edge {
	KeyRef from; //!< key of the existing alias's table
	KeyRef to;   //!< key of the new alias's table
};

Predicate random_filter(const Table &t, std::mt19937_64 &rng) {
	std::vector<size_t> cands;
	for (size_t c = 0; c < t.def.columns.size(); ++c) {
		auto k = t.def.columns[c].kind;
		if (k == ColumnKind::Integer || k == ColumnKind::Float || k == ColumnKind::Categorical) {
			cands.push_back(c);
		}
	}
	if (cands.empty() || t.num_rows() == 0) {
		throw std::invalid_argument("no filterable column");
	}
	size_t c = cands[std::uniform_int_distribution<size_t>(0, cands.size() - 1)(rng)];
	auto &col = t.columns[c];
	auto &name = t.def.columns[c].name;
	size_t row = 0;
	for (int tries = 0; tries < 16; ++tries) {
		row = std::uniform_int_distribution<size_t>(0, t.num_rows() - 1)(rng);
		if (!col.is_null(row)) {
			break;
		}
	}
	if (col.is_null(row)) {
		return Predicate::compare(name, CompareOp::Ne, col.kind == ColumnKind::Categorical ? Literal {std::string("")}
		                                                                                   : Literal {int64_t {-1}});
	}
	int choice = std::uniform_int_distribution<int>(0, 2)(rng);
	if (col.kind == ColumnKind::Categorical) {
		if (choice == 0) {
			size_t other = std::uniform_int_distribution<size_t>(0, t.num_rows() - 1)(rng);
			std::vector<Literal> vals {col.strs[row]};
			if (!col.is_null(other)) {
				vals.push_back(col.strs[other]);
			}
			return Predicate::in_list(name, vals);
		}
		return Predicate::compare(name, choice == 1 ? CompareOp::Eq : CompareOp::Ne, col.strs[row]);
	}
	Literal v = col.kind == ColumnKind::Float ? Literal {col.reals[row]} : Literal {col.ints[row]};
	CompareOp ops[] = {CompareOp::Le, CompareOp::Ge, CompareOp::Eq};
	return Predicate::compare(name, ops[choice], v);
}

std::optional<QueryIR> try_query(const Database &db, const WorkloadSpec &spec, std::mt19937_64 &rng) {
	const Catalog &cat = db.catalog;
	int lo = spec.min_aliases, hi = spec.max_aliases;
	if (spec.shape == QueryTemplate::Cyclic) {
		lo = std::max(lo, 2);
	}
	int n = std::uniform_int_distribution<int>(lo, std::max(lo, hi))(rng);

	std::vector<Edge> edges;
	for (auto &rel : cat.relations) {
		edges.push_back({rel.left, rel.right});
		edges.push_back({rel.right, rel.left});
	}
	auto self_edges = [&](const std::string &table) {
		std::vector<Edge> out;
		for (auto &k : cat.join_keys(table)) {
			out.push_back({k, k});
		}
		return out;
	};

	QueryIR q;
	std::vector<std::string> alias_table;
	auto add_alias = [&](const std::string &table) {
		std::string a = "t" + std::to_string(alias_table.size());
		alias_table.push_back(table);
		q.aliases[a] = table;
		return a;
	};
	auto add_join = [&](const std::string &la, const std::string &lc, const std::string &ra, const std::string &rc) {
		JoinCondition j {{la, lc}, {ra, rc}};
		if (j.right < j.left) {
			std::swap(j.left, j.right);
		}
		q.joins.push_back(j);
	};

	std::vector<std::string> tables_with_keys;
	for (auto &t : cat.tables) {
		if (!cat.join_keys(t.name).empty()) {
			tables_with_keys.push_back(t.name);
		}
	}
	if (tables_with_keys.empty()) {
		return std::nullopt;
	}
	auto pick = [&](size_t size) { return std::uniform_int_distribution<size_t>(0, size - 1)(rng); };
	add_alias(tables_with_keys[pick(tables_with_keys.size())]);

	bool need_self = spec.shape == QueryTemplate::SelfJoin;
	while (static_cast<int>(alias_table.size()) < n) {
		size_t from = 0;
		switch (spec.shape) {
		case QueryTemplate::Chain:
			from = alias_table.size() - 1;
			break;
		case QueryTemplate::Star:
			from = 0;
			break;
		default:
			from = pick(alias_table.size());
		}
		const std::string &table = alias_table[from];
		std::vector<Edge> cands;
		if (need_self) {
			cands = self_edges(table);
			need_self = false;
		} else {
			for (auto &e : edges) {
				if (e.from.table == table) {
					cands.push_back(e);
				}
			}
			if (spec.shape == QueryTemplate::Any && std::bernoulli_distribution(0.1)(rng)) {
				cands = self_edges(table);
			}
		}
		if (cands.empty()) {
			return std::nullopt;
		}
		auto &e = cands[pick(cands.size())];
		std::string from_alias = "t" + std::to_string(from);
		std::string to_alias = add_alias(e.to.table);
		add_join(from_alias, e.from.column, to_alias, e.to.column);
	}

	if (spec.shape == QueryTemplate::Cyclic) {
		JoinGraph g = build_join_graph(q, cat);
		struct Closing {
			size_t a, b;
			KeyRef ka, kb;
		};
		std::vector<Closing> cands;
		for (size_t a = 0; a < alias_table.size(); ++a) {
			for (size_t b = a + 1; b < alias_table.size(); ++b) {
				for (auto &ka : cat.join_keys(alias_table[a])) {
					for (auto &kb : cat.join_keys(alias_table[b])) {
						if (cat.group_of(ka) != cat.group_of(kb)) {
							continue;
						}
						int ia = g.key_index({"t" + std::to_string(a), ka.column});
						int ib = g.key_index({"t" + std::to_string(b), kb.column});
						// keys already equated would not close a cycle
						if (ia >= 0 && ib >= 0 && g.key_group[ia] == g.key_group[ib]) {
							continue;
						}
						cands.push_back({a, b, ka, kb});
					}
				}
			}
		}
		if (cands.empty()) {
			return std::nullopt;
		}
		auto &c = cands[pick(cands.size())];
		add_join("t" + std::to_string(c.a), c.ka.column, "t" + std::to_string(c.b), c.kb.column);
	}

	for (size_t a = 0; a < alias_table.size(); ++a) {
		if (std::bernoulli_distribution(spec.filter_probability)(rng)) {
			try {
				q.filters["t" + std::to_string(a)] = random_filter(db.table(alias_table[a]), rng);
			} catch (const std::invalid_argument &) {
			}
		}
	}
	q.normalize();
	validate_query(q, cat);
	if (spec.shape == QueryTemplate::Cyclic && !build_join_graph(q, cat).is_cyclic) {
		return std::nullopt;
	}
	return q;
}

} // namespace

std::vector<QueryIR> generate_workload(const Database &db, const WorkloadSpec &spec) {
	if (spec.min_aliases < 1 || spec.max_aliases < spec.min_aliases) {
		throw std::invalid_argument("invalid alias range");
	}
	std::mt19937_64 rng(spec.seed);
	std::vector<QueryIR> out;
	size_t attempts = 0;
	while (out.size() < spec.queries) {
		if (++attempts > spec.queries * 100 + 1000) {
			throw std::invalid_argument("schema cannot produce the requested query shape");
		}
		if (auto q = try_query(db, spec, rng)) {
			out.push_back(std::move(*q));
		}
	}
	return out;
}

// ---- metrics ----

double nearest_rank(std::vector<double> values, double p) {
	if (values.empty()) {
		return 0.0;
	}
	if (!(p > 0.0 && p <= 100.0)) {
		throw std::invalid_argument("percentile must be in (0, 100]");
	}
	std::sort(values.begin(), values.end());
	auto rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
	return values[std::max<size_t>(rank, 1) - 1];
}

ErrorMetrics summarize_outcomes(std::vector<QueryOutcome> outcomes) {
	ErrorMetrics m;
	std::vector<double> ratios;
	size_t under = 0, counted = 0;
	double ms = 0;
	for (auto &o : outcomes) {
		if (o.failed) {
			++m.failed;
			continue;
		}
		ms += o.wall_ms;
		++counted;
		if (o.zero_truth) {
			++m.zero_truth;
			continue;
		}
		ratios.push_back(o.ratio);
		under += o.estimate < static_cast<double>(o.truth);
	}
	m.p50 = nearest_rank(ratios, 50);
	m.p95 = nearest_rank(ratios, 95);
	m.p99 = nearest_rank(ratios, 99);
	m.under_fraction = ratios.empty() ? 0.0 : static_cast<double>(under) / static_cast<double>(ratios.size());
	m.mean_ms = counted ? ms / static_cast<double>(counted) : 0.0;
	m.outcomes = std::move(outcomes);
	return m;
}

nlohmann::json ErrorMetrics::to_json() const {
	nlohmann::json j;
	j["queries"] = outcomes.size();
	j["p50"] = p50;
	j["p95"] = p95;
	j["p99"] = p99;
	j["under_fraction"] = under_fraction;
	j["bound_coverage"] = 1.0 - under_fraction;
	j["zero_truth"] = zero_truth;
	j["failed"] = failed;
	j["mean_ms"] = mean_ms;
	return j;
}

std::string ErrorMetrics::table() const {
	std::ostringstream out;
	out << std::left << std::setw(9) << "queries" << std::setw(12) << "p50" << std::setw(12) << "p95"
	    << std::setw(12) << "p99" << std::setw(8) << "under" << std::setw(6) << "zero" << std::setw(8) << "failed"
	    << "mean_ms\n";
	out << std::setw(9) << outcomes.size() << std::setw(12) << p50 << std::setw(12) << p95 << std::setw(12) << p99
	    << std::setw(8) << under_fraction << std::setw(6) << zero_truth << std::setw(8) << failed << mean_ms << "\n";
	return out.str();
}

std::vector<std::optional<uint64_t>> exact_cardinalities(const std::vector<QueryIR> &queries, const Database &db,
                                                         std::vector<std::string> *errors) {
	std::vector<std::optional<uint64_t>> out;
	for (auto &q : queries) {
		try {
			out.emplace_back(exact_cardinality(q, db));
			if (errors) {
				errors->emplace_back();
			}
		} catch (const Error &e) {
			out.emplace_back();
			if (errors) {
				errors->emplace_back(e.what());
			}
		}
	}
	return out;
}

ErrorMetrics evaluate_estimates(const std::vector<QueryIR> &queries, const std::vector<std::optional<uint64_t>> &truths,
                                const QueryEstimator &estimator) {
	if (truths.size() != queries.size()) {
		throw std::invalid_argument("one truth per query required");
	}
	std::vector<QueryOutcome> outcomes;
	for (size_t i = 0; i < queries.size(); ++i) {
		QueryOutcome o;
		if (!truths[i]) {
			o.failed = true;
			o.error = "no exact cardinality";
			outcomes.push_back(std::move(o));
			continue;
		}
		try {
			auto r = estimator(queries[i]);
			o.estimate = r.estimate;
			o.wall_ms = r.wall_ms;
			o.truth = *truths[i];
			o.zero_truth = o.truth == 0;
			o.ratio = o.zero_truth ? o.estimate + 1.0 : o.estimate / static_cast<double>(o.truth);
		} catch (const Error &e) {
			o.failed = true;
			o.error = e.what();
		}
		outcomes.push_back(std::move(o));
	}
	return summarize_outcomes(std::move(outcomes));
}

ErrorMetrics evaluate_workload(const Model &model, const std::vector<QueryIR> &queries, const Database &db,
                               const EstimateOptions &options) {
	std::vector<std::string> errors;
	auto truths = exact_cardinalities(queries, db, &errors);
	auto metrics = evaluate_estimates(queries, truths, [&](const QueryIR &q) { return estimate(q, model, options); });
	for (size_t i = 0; i < truths.size(); ++i) {
		if (!truths[i]) {
			metrics.outcomes[i].error = errors[i];
		}
	}
	return metrics;
}

} // namespace fgcard
