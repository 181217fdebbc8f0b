#include "fgcard/model.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "fgcard/csv.hpp"
#include "fgcard/error.hpp"

namespace fgcard {

namespace {

std::string hex64(uint64_t v) {
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
	return buf;
}

std::vector<std::string> key_columns(const TableDef &def) {
	std::vector<std::string> out;
	for (auto &c : def.columns) {
		if (c.kind == ColumnKind::IntegerKey) {
			out.push_back(c.name);
		}
	}
	return out;
}

std::map<std::string, const BinMap *> key_bin_ptrs(const Model &m, const TableDef &def) {
	std::map<std::string, const BinMap *> out;
	for (auto &col : key_columns(def)) {
		out[col] = &m.bin_map(KeyRef {def.name, col});
	}
	return out;
}

KeyDelta key_delta(const Table &inserted, const Table &deleted, const std::string &column) {
	KeyDelta d;
	auto collect = [&](const Table &t, std::vector<int64_t> &out) {
		if (t.num_rows() == 0) {
			return;
		}
		auto &c = t.column(column);
		for (size_t r = 0; r < c.size(); ++r) {
			if (!c.is_null(r)) {
				out.push_back(c.ints[r]);
			}
		}
	};
	collect(inserted, d.inserted);
	collect(deleted, d.deleted);
	return d;
}

void check_delta_shape(const TableDef &def, const Table &t, const char *what) {
	if (t.columns.empty() && t.num_rows() == 0) {
		return;
	}
	if (t.def.columns.size() != def.columns.size()) {
		throw DataError(std::string(what) + " rows of " + def.name + " have a different column count");
	}
	for (size_t c = 0; c < def.columns.size(); ++c) {
		if (t.def.columns[c].name != def.columns[c].name || t.def.columns[c].kind != def.columns[c].kind) {
			throw DataError(std::string(what) + " rows of " + def.name + " do not match its columns");
		}
	}
}

} // namespace

std::map<int, int64_t> workload_group_counts(const std::vector<QueryIR> &queries, const Catalog &catalog) {
	std::map<int, int64_t> out;
	for (auto &g : catalog.groups) {
		out[g.id] = 0;
	}
	for (auto &q : queries) {
		std::set<int> touched;
		for (auto &j : q.joins) {
			for (auto *ref : {&j.left, &j.right}) {
				auto it = q.aliases.find(ref->alias);
				if (it == q.aliases.end()) {
					throw ParseError("unknown alias " + ref->alias);
				}
				touched.insert(catalog.group_of(KeyRef {it->second, ref->column}));
			}
		}
		for (int g : touched) {
			++out[g];
		}
	}
	return out;
}

const BinMap &Model::bin_map(const KeyRef &key) const {
	int g = catalog.group_of(key);
	auto it = bins.find(g);
	if (it == bins.end()) {
		throw EstimationError("no bins for group of " + key.str());
	}
	return it->second;
}

const KeyBinSummary &Model::summary(const KeyRef &key) const {
	auto it = summaries.find(key);
	if (it == summaries.end()) {
		throw EstimationError("no bin summary for " + key.str());
	}
	return it->second;
}

const TableEstimator &Model::estimator(const std::string &table) const {
	auto it = estimators.find(table);
	if (it == estimators.end()) {
		throw EstimationError("no estimator for table " + table);
	}
	return it->second;
}

std::vector<KeyStats> Model::key_stats(const std::string &table, const std::vector<std::string> &columns) const {
	std::vector<KeyStats> out;
	for (auto &c : columns) {
		KeyRef ref {table, c};
		out.push_back(KeyStats {c, &bin_map(ref), &summary(ref)});
	}
	return out;
}

BinDistribution Model::distribution(const std::string &table, const Predicate *filter,
                                    const std::vector<std::string> &keys, MfvMode mode) const {
	auto stats = key_stats(table, keys);
	return estimator(table).distribution(filter, stats, mode);
}

int Model::bin_budget() const {
	int total = 0;
	for (auto &[g, b] : bins) {
		total += b.num_bins();
	}
	return total;
}

std::string data_digest(const Table &table) {
	uint64_t h = 0xcbf29ce484222325ULL;
	for (size_t r = 0; r < table.num_rows(); ++r) {
		h = (h ^ table.row_hash(r)) * 0x100000001b3ULL;
	}
	return hex64(h);
}

std::map<std::string, TableDelta> load_deltas(const Catalog &catalog, const std::filesystem::path &dir) {
	if (!std::filesystem::is_directory(dir)) {
		throw DataError("delta directory " + dir.string() + " does not exist");
	}
	std::map<std::string, TableDelta> out;
	for (auto &entry : std::filesystem::directory_iterator(dir)) {
		if (entry.path().extension() == ".csv" && !catalog.find_table(entry.path().stem().string())) {
			throw DataError("delta file " + entry.path().filename().string() + " names no table of the schema");
		}
	}
	for (auto &def : catalog.tables) {
		auto path = dir / (def.name + ".csv");
		if (!std::filesystem::exists(path)) {
			continue;
		}
		bool marked = false;
		{
			std::ifstream in(path);
			CsvReader reader(in);
			std::vector<CsvField> header;
			if (reader.next(header)) {
				for (auto &f : header) {
					marked |= f.text == DELTA_MARKER_COLUMN;
				}
			}
		}
		TableDef with_marker = def;
		if (marked) {
			with_marker.columns.push_back(ColumnDef {std::string(DELTA_MARKER_COLUMN), ColumnKind::Categorical});
		}
		auto rows = ingest_table_file(path, with_marker).table;
		TableDelta delta {Table::empty_like(def), Table::empty_like(def)};
		for (size_t r = 0; r < rows.num_rows(); ++r) {
			bool del = false;
			if (marked) {
				auto &marker = rows.columns.back();
				std::string op = marker.is_null(r) ? "" : marker.strs[r];
				if (op == "delete") {
					del = true;
				} else if (!op.empty() && op != "insert") {
					throw DataError(path.filename().string() + ": unknown delta marker '" + op + "'");
				}
			}
			auto &target = del ? delta.deleted : delta.inserted;
			for (size_t c = 0; c < def.columns.size(); ++c) {
				target.columns[c].push_from(rows.columns[c], r);
			}
		}
		out.emplace(def.name, std::move(delta));
	}
	return out;
}

Model train(const Database &db, const RunConfig &config) {
	Model m;
	m.catalog = db.catalog;
	m.config = config;

	std::map<int, int64_t> counts;
	for (auto &g : m.catalog.groups) {
		auto it = config.workload_group_counts.find(g.id);
		counts[g.id] = it == config.workload_group_counts.end() ? 0 : it->second;
	}
	int groups = static_cast<int>(counts.size());
	int budget = config.total_bins.value_or(DEFAULT_BINS_PER_GROUP * groups);
	auto alloc = allocate_bin_budget(counts, budget);
	for (auto &[g, k] : config.group_overrides) {
		if (!alloc.count(g)) {
			throw std::invalid_argument("bin override for unknown group " + std::to_string(g));
		}
		if (k < 1) {
			throw std::invalid_argument("bin override must be positive");
		}
		alloc[g] = k;
	}

	for (auto &g : m.catalog.groups) {
		std::vector<const ValueCountStore *> members;
		for (auto &key : g.members) {
			auto it = db.stores.find(key);
			if (it == db.stores.end()) {
				throw DataError("no value counts for " + key.str());
			}
			members.push_back(&it->second);
		}
		m.bins.emplace(g.id, build_bins(config.strategy, g.id, members, alloc.at(g.id)));
		for (auto &key : g.members) {
			auto &store = db.stores.at(key);
			m.stores[key] = store;
			m.summaries[key] = summarize_bins(store, m.bins.at(g.id));
		}
	}

	EstimatorConfig ec {config.estimator, config.rate, config.seed};
	for (auto &t : db.tables) {
		auto stats = m.key_stats(t.def.name, key_columns(t.def));
		m.estimators.emplace(t.def.name, fit_estimator(t, stats, ec));
		m.provenance["digest." + t.def.name] = data_digest(t);
	}
	return m;
}

void update(Model &model, const std::map<std::string, TableDelta> &deltas) {
	Model next = model;
	uint64_t seed = model.config.seed;
	for (auto &[name, delta] : deltas) {
		auto &def = next.catalog.table(name);
		check_delta_shape(def, delta.inserted, "inserted");
		check_delta_shape(def, delta.deleted, "deleted");
		if (delta.inserted.num_rows() == 0 && delta.deleted.num_rows() == 0) {
			continue;
		}
		for (auto &col : key_columns(def)) {
			KeyRef ref {name, col};
			auto kd = key_delta(delta.inserted, delta.deleted, col);
			apply_update(next.stores.at(ref), next.summaries.at(ref), next.bin_map(ref), kd);
		}
		auto &est = next.estimators.at(name);
		update_estimator(est, delta.inserted, delta.deleted, key_bin_ptrs(next, def), seed);
		int64_t rows = static_cast<int64_t>(def.row_count) + static_cast<int64_t>(delta.inserted.num_rows()) -
		               static_cast<int64_t>(delta.deleted.num_rows());
		def.row_count = static_cast<uint64_t>(rows);
		// one seed stream per updated table keeps redraws independent
		seed = seed * 6364136223846793005ULL + 1442695040888963407ULL;
	}
	model = std::move(next);
}

double selinger_estimate(const QueryIR &query, const Catalog &catalog, const std::map<std::string, double> &selectivities,
                         const std::map<KeyRef, uint64_t> &ndv) {
	double est = 1.0;
	for (auto &[alias, table] : query.aliases) {
		auto it = selectivities.find(alias);
		double sel = it == selectivities.end() ? 1.0 : it->second;
		est *= sel * static_cast<double>(catalog.table(table).row_count);
	}
	for (auto &j : query.joins) {
		uint64_t d = 0;
		for (auto *ref : {&j.left, &j.right}) {
			KeyRef key {query.aliases.at(ref->alias), ref->column};
			auto it = ndv.find(key);
			if (it == ndv.end()) {
				throw EstimationError("no distinct-value count for " + key.str());
			}
			d = std::max(d, it->second);
		}
		if (d == 0) {
			return 0.0;
		}
		est /= static_cast<double>(d);
	}
	return est;
}

} // namespace fgcard
