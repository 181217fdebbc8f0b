// fgcard command line: train, estimate, subplans, update, bench, gen.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fgcard/error.hpp"
#include "fgcard/factorgraph.hpp"
#include "fgcard/model.hpp"
#include "fgcard/model_io.hpp"
#include "fgcard/oracle.hpp"

using namespace fgcard;
using json = nlohmann::json;

namespace {

enum ExitCode { EXIT_OK = 0, EXIT_USAGE = 1, EXIT_DATA = 2, EXIT_INTERNAL = 3 };

//! Thrown for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

double elapsed_ms(std::chrono::steady_clock::time_point since) {
	return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void emit(const json &line) {
	std::cout << line.dump() << '\n';
}

//! Flags shared by train and bench.
struct TrainFlags {
	std::string schema, data, workload;
	std::optional<int> k;
	std::vector<std::string> overrides; //!< "group=k" or "Table.column=k"
	std::string strategy = "gbsa";
	std::string estimator = "chowliu";
	double rate = 0.01;
	uint64_t seed = 42;
	size_t cap = DEFAULT_SUBPLAN_CAP;
};

void add_train_flags(CLI::App *cmd, TrainFlags &f, bool grid) {
	cmd->add_option("--schema", f.schema, "schema descriptor (JSON)")->required()->check(CLI::ExistingFile);
	cmd->add_option("--data", f.data, "directory with one <table>.csv per table")->required()->check(CLI::ExistingDirectory);
	cmd->add_option("--seed", f.seed, "seed of every random choice")->capture_default_str();
	cmd->add_option("--rate", f.rate, "sampling rate of the sample and chowliu estimators")->capture_default_str();
	if (!grid) {
		cmd->add_option("--k", f.k, "total bin budget K (default 100 per key group)");
		cmd->add_option("--override", f.overrides, "per-group bins, GROUP=k or Table.column=k");
		cmd->add_option("--strategy", f.strategy, "gbsa|width|depth")
		    ->check(CLI::IsMember({"gbsa", "width", "depth"}))
		    ->capture_default_str();
		cmd->add_option("--estimator", f.estimator, "truescan|sample|chowliu")
		    ->check(CLI::IsMember({"truescan", "sample", "chowliu"}))
		    ->capture_default_str();
		cmd->add_option("--cap", f.cap, "sub-plan cap stored with the model")->capture_default_str();
		cmd->add_option("--workload", f.workload, "queries used to allocate the bin budget")->check(CLI::ExistingFile);
	}
}

struct WorkloadLine {
	size_t line = 0;
	std::optional<QueryIR> query;
	std::string error;
	int error_line = 0, error_column = 0;
};

//! One query per non-blank line that does not start with '#' or "--".
std::vector<WorkloadLine> read_workload(const std::string &path, const Catalog &catalog) {
	std::ifstream in(path);
	if (!in) {
		throw DataError("cannot open workload " + path);
	}
	std::vector<WorkloadLine> out;
	std::string text;
	size_t n = 0;
	while (std::getline(in, text)) {
		++n;
		auto first = text.find_first_not_of(" \t\r");
		if (first == std::string::npos || text[first] == '#' || text.compare(first, 2, "--") == 0) {
			continue;
		}
		WorkloadLine w;
		w.line = n;
		try {
			w.query = parse_query(text, catalog);
		} catch (const ParseError &e) {
			w.error = e.what();
			w.error_line = e.line;
			w.error_column = e.column;
		} catch (const Error &e) {
			w.error = e.what();
		}
		out.push_back(std::move(w));
	}
	return out;
}

std::vector<QueryIR> valid_queries(const std::vector<WorkloadLine> &lines) {
	std::vector<QueryIR> out;
	for (auto &l : lines) {
		if (!l.query) {
			throw DataError("workload line " + std::to_string(l.line) + ": " + l.error);
		}
		out.push_back(*l.query);
	}
	return out;
}

json error_record(const WorkloadLine &l) {
	json j {{"line", l.line}, {"error", l.error}};
	if (l.error_line) {
		j["error_line"] = l.error_line;
		j["error_column"] = l.error_column;
	}
	return j;
}

int resolve_group(const std::string &id, const Catalog &catalog) {
	if (id.find('.') != std::string::npos) {
		return catalog.group_of(KeyRef::parse(id));
	}
	try {
		size_t used = 0;
		int g = std::stoi(id, &used);
		if (used == id.size()) {
			return g;
		}
	} catch (const std::exception &) {
	}
	throw UsageError("bad --override target '" + id + "'");
}

RunConfig make_config(const TrainFlags &f, const Catalog &catalog) {
	RunConfig c;
	c.total_bins = f.k;
	c.strategy = bin_strategy_from_string(f.strategy);
	c.estimator = estimator_kind_from_string(f.estimator);
	c.rate = f.rate;
	c.seed = f.seed;
	c.subplan_cap = f.cap;
	for (auto &o : f.overrides) {
		auto eq = o.rfind('=');
		if (eq == std::string::npos) {
			throw UsageError("--override expects GROUP=k, got '" + o + "'");
		}
		int k = 0;
		try {
			k = std::stoi(o.substr(eq + 1));
		} catch (const std::exception &) {
			throw UsageError("--override expects an integer bin count, got '" + o + "'");
		}
		c.group_overrides[resolve_group(o.substr(0, eq), catalog)] = k;
	}
	if (!f.workload.empty()) {
		c.workload_group_counts = workload_group_counts(valid_queries(read_workload(f.workload, catalog)), catalog);
	}
	return c;
}

Database load_data(const TrainFlags &f) {
	return load_database(load_schema_file(f.schema), f.data);
}

void stamp_creation_time(Model &m) {
	// only a pinned epoch is recorded so repeated runs stay byte-identical
	if (const char *epoch = std::getenv("SOURCE_DATE_EPOCH")) {
		m.provenance["created"] = epoch;
	}
}

std::string fmt(double v) {
	std::ostringstream s;
	s << std::setprecision(6) << v;
	return s.str();
}

void print_reports_table(const std::vector<EstimateReport> &reports) {
	size_t width = 7;
	for (auto &r : reports) {
		width = std::max(width, r.subplan.size());
	}
	std::cout << std::left << std::setw(static_cast<int>(width) + 2) << "subplan" << std::setw(20) << "estimate"
	          << "wall_ms\n";
	for (auto &r : reports) {
		std::cout << std::setw(static_cast<int>(width) + 2) << r.subplan << std::setw(20) << fmt(r.estimate)
		          << fmt(r.wall_ms) << '\n';
	}
}

int run_train(const TrainFlags &f, const std::string &model_path, const std::string &format) {
	auto t0 = std::chrono::steady_clock::now();
	auto db = load_data(f);
	auto config = make_config(f, db.catalog);
	auto model = train(db, config);
	stamp_creation_time(model);
	save_model(model, model_path);
	json bins = json::object();
	for (auto &[g, bm] : model.bins) {
		bins[std::to_string(g)] = bm.num_bins();
	}
	json out {{"model", model_path},
	          {"tables", db.tables.size()},
	          {"groups", model.bins.size()},
	          {"bins", bins},
	          {"bin_budget", model.bin_budget()},
	          {"estimator", to_string(config.estimator)},
	          {"strategy", to_string(config.strategy)},
	          {"wall_ms", elapsed_ms(t0)}};
	if (format == "table") {
		for (auto &[key, value] : out.items()) {
			std::cout << std::left << std::setw(12) << key << value.dump() << '\n';
		}
	} else {
		emit(out);
	}
	return EXIT_OK;
}

struct QueryFlags {
	std::string model;
	std::string query;
	std::string workload;
	std::string joinhist;
	bool explain = false;
	size_t cap = 0;
	std::string format = "json";
};

std::vector<WorkloadLine> collect_queries(const QueryFlags &f, const Catalog &catalog) {
	if (f.query.empty() == f.workload.empty()) {
		throw UsageError("give exactly one of --query and --workload");
	}
	if (!f.workload.empty()) {
		return read_workload(f.workload, catalog);
	}
	WorkloadLine w;
	w.line = 1;
	try {
		w.query = parse_query(f.query, catalog);
	} catch (const ParseError &e) {
		w.error = e.what();
		w.error_line = e.line;
		w.error_column = e.column;
	} catch (const Error &e) {
		w.error = e.what();
	}
	return {std::move(w)};
}

int run_estimate(const QueryFlags &f) {
	auto model = load_model(f.model);
	EstimateOptions options;
	options.explain = f.explain;
	std::optional<JoinHistMode> mode;
	if (!f.joinhist.empty()) {
		mode = joinhist_mode_from_string(f.joinhist);
	}
	int code = EXIT_OK;
	std::vector<EstimateReport> reports;
	for (auto &line : collect_queries(f, model.catalog)) {
		if (!line.query) {
			emit(error_record(line));
			code = EXIT_DATA;
			continue;
		}
		try {
			auto r = mode ? joinhist_estimate(*line.query, model, *mode) : estimate(*line.query, model, options);
			if (f.format == "table") {
				reports.push_back(std::move(r));
			} else {
				auto j = r.to_json();
				j["line"] = line.line;
				emit(j);
			}
		} catch (const Error &e) {
			emit({{"line", line.line}, {"error", e.what()}});
			code = EXIT_DATA;
		}
	}
	if (f.format == "table") {
		print_reports_table(reports);
	}
	return code;
}

int run_subplans(const QueryFlags &f) {
	auto model = load_model(f.model);
	auto lines = collect_queries(f, model.catalog);
	EstimateOptions options;
	options.explain = f.explain;
	size_t cap = f.cap ? f.cap : model.config.subplan_cap;
	int code = EXIT_OK;
	for (auto &line : lines) {
		if (!line.query) {
			emit(error_record(line));
			code = EXIT_DATA;
			continue;
		}
		try {
			auto res = progressive_estimate(*line.query, model, cap, options);
			json summary {{"line", line.line},
			              {"subplans", res.reports.size()},
			              {"truncated", res.truncated},
			              {"wall_ms", res.wall_ms}};
			if (f.format == "table") {
				print_reports_table(res.reports);
				std::cout << "subplans " << res.reports.size() << (res.truncated ? " (truncated)" : "") << " in "
				          << fmt(res.wall_ms) << " ms\n";
			} else {
				for (auto &r : res.reports) {
					auto j = r.to_json();
					j["line"] = line.line;
					emit(j);
				}
				emit({{"summary", summary}});
			}
			if (res.truncated) {
				std::cerr << "warning: sub-plan enumeration truncated at " << cap << '\n';
			}
		} catch (const Error &e) {
			emit({{"line", line.line}, {"error", e.what()}});
			code = EXIT_DATA;
		}
	}
	return code;
}

int run_update(const std::string &model_path, const std::string &delta_dir, const std::string &base_dir,
               const std::string &format) {
	auto t0 = std::chrono::steady_clock::now();
	ModelLock lock(model_path);
	auto model = load_model(model_path);
	if (!base_dir.empty()) {
		auto base = load_database(model.catalog, base_dir);
		for (auto &t : base.tables) {
			auto it = model.provenance.find("digest." + t.def.name);
			if (it != model.provenance.end() && it->second != data_digest(t)) {
				std::cerr << "warning: " << t.def.name << " differs from the data the model was trained on\n";
			}
		}
	}
	auto deltas = load_deltas(model.catalog, delta_dir);
	size_t inserted = 0, deleted = 0;
	for (auto &[name, d] : deltas) {
		inserted += d.inserted.num_rows();
		deleted += d.deleted.num_rows();
	}
	update(model, deltas);
	if (inserted + deleted > 0) {
		int n = 1;
		if (auto it = model.provenance.find("updates"); it != model.provenance.end()) {
			n = std::stoi(it->second) + 1;
		}
		model.provenance["updates"] = std::to_string(n);
	}
	save_model(model, model_path, lock);
	json out {{"model", model_path},
	          {"tables", deltas.size()},
	          {"inserted", inserted},
	          {"deleted", deleted},
	          {"wall_ms", elapsed_ms(t0)}};
	if (format == "table") {
		for (auto &[key, value] : out.items()) {
			std::cout << std::left << std::setw(10) << key << value.dump() << '\n';
		}
	} else {
		emit(out);
	}
	return EXIT_OK;
}

struct BenchFlags {
	TrainFlags train;
	std::vector<int> ks {1, 10, 50, 100};
	std::vector<std::string> strategies {"gbsa"};
	std::vector<std::string> estimators {"truescan"};
	bool joinhist = false;
	size_t queries = 100;
	std::string format = "json";
};

int run_bench(BenchFlags &f) {
	auto db = load_data(f.train);
	std::vector<QueryIR> queries;
	if (!f.train.workload.empty()) {
		queries = valid_queries(read_workload(f.train.workload, db.catalog));
	} else {
		WorkloadSpec ws;
		ws.queries = f.queries;
		ws.seed = f.train.seed;
		queries = generate_workload(db, ws);
	}
	auto truths = exact_cardinalities(queries, db);

	std::vector<json> rows;
	auto record = [&](json cell, const ErrorMetrics &m) {
		cell.update(m.to_json());
		rows.push_back(cell);
		if (f.format == "json") {
			emit(cell);
		}
	};
	for (auto &estimator : f.estimators) {
		for (auto &strategy : f.strategies) {
			for (int k : f.ks) {
				json cell {{"estimator", estimator}, {"strategy", strategy}, {"k", k}};
				try {
					RunConfig c;
					c.estimator = estimator_kind_from_string(estimator);
					c.strategy = bin_strategy_from_string(strategy);
					c.rate = f.train.rate;
					c.seed = f.train.seed;
					// k is per key group, as in the default configuration
					c.total_bins = k * static_cast<int>(db.catalog.groups.size());
					auto t0 = std::chrono::steady_clock::now();
					auto model = train(db, c);
					cell["train_ms"] = elapsed_ms(t0);
					cell["method"] = "factorgraph";
					record(cell, evaluate_estimates(queries, truths, [&](const QueryIR &q) { return estimate(q, model); }));
					if (f.joinhist) {
						for (auto mode : {JoinHistMode::Classic, JoinHistMode::WithBound, JoinHistMode::WithConditional}) {
							cell["method"] = "joinhist-" + std::string(to_string(mode));
							record(cell, evaluate_estimates(queries, truths, [&](const QueryIR &q) {
								       return joinhist_estimate(q, model, mode);
							       }));
						}
					}
				} catch (const std::exception &e) {
					cell["error"] = e.what();
					rows.push_back(cell);
					if (f.format == "json") {
						emit(cell);
					}
				}
			}
		}
	}
	if (f.format == "table") {
		std::cout << std::left << std::setw(10) << "estimator" << std::setw(10) << "strategy" << std::setw(6) << "k"
		          << std::setw(28) << "method" << std::setw(12) << "p50" << std::setw(12) << "p95" << std::setw(12)
		          << "p99" << std::setw(10) << "coverage" << std::setw(8) << "failed"
		          << "mean_ms\n";
		for (auto &r : rows) {
			std::cout << std::setw(10) << r["estimator"].get<std::string>() << std::setw(10)
			          << r["strategy"].get<std::string>() << std::setw(6) << r["k"].get<int>();
			if (r.contains("error")) {
				std::cout << "error: " << r["error"].get<std::string>() << '\n';
				continue;
			}
			std::cout << std::setw(28) << r["method"].get<std::string>() << std::setw(12) << fmt(r["p50"].get<double>())
			          << std::setw(12) << fmt(r["p95"].get<double>()) << std::setw(12) << fmt(r["p99"].get<double>())
			          << std::setw(10) << fmt(r["bound_coverage"].get<double>()) << std::setw(8)
			          << r["failed"].get<size_t>() << fmt(r["mean_ms"].get<double>()) << '\n';
		}
	}
	return EXIT_OK;
}

struct GenFlags {
	std::string out;
	std::string spec;
	std::string preset = "star";
	int tables = 3;
	uint64_t rows = 10000;
	uint64_t dim_rows = 1000;
	double skew = 1.0;
	uint64_t seed = 1;
	size_t queries = 0;
	std::string workload;
	std::string shape = "any";
	int min_aliases = 2, max_aliases = 4;
};

QueryTemplate shape_from_string(const std::string &s) {
	static const std::map<std::string, QueryTemplate> shapes {{"chain", QueryTemplate::Chain},
	                                                          {"star", QueryTemplate::Star},
	                                                          {"self", QueryTemplate::SelfJoin},
	                                                          {"cyclic", QueryTemplate::Cyclic},
	                                                          {"any", QueryTemplate::Any}};
	return shapes.at(s);
}

int run_gen(const GenFlags &f) {
	SyntheticSpec spec;
	if (!f.spec.empty()) {
		std::ifstream in(f.spec);
		json doc;
		try {
			doc = json::parse(in);
		} catch (const json::exception &e) {
			throw DataError("spec file " + f.spec + " is not valid JSON: " + e.what());
		}
		spec = SyntheticSpec::from_json(doc);
	} else if (f.preset == "star") {
		spec = star_spec(f.tables, f.rows, f.dim_rows, f.skew, f.seed);
	} else {
		spec = chain_spec(f.tables, f.rows, f.skew, f.seed);
	}
	auto db = generate_db(spec);
	write_database(db, f.out);
	json out {{"out", f.out}, {"tables", db.tables.size()}};
	if (f.queries > 0) {
		if (f.workload.empty()) {
			throw UsageError("--queries needs --workload");
		}
		WorkloadSpec ws;
		ws.queries = f.queries;
		ws.seed = spec.seed;
		ws.shape = shape_from_string(f.shape);
		ws.min_aliases = f.min_aliases;
		ws.max_aliases = f.max_aliases;
		std::ofstream w(f.workload);
		for (auto &q : generate_workload(db, ws)) {
			w << q.to_sql() << '\n';
		}
		if (!w) {
			throw DataError("cannot write workload " + f.workload);
		}
		out["workload"] = f.workload;
		out["queries"] = f.queries;
	}
	emit(out);
	return EXIT_OK;
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app {"Factor-graph join cardinality estimation"};
	app.require_subcommand(1);
	app.set_config("--config", "", "INI/TOML file with default flag values")->envname("FGCARD_CONFIG");

	TrainFlags train_flags;
	std::string model_path, train_format = "json";
	auto *train_cmd = app.add_subcommand("train", "build bins, summaries and estimators and write a model");
	add_train_flags(train_cmd, train_flags, false);
	train_cmd->add_option("--model", model_path, "output model file")->required();
	train_cmd->add_option("--format", train_format)->check(CLI::IsMember({"json", "table"}));

	QueryFlags est_flags;
	auto *est_cmd = app.add_subcommand("estimate", "estimate queries with a trained model");
	est_cmd->add_option("--model", est_flags.model)->required()->check(CLI::ExistingFile);
	est_cmd->add_option("--query", est_flags.query, "SQL text or JSON query");
	est_cmd->add_option("--workload", est_flags.workload, "file with one query per line")->check(CLI::ExistingFile);
	est_cmd->add_flag("--explain", est_flags.explain, "include the factor graph in the output");
	est_cmd->add_option("--joinhist", est_flags.joinhist, "use a join-histogram baseline instead")
	    ->check(CLI::IsMember({"classic", "with_bound", "with_conditional"}));
	est_cmd->add_option("--format", est_flags.format)->check(CLI::IsMember({"json", "table"}));

	QueryFlags sub_flags;
	auto *sub_cmd = app.add_subcommand("subplans", "estimate every connected sub-plan progressively");
	sub_cmd->add_option("--model", sub_flags.model)->required()->check(CLI::ExistingFile);
	sub_cmd->add_option("--query", sub_flags.query, "SQL text or JSON query");
	sub_cmd->add_option("--workload", sub_flags.workload, "file with one query per line")->check(CLI::ExistingFile);
	sub_cmd->add_option("--cap", sub_flags.cap, "maximum number of sub-plans (default: the model's cap)");
	sub_cmd->add_flag("--explain", sub_flags.explain);
	sub_cmd->add_option("--format", sub_flags.format)->check(CLI::IsMember({"json", "table"}));

	std::string upd_model, upd_data, upd_base, upd_format = "json";
	auto *upd_cmd = app.add_subcommand("update", "apply delta CSVs to a model with its bins frozen");
	upd_cmd->add_option("--model", upd_model)->required()->check(CLI::ExistingFile);
	upd_cmd->add_option("--data", upd_data, "directory of <table>.csv deltas (optional _op column: insert|delete)")
	    ->required()
	    ->check(CLI::ExistingDirectory);
	upd_cmd->add_option("--base", upd_base, "original training data, checked against the stored digests")
	    ->check(CLI::ExistingDirectory);
	upd_cmd->add_option("--format", upd_format)->check(CLI::IsMember({"json", "table"}));

	BenchFlags bench_flags;
	auto *bench_cmd = app.add_subcommand("bench", "compare configurations against exact counts");
	add_train_flags(bench_cmd, bench_flags.train, true);
	bench_cmd->add_option("--workload", bench_flags.train.workload, "query file (default: a generated workload)")
	    ->check(CLI::ExistingFile);
	bench_cmd->add_option("--queries", bench_flags.queries, "size of the generated workload")->capture_default_str();
	bench_cmd->add_option("--k", bench_flags.ks, "bins per key group")->delimiter(',');
	bench_cmd->add_option("--strategy", bench_flags.strategies)
	    ->delimiter(',')
	    ->check(CLI::IsMember({"gbsa", "width", "depth"}));
	bench_cmd->add_option("--estimator", bench_flags.estimators)
	    ->delimiter(',')
	    ->check(CLI::IsMember({"truescan", "sample", "chowliu"}));
	bench_cmd->add_flag("--joinhist", bench_flags.joinhist, "add the join-histogram variants to every cell");
	bench_cmd->add_option("--format", bench_flags.format)->check(CLI::IsMember({"json", "table"}));

	GenFlags gen_flags;
	auto *gen_cmd = app.add_subcommand("gen", "write a synthetic database (and optionally a workload)");
	gen_cmd->add_option("--out", gen_flags.out, "output directory")->required();
	gen_cmd->add_option("--spec", gen_flags.spec, "generator spec (JSON)")->check(CLI::ExistingFile);
	gen_cmd->add_option("--preset", gen_flags.preset)->check(CLI::IsMember({"star", "chain"}))->capture_default_str();
	gen_cmd->add_option("--tables", gen_flags.tables, "dimensions (star) or tables (chain)")->capture_default_str();
	gen_cmd->add_option("--rows", gen_flags.rows)->capture_default_str();
	gen_cmd->add_option("--dim-rows", gen_flags.dim_rows)->capture_default_str();
	gen_cmd->add_option("--skew", gen_flags.skew, "Zipf exponent of foreign keys")->capture_default_str();
	gen_cmd->add_option("--seed", gen_flags.seed)->capture_default_str();
	gen_cmd->add_option("--queries", gen_flags.queries, "also generate this many queries");
	gen_cmd->add_option("--workload", gen_flags.workload, "where to write the generated queries");
	gen_cmd->add_option("--shape", gen_flags.shape)
	    ->check(CLI::IsMember({"chain", "star", "self", "cyclic", "any"}))
	    ->capture_default_str();
	gen_cmd->add_option("--min-aliases", gen_flags.min_aliases)->capture_default_str();
	gen_cmd->add_option("--max-aliases", gen_flags.max_aliases)->capture_default_str();

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		int rc = app.exit(e);
		return rc == 0 ? EXIT_OK : EXIT_USAGE;
	}

	try {
		if (*train_cmd) {
			return run_train(train_flags, model_path, train_format);
		}
		if (*est_cmd) {
			return run_estimate(est_flags);
		}
		if (*sub_cmd) {
			return run_subplans(sub_flags);
		}
		if (*upd_cmd) {
			return run_update(upd_model, upd_data, upd_base, upd_format);
		}
		if (*bench_cmd) {
			return run_bench(bench_flags);
		}
		if (*gen_cmd) {
			return run_gen(gen_flags);
		}
	} catch (const UsageError &e) {
		std::cerr << "error: " << e.what() << '\n';
		return EXIT_USAGE;
	} catch (const std::invalid_argument &e) {
		std::cerr << "error: " << e.what() << '\n';
		return EXIT_USAGE;
	} catch (const Error &e) {
		std::cerr << "error: " << e.what() << '\n';
		return EXIT_DATA;
	} catch (const std::exception &e) {
		std::cerr << "internal error: " << e.what() << '\n';
		return EXIT_INTERNAL;
	}
	return EXIT_USAGE;
}
