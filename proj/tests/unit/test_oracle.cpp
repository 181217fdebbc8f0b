#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fgcard/error.hpp"
#include "fgcard/oracle.hpp"
#include "test_helpers.hpp"

using namespace fgcard;

namespace {

std::string slurp(const std::filesystem::path &p) {
	std::ifstream in(p, std::ios::binary);
	std::ostringstream s;
	s << in.rdbuf();
	return s.str();
}

std::filesystem::path scratch(const std::string &name) {
	auto p = std::filesystem::temp_directory_path() / ("fgcard_test_" + name);
	std::filesystem::remove_all(p);
	return p;
}

} // namespace

TEST_SUITE("oracle") {
	TEST_CASE("exact counts on the two-table example") {
		auto db = testing::two_table_database();
		auto q = parse_sql("SELECT COUNT(*) FROM A a, B b WHERE a.id = b.aid", db.catalog);
		CHECK(exact_cardinality(q, db) == 83);
		CHECK(nested_loop_cardinality(q, db) == 83);
		auto none = parse_sql("SELECT COUNT(*) FROM A a, B b WHERE a.id = b.aid AND a.a1 > 99", db.catalog);
		CHECK(exact_cardinality(none, db) == 0);
		auto cross = parse_sql("SELECT COUNT(*) FROM A a, B b", db.catalog);
		CHECK(exact_cardinality(cross, db) == 16 * 24);
	}

	TEST_CASE("self join on a primary key returns the row count") {
		auto db = generate_db(chain_spec(2, 150, 1.0, 3));
		auto q = parse_sql("SELECT COUNT(*) FROM T0 x, T0 y WHERE x.id = y.id", db.catalog);
		CHECK(exact_cardinality(q, db) == 150);
	}

	TEST_CASE("exact counter agrees with nested loops") {
		std::vector<SyntheticSpec> specs {chain_spec(3, 40, 1.2, 1), star_spec(2, 60, 12, 1.0, 2)};
		specs[0].tables[1].keys[1].null_fraction = 0.1;
		for (auto &spec : specs) {
			auto db = generate_db(spec);
			for (auto shape : {QueryTemplate::Chain, QueryTemplate::Star, QueryTemplate::SelfJoin,
			                   QueryTemplate::Cyclic, QueryTemplate::Any}) {
				WorkloadSpec ws;
				ws.queries = 8;
				ws.min_aliases = 2;
				ws.max_aliases = 4;
				ws.shape = shape;
				ws.seed = 17 + static_cast<uint64_t>(shape);
				for (auto &q : generate_workload(db, ws)) {
					CHECK_MESSAGE(exact_cardinality(q, db) == nested_loop_cardinality(q, db), q.to_sql());
				}
			}
		}
	}

	TEST_CASE("workload shapes") {
		auto db = generate_db(star_spec(3, 200, 20, 1.0, 4));
		WorkloadSpec ws;
		ws.queries = 20;
		ws.min_aliases = 3;
		ws.max_aliases = 5;
		ws.seed = 9;
		ws.shape = QueryTemplate::Cyclic;
		for (auto &q : generate_workload(db, ws)) {
			CHECK(build_join_graph(q, db.catalog).is_cyclic);
			CHECK(q.aliases.size() >= 3);
			CHECK(q.aliases.size() <= 5);
		}
		ws.shape = QueryTemplate::SelfJoin;
		for (auto &q : generate_workload(db, ws)) {
			CHECK(build_join_graph(q, db.catalog).has_self_join);
		}
		ws.shape = QueryTemplate::Chain;
		auto a = generate_workload(db, ws), b = generate_workload(db, ws);
		CHECK(a == b);
	}

	TEST_CASE("generator is deterministic and ingestible") {
		auto spec = star_spec(2, 300, 25, 1.5, 77);
		auto d1 = generate_db(spec), d2 = generate_db(spec);
		auto p1 = scratch("gen1"), p2 = scratch("gen2");
		write_database(d1, p1);
		write_database(d2, p2);
		for (auto &t : d1.tables) {
			auto name = t.def.name + ".csv";
			CHECK(slurp(p1 / name) == slurp(p2 / name));
		}
		auto loaded = load_database(load_schema_file(p1 / "schema.json"), p1);
		CHECK(loaded.stores == d1.stores);
		for (size_t i = 0; i < d1.tables.size(); ++i) {
			CHECK(loaded.tables[i].num_rows() == d1.tables[i].num_rows());
		}
		auto spec2 = SyntheticSpec::from_json(spec.to_json());
		CHECK(spec2.to_json() == spec.to_json());
		std::filesystem::remove_all(p1);
		std::filesystem::remove_all(p2);
	}

	TEST_CASE("zipf skew controls key frequencies") {
		SyntheticSpec s;
		s.seed = 2024;
		s.tables = {{"Z", 10000, {{"k", 1000, 1.5}}, {}}, {"U", 100000, {{"k", 10, 0.0}}, {}}};
		auto db = generate_db(s);
		auto counts = [](const ValueCountStore &st) {
			std::vector<int64_t> c;
			for (auto &[v, n] : st.counts()) {
				c.push_back(n);
			}
			std::sort(c.begin(), c.end());
			return c;
		};
		auto z = counts(db.stores.at(KeyRef {"Z", "k"}));
		CHECK(z.back() > 10 * z[z.size() / 2]);
		CHECK(z.back() == 3864);
		auto u = counts(db.stores.at(KeyRef {"U", "k"}));
		CHECK(static_cast<double>(u.back()) / static_cast<double>(u.front()) < 1.1);
	}

	TEST_CASE("nearest-rank percentiles") {
		std::mt19937_64 rng(5);
		for (int trial = 0; trial < 20; ++trial) {
			size_t n = 1 + trial * 7;
			std::vector<double> v(n);
			for (auto &x : v) {
				x = std::uniform_real_distribution<double>(0, 10)(rng);
			}
			auto sorted = v;
			std::sort(sorted.begin(), sorted.end());
			for (double p : {50.0, 95.0, 99.0, 100.0}) {
				size_t rank = 0;
				while (static_cast<double>(rank) * 100.0 < p * static_cast<double>(n)) {
					++rank;
				}
				CHECK(nearest_rank(v, p) == sorted[rank - 1]);
			}
		}
		CHECK(nearest_rank({3, 1, 2}, 50) == 2);
		CHECK_THROWS_AS(nearest_rank({1}, 0), std::invalid_argument);
	}

	TEST_CASE("metrics exclude zero-truth and failed queries") {
		std::vector<QueryOutcome> o(5);
		o[0].estimate = 10, o[0].truth = 5, o[0].ratio = 2;
		o[1].estimate = 4, o[1].truth = 8, o[1].ratio = 0.5;
		o[2].estimate = 3, o[2].truth = 3, o[2].ratio = 1;
		o[3].estimate = 2, o[3].zero_truth = true, o[3].ratio = 3;
		o[4].failed = true;
		auto m = summarize_outcomes(o);
		CHECK(m.p50 == 1.0);
		CHECK(m.p99 == 2.0);
		CHECK(m.zero_truth == 1);
		CHECK(m.failed == 1);
		CHECK(m.under_fraction == doctest::Approx(1.0 / 3.0));
		CHECK(m.p50 <= m.p95);
		CHECK(m.p95 <= m.p99);
		CHECK(m.to_json()["queries"] == 5);
		CHECK(m.table().find("p50") != std::string::npos);
	}

	TEST_CASE("singleton truescan workloads are exact") {
		auto db = generate_db(chain_spec(2, 300, 1.2, 6));
		RunConfig cfg;
		cfg.estimator = EstimatorKind::TrueScan;
		cfg.total_bins = 1000;
		auto m = train(db, cfg);
		WorkloadSpec ws;
		ws.queries = 25;
		ws.min_aliases = ws.max_aliases = 2;
		ws.shape = QueryTemplate::Chain;
		auto metrics = evaluate_workload(m, generate_workload(db, ws), db);
		for (auto &o : metrics.outcomes) {
			CHECK_FALSE(o.failed);
			if (!o.zero_truth) {
				CHECK(o.ratio == 1.0);
			}
		}
	}
}
