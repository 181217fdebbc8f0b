#include <algorithm>
#include <bit>
#include <functional>
#include <random>

#include "doctest.h"
#include "fgcard/error.hpp"
#include "fgcard/factorgraph.hpp"
#include "fgcard/oracle.hpp"
#include "test_helpers.hpp"

using namespace fgcard;
using fgcard::testing::two_table_database;

namespace {

//! One-variable factor with a single bin (plus the null state).
Factor one_bin(double total, double mfv) {
	Factor f;
	f.vars = {0};
	f.dims = {2};
	f.mass = {total, 0.0};
	f.mfv = {{mfv, 0.0}};
	return f;
}

//! Largest sum over values of prod_f c_f(v) for any count vectors with the given totals and per-value caps.
double brute_max_bin(const std::vector<int> &totals, const std::vector<int> &caps, int values) {
	std::vector<std::vector<std::vector<int>>> options(totals.size());
	for (size_t f = 0; f < totals.size(); ++f) {
		std::vector<int> c(values, 0);
		std::function<void(int, int)> rec = [&](int i, int left) {
			if (i == values) {
				if (left == 0) {
					options[f].push_back(c);
				}
				return;
			}
			for (int x = 0; x <= std::min(left, caps[f]); ++x) {
				c[i] = x;
				rec(i + 1, left - x);
			}
		};
		rec(0, totals[f]);
	}
	double best = 0;
	std::vector<size_t> pick(totals.size(), 0);
	std::function<void(size_t)> rec = [&](size_t f) {
		if (f == totals.size()) {
			double s = 0;
			for (int v = 0; v < values; ++v) {
				double p = 1;
				for (size_t g = 0; g < totals.size(); ++g) {
					p *= options[g][pick[g]][v];
				}
				s += p;
			}
			best = std::max(best, s);
			return;
		}
		for (size_t i = 0; i < options[f].size(); ++i) {
			pick[f] = i;
			rec(f + 1);
		}
	};
	rec(0);
	return best;
}

RunConfig truescan_config(int total_bins) {
	RunConfig c;
	c.estimator = EstimatorKind::TrueScan;
	c.total_bins = total_bins;
	return c;
}

QueryIR parse(const Model &m, const std::string &sql) {
	return parse_sql(sql, m.catalog);
}

} // namespace

TEST_SUITE("factorgraph") {
	TEST_CASE("min rule on one bin") {
		Factor a = one_bin(16, 8), b = one_bin(24, 6);
		const Factor *fs[] = {&a, &b};
		auto out = eliminate_variable(fs, 0);
		CHECK(out.vars.empty());
		CHECK(out.mass.at(0) == 96.0);
	}

	TEST_CASE("three-way rule and its brute-force ceiling") {
		Factor a = one_bin(4, 2), b = one_bin(6, 3), c = one_bin(9, 3);
		const Factor *fs[] = {&a, &b, &c};
		auto out = eliminate_variable(fs, 0);
		CHECK(out.mass.at(0) == 36.0);
		double realized = brute_max_bin({4, 6, 9}, {2, 3, 3}, 4);
		CHECK(realized <= 36.0);
		CHECK(realized > 0.0);
	}

	TEST_CASE("two-way rule dominates every realization") {
		std::mt19937_64 rng(3);
		for (int trial = 0; trial < 40; ++trial) {
			int ta = std::uniform_int_distribution<int>(1, 9)(rng), tb = std::uniform_int_distribution<int>(1, 9)(rng);
			int va = std::uniform_int_distribution<int>((ta + 3) / 4, ta)(rng);
			int vb = std::uniform_int_distribution<int>((tb + 3) / 4, tb)(rng);
			Factor a = one_bin(ta, va), b = one_bin(tb, vb);
			const Factor *fs[] = {&a, &b};
			double bound = eliminate_variable(fs, 0).mass.at(0);
			CHECK(brute_max_bin({ta, tb}, {va, vb}, 4) <= bound);
		}
	}

	TEST_CASE("empty bins contribute nothing") {
		Factor a = one_bin(16, 0), b = one_bin(24, 6);
		const Factor *fs[] = {&a, &b};
		CHECK(eliminate_variable(fs, 0).mass.at(0) == 0.0);
		Factor z = one_bin(0, 0);
		const Factor *gs[] = {&z, &b};
		CHECK(eliminate_variable(gs, 0).mass.at(0) == 0.0);
	}

	TEST_CASE("joined factor keeps a sound most-frequent bound") {
		// A over (V0, V1), B over V0; join on V0 keeping V1
		Factor a;
		a.vars = {0, 1};
		a.dims = {3, 2};
		a.mass = {4, 1, 2, 0, 0, 3};
		a.mfv = {{2, 1, 0}, {3, 0}};
		Factor b;
		b.vars = {0};
		b.dims = {3};
		b.mass = {6, 5, 1};
		b.mfv = {{3, 5, 0}};
		const Factor *fs[] = {&a, &b};
		auto out = join_factors(fs, 0, false, BinRule::Bound);
		REQUIRE(out.vars == std::vector<int> {1});
		// V1 = 0: min(4/2, 6/3)*2*3 + min(2/1, 5/5)*1*5; rows with a null V1 still join on V0
		CHECK(out.mass == std::vector<double> {17, 3});
		// V1's bound times the largest V0 bound of B
		CHECK(out.mfv[0] == std::vector<double> {15, 0});

		auto open = join_factors(fs, 0, true, BinRule::Bound);
		REQUIRE(open.vars == std::vector<int> {0, 1});
		CHECK(open.mass == std::vector<double> {12, 3, 5, 0, 0, 0});
		CHECK(open.mfv[0] == std::vector<double> {6, 5, 0});
	}

	TEST_CASE("mismatched bins are rejected") {
		Factor a = one_bin(1, 1);
		Factor b;
		b.vars = {0};
		b.dims = {3};
		b.mass = {1, 1, 0};
		b.mfv = {{1, 1, 0}};
		const Factor *fs[] = {&a, &b};
		CHECK_THROWS_AS(eliminate_variable(fs, 0), EstimationError);
	}

	TEST_CASE("relabel takes the diagonal and sum_out marginalizes") {
		Factor f;
		f.vars = {0, 1};
		f.dims = {3, 3};
		f.mass = {1, 2, 3, 4, 5, 6, 7, 8, 9};
		f.mfv = {{1, 2, 0}, {3, 1, 0}};
		auto d = relabel(f, {5, 5});
		CHECK(d.vars == std::vector<int> {5});
		CHECK(d.mass == std::vector<double> {1, 5, 0});
		CHECK(d.mfv[0] == std::vector<double> {1, 1, 0});
		auto swapped = relabel(f, {2, 1});
		CHECK(swapped.vars == std::vector<int> {1, 2});
		CHECK(swapped.mass == std::vector<double> {1, 4, 7, 2, 5, 8, 3, 6, 9});
		CHECK(sum_out(f, 1, true).mass == std::vector<double> {6, 15, 24});
		CHECK(sum_out(f, 1, false).mass == std::vector<double> {3, 9, 15});
		CHECK(sum_out(f, 0, false).mass == std::vector<double> {5, 7, 9});
	}

	TEST_CASE("single bin bound and singleton exactness") {
		auto db = two_table_database();
		const char *sql = "SELECT COUNT(*) FROM A a, B b WHERE a.id = b.aid";
		auto one = train(db, truescan_config(1));
		REQUIRE(one.bin_budget() == 1);
		CHECK(estimate(parse(one, sql), one).estimate == 96.0);

		auto fine = train(db, truescan_config(10));
		CHECK(fine.bins.begin()->second.num_bins() == 6);
		CHECK(estimate(parse(fine, sql), fine).estimate == 83.0);
		CHECK(exact_cardinality(parse(fine, sql), db) == 83);

		CHECK(estimate(parse(fine, "SELECT COUNT(*) FROM A a, B b WHERE a.id = b.aid AND a.a1 > 100"), fine).estimate ==
		      0.0);
		CHECK(estimate(parse(fine, "SELECT COUNT(*) FROM A a WHERE a.a1 < 2"), fine).estimate ==
		      static_cast<double>(exact_cardinality(parse(fine, "SELECT COUNT(*) FROM A a WHERE a.a1 < 2"), db)));
	}

	TEST_CASE("join histogram modes") {
		auto db = two_table_database();
		auto one = train(db, truescan_config(1));
		auto q = parse(one, "SELECT COUNT(*) FROM A a, B b WHERE a.id = b.aid");
		CHECK(joinhist_estimate(q, one, JoinHistMode::Classic).estimate == doctest::Approx(76.8).epsilon(1e-12));
		CHECK(joinhist_estimate(q, one, JoinHistMode::WithBound).estimate == estimate(q, one).estimate);
		CHECK(joinhist_estimate(q, one, JoinHistMode::WithConditional).estimate ==
		      doctest::Approx(76.8).epsilon(1e-12));

		// independence scales by the filter selectivity
		auto f = parse(one, "SELECT COUNT(*) FROM A a, B b WHERE a.id = b.aid AND a.a1 = 0");
		double sel = static_cast<double>(exact_cardinality(parse(one, "SELECT COUNT(*) FROM A a WHERE a.a1 = 0"), db)) /
		             16.0;
		CHECK(joinhist_estimate(f, one, JoinHistMode::Classic).estimate ==
		      doctest::Approx(76.8 * sel).epsilon(1e-12));
		CHECK(to_string(joinhist_mode_from_string("with_bound")) == "with_bound");
		CHECK_THROWS_AS(joinhist_mode_from_string("both"), std::invalid_argument);
	}

	TEST_CASE("elimination order") {
		auto graph_of = [](std::vector<std::vector<int>> vars) {
			FactorGraph fg;
			for (auto &v : vars) {
				FactorNode n;
				n.factor.vars = v;
				fg.factors.push_back(n);
			}
			return fg;
		};
		CHECK(elimination_order(graph_of({{0}, {0, 1}, {1}})) == std::vector<int> {0, 1});
		CHECK(elimination_order(graph_of({{0, 1}, {0, 2}, {0}, {0}, {1}, {2}})) == std::vector<int> {1, 2, 0});
		CHECK(elimination_order(graph_of({{0}, {0}})) == std::vector<int> {0});
	}

	TEST_CASE("four-table cyclic query graph") {
		auto cat = load_schema(nlohmann::json::parse(R"({
			"tables": [
				{"name": "A", "columns": [{"name": "id", "kind": "key"}, {"name": "id2", "kind": "key"}]},
				{"name": "B", "columns": [{"name": "Aid", "kind": "key"}, {"name": "Cid", "kind": "key"},
				                          {"name": "attr1", "kind": "categorical"}]},
				{"name": "C", "columns": [{"name": "id", "kind": "key"}, {"name": "Aid2", "kind": "key"},
				                          {"name": "attr2", "kind": "integer"}]},
				{"name": "D", "columns": [{"name": "Cid", "kind": "key"}]}
			],
			"joins": ["A.id=B.Aid", "A.id2=C.Aid2", "C.id=B.Cid", "C.id=D.Cid"]
		})"));
		SyntheticSpec spec;
		spec.seed = 5;
		spec.tables = {{"A", 60, {{"id", 60, 0, true}, {"id2", 30, 1.0}}, {}},
		               {"B", 80, {{"Aid", 60, 1.2}, {"Cid", 40, 0.5}}, {{"attr1", ColumnKind::Categorical, 3}}},
		               {"C", 40, {{"id", 40, 0, true}, {"Aid2", 30, 0.8}}, {{"attr2", ColumnKind::Integer, 200}}},
		               {"D", 70, {{"Cid", 40, 1.1}}, {}}};
		spec.joins = {"A.id=B.Aid", "A.id2=C.Aid2", "C.id=B.Cid", "C.id=D.Cid"};
		auto db = generate_db(spec);
		REQUIRE(db.catalog.groups.size() == cat.groups.size());

		RunConfig cfg = truescan_config(12);
		auto m = train(db, cfg);
		auto q = parse_sql("SELECT COUNT(*) FROM A, B, C, D WHERE A.id = B.Aid AND A.id2 = C.Aid2 AND B.Cid = C.id "
		                   "AND C.id = D.Cid AND C.attr2 < 100",
		                   m.catalog);
		auto g = build_join_graph(q, m.catalog);
		auto fg = build_factor_graph(q, g, m);
		CHECK(fg.factors.size() == 4);
		CHECK(fg.variables.size() == 3);
		CHECK(fg.factors[0].alias == "A");
		CHECK(fg.factors[0].factor.vars.size() == 2);
		CHECK(g.is_cyclic);
		double est = estimate(q, m).estimate;
		CHECK(est >= static_cast<double>(exact_cardinality(q, db)));
		CHECK_THROWS_AS(joinhist_estimate(q, m, JoinHistMode::Classic), EstimationError);
	}

	TEST_CASE("upper bound holds on random workloads") {
		std::vector<SyntheticSpec> specs {chain_spec(4, 120, 1.2, 11), star_spec(3, 300, 40, 1.5, 12)};
		size_t checked = 0;
		for (auto &spec : specs) {
			auto db = generate_db(spec);
			for (int k : {1, 5, 40}) {
				auto m = train(db, truescan_config(k * static_cast<int>(db.catalog.groups.size())));
				for (auto shape : {QueryTemplate::Chain, QueryTemplate::Star, QueryTemplate::SelfJoin,
				                   QueryTemplate::Cyclic}) {
					WorkloadSpec ws;
					ws.queries = 6;
					ws.min_aliases = 2;
					ws.max_aliases = 4;
					ws.shape = shape;
					ws.seed = static_cast<uint64_t>(k) * 31 + static_cast<uint64_t>(shape);
					for (auto &q : generate_workload(db, ws)) {
						uint64_t truth = exact_cardinality(q, db);
						for (auto mode : {MfvMode::Unconditioned, MfvMode::Conditioned}) {
							EstimateOptions o;
							o.mfv = mode;
							double est = estimate(q, m, o).estimate;
							CHECK_MESSAGE(est >= static_cast<double>(truth) * (1 - 1e-12), q.to_sql());
						}
						++checked;
					}
				}
			}
		}
		CHECK(checked == 2 * 3 * 4 * 6);
	}

	TEST_CASE("two-table estimates are exact with singleton bins") {
		auto db = generate_db(star_spec(2, 400, 30, 1.3, 21));
		auto m = train(db, truescan_config(200));
		for (auto &b : m.bins) {
			REQUIRE(static_cast<size_t>(b.second.num_bins()) == b.second.values().size());
		}
		WorkloadSpec ws;
		ws.queries = 20;
		ws.min_aliases = ws.max_aliases = 2;
		ws.shape = QueryTemplate::Any;
		ws.seed = 4;
		for (auto &q : generate_workload(db, ws)) {
			if (build_join_graph(q, m.catalog).is_cyclic) {
				continue;
			}
			CHECK(estimate(q, m).estimate == static_cast<double>(exact_cardinality(q, db)));
		}
	}

	TEST_CASE("progressive sub-plans") {
		auto db = generate_db(chain_spec(3, 200, 1.1, 8));
		auto m = train(db, truescan_config(30));
		auto q = parse(m, "SELECT COUNT(*) FROM T0 x, T1 y, T2 z WHERE x.id = y.prev AND y.id = z.prev AND y.a < 30");
		auto res = progressive_estimate(q, m);
		REQUIRE(res.plans.size() == 6);
		CHECK_FALSE(res.truncated);
		for (size_t i = 0; i < res.plans.size(); ++i) {
			auto &plan = res.plans[i];
			double fresh = fresh_subplan_estimate(q, m, plan.mask);
			CHECK(res.reports[i].estimate == fresh);
			auto sub = q.restrict_to(res.reports[i].aliases);
			if (plan.aliases.size() <= 2) {
				CHECK(res.reports[i].estimate == estimate(sub, m).estimate);
			}
			CHECK(res.reports[i].estimate >= static_cast<double>(exact_cardinality(sub, db)));
		}
		CHECK(res.reports.back().subplan == "x,y,z");
		CHECK(res.reports.back().estimate == estimate(q, m).estimate);
	}

	TEST_CASE("progressive clique with approximate estimators") {
		auto db = generate_db(star_spec(1, 500, 50, 1.4, 9));
		for (auto kind : {EstimatorKind::TrueScan, EstimatorKind::Sample, EstimatorKind::ChowLiu}) {
			RunConfig cfg;
			cfg.estimator = kind;
			cfg.rate = 0.5;
			cfg.total_bins = 8;
			auto m = train(db, cfg);
			auto q = parse(m, "SELECT COUNT(*) FROM F f1, F f2, F f3, F f4 WHERE f1.d0 = f2.d0 AND f1.d0 = f3.d0 AND "
			                  "f1.d0 = f4.d0 AND f2.d0 = f3.d0 AND f2.d0 = f4.d0 AND f3.d0 = f4.d0 AND f2.x < 50");
			auto res = progressive_estimate(q, m);
			REQUIRE(res.plans.size() == 15);
			for (size_t i = 0; i < res.plans.size(); ++i) {
				double fresh = fresh_subplan_estimate(q, m, res.plans[i].mask);
				CHECK(res.reports[i].estimate == fresh);
				if (res.plans[i].aliases.size() <= 2) {
					double indep = estimate(q.restrict_to(res.reports[i].aliases), m).estimate;
					CHECK(res.reports[i].estimate == doctest::Approx(indep).epsilon(1e-9));
				}
			}
		}
	}

	TEST_CASE("progressive truncation and self conditions") {
		auto db = generate_db(chain_spec(4, 100, 0.8, 2));
		auto m = train(db, truescan_config(40));
		auto q = parse(m, "SELECT COUNT(*) FROM T0 a, T1 b, T2 c, T3 d WHERE a.id = b.prev AND b.id = c.prev AND "
		                  "c.id = d.prev");
		auto res = progressive_estimate(q, m, 6);
		CHECK(res.truncated);
		CHECK(res.plans.size() == 6);
		CHECK(res.reports.size() == 6);
	}

	TEST_CASE("estimates are deterministic and explainable") {
		auto db = two_table_database();
		auto m = train(db, truescan_config(3));
		auto q = parse(m, "SELECT COUNT(*) FROM A a, B b WHERE a.id = b.aid AND b.b1 >= 2");
		EstimateOptions o;
		o.explain = true;
		auto r1 = estimate(q, m, o), r2 = estimate(q, m, o);
		CHECK(r1.estimate == r2.estimate);
		REQUIRE(r1.explain);
		auto &j = *r1.explain;
		CHECK(j["factors"].size() == 2);
		CHECK(j["variables"].size() == 1);
		CHECK(j["elimination_order"] == nlohmann::json::array({0}));
		CHECK(j["edges"].size() == 2);
		auto rj = r1.to_json();
		CHECK(rj["estimator"] == "truescan");
		CHECK(rj["bin_budget"] == m.bin_budget());
		CHECK(rj["subplan"] == "a,b");
	}
}
