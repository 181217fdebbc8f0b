#include "doctest.h"
#include "fgcard/binning.hpp"
#include "fgcard/error.hpp"
#include "test_helpers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace fgcard;
using fgcard::testing::store_of;

namespace {

// straightforward two-pass population variance of the non-zero counts
double reference_variance(const std::vector<int64_t> &counts) {
	std::vector<double> nz;
	for (auto c : counts) {
		if (c != 0) {
			nz.push_back(static_cast<double>(c));
		}
	}
	if (nz.size() < 2) {
		return 0.0;
	}
	double mean = 0;
	for (auto x : nz) {
		mean += x;
	}
	mean /= static_cast<double>(nz.size());
	double acc = 0;
	for (auto x : nz) {
		acc += (x - mean) * (x - mean);
	}
	return acc / static_cast<double>(nz.size());
}

// exhaustive search for the best cut by summed variance, ties by balance then leftmost
size_t reference_dichotomy(const std::vector<int64_t> &counts) {
	size_t best = 1;
	double best_cost = INFINITY;
	int64_t best_imbalance = 0;
	int64_t total = 0;
	for (auto c : counts) {
		total += c;
	}
	for (size_t cut = 1; cut < counts.size(); ++cut) {
		std::vector<int64_t> l(counts.begin(), counts.begin() + cut), r(counts.begin() + cut, counts.end());
		double cost = reference_variance(l) + reference_variance(r);
		int64_t lm = 0;
		for (auto c : l) {
			lm += c;
		}
		int64_t imbalance = std::abs(total - 2 * lm);
		if (cost < best_cost - 1e-9 || (std::abs(cost - best_cost) <= 1e-9 && imbalance < best_imbalance)) {
			best = cut;
			best_cost = cost;
			best_imbalance = imbalance;
		}
	}
	return best;
}

std::set<std::set<int64_t>> partition_of(const BinMap &map) {
	std::map<int, std::set<int64_t>> by_bin;
	for (size_t i = 0; i < map.values().size(); ++i) {
		by_bin[map.bins()[i]].insert(map.values()[i]);
	}
	std::set<std::set<int64_t>> out;
	for (auto &[b, vs] : by_bin) {
		out.insert(vs);
	}
	return out;
}

} // namespace

TEST_SUITE("binning") {
	TEST_CASE("variance of non-zero counts") {
		std::vector<int64_t> c {5, 5, 1, 1, 0};
		CHECK(count_variance(c) == doctest::Approx(4.0));
		CHECK(count_variance(std::vector<int64_t> {7}) == 0.0);
		std::mt19937_64 rng(7);
		for (int trial = 0; trial < 50; ++trial) {
			std::vector<int64_t> v(1 + rng() % 20);
			for (auto &x : v) {
				x = static_cast<int64_t>(rng() % 1000);
			}
			CHECK(count_variance(v) == doctest::Approx(reference_variance(v)));
		}
	}

	TEST_CASE("dichotomy matches exhaustive search") {
		std::mt19937_64 rng(11);
		for (int trial = 0; trial < 200; ++trial) {
			std::vector<int64_t> v(2 + rng() % 12);
			for (auto &x : v) {
				x = 1 + static_cast<int64_t>(rng() % 30);
			}
			std::sort(v.begin(), v.end());
			CHECK(min_variance_dichotomy(v) == reference_dichotomy(v));
		}
	}

	TEST_CASE("min-variance bins separate heavy and light values") {
		auto bins = min_variance_bins({{1, 5}, {2, 5}, {3, 1}, {4, 1}}, 2);
		REQUIRE(bins.size() == 2);
		std::set<std::set<int64_t>> got;
		for (auto &b : bins) {
			got.insert(std::set<int64_t>(b.begin(), b.end()));
		}
		CHECK(got == std::set<std::set<int64_t>> {{1, 2}, {3, 4}});
	}

	TEST_CASE("equal-width boundaries") {
		ValueCountStore s;
		for (int64_t v = 1; v <= 100; ++v) {
			s.add(v, 1);
		}
		auto map = equal_width_bins(0, {&s}, 4);
		CHECK(map.num_bins() == 4);
		CHECK(map.bin_of(25) == 0);
		CHECK(map.bin_of(26) == 1);
		CHECK(map.bin_of(50) == 1);
		CHECK(map.bin_of(51) == 2);
		CHECK(map.bin_of(75) == 2);
		CHECK(map.bin_of(76) == 3);
	}

	TEST_CASE("equal-depth isolates the dominant value") {
		auto s = store_of({{1, 97}, {2, 1}, {3, 1}, {4, 1}});
		auto map = equal_depth_bins(0, {&s}, 2);
		CHECK(partition_of(map) == std::set<std::set<int64_t>> {{1}, {2, 3, 4}});
	}

	TEST_CASE("bin budget follows workload usage") {
		auto a = allocate_bin_budget({{0, 3}, {1, 1}}, 100);
		CHECK(a == std::map<int, int> {{0, 75}, {1, 25}});
		auto b = allocate_bin_budget({{1, 1}, {2, 1}, {3, 1}}, 100);
		CHECK(b == std::map<int, int> {{1, 34}, {2, 33}, {3, 33}});
		auto c = allocate_bin_budget({{0, 0}, {1, 0}}, 10);
		CHECK(c == std::map<int, int> {{0, 5}, {1, 5}});
		auto d = allocate_bin_budget({{0, 1000}, {1, 1}}, 10);
		CHECK(d.at(1) >= 1);
		CHECK(d.at(0) + d.at(1) == 10);
	}

	TEST_CASE("single-bin summary") {
		auto a = store_of({{1, 8}, {2, 4}, {3, 3}, {6, 1}});
		auto map = single_bin(0, {&a});
		auto s = summarize_bins(a, map);
		CHECK(s.total == std::vector<int64_t> {16});
		CHECK(s.mfv == std::vector<int64_t> {8});
		CHECK(s.ndv == std::vector<int64_t> {4});
	}

	TEST_CASE("update under a frozen bin map") {
		auto a = store_of({{1, 8}, {2, 4}, {3, 3}, {6, 1}});
		auto map = single_bin(0, {&a});
		auto s = summarize_bins(a, map);
		apply_update(a, s, map, KeyDelta {{1, 1, 1}, {}});
		CHECK(s.total[0] == 19);
		CHECK(s.mfv[0] == 11);

		auto before_store = a;
		auto before_summary = s;
		CHECK_THROWS_AS(apply_update(a, s, map, KeyDelta {{}, {6, 6}}), DataError);
		CHECK(a == before_store);
		CHECK(s == before_summary);

		// unseen value goes to the nearest known value's bin
		apply_update(a, s, map, KeyDelta {{100}, {}});
		CHECK(s.total[0] == 20);
	}

	TEST_CASE("unseen values use the nearest known bin") {
		auto map = BinMap::from_assignment(0, BinStrategy::EqualWidth, {{10, 0}, {20, 1}, {30, 2}});
		CHECK(map.bin_of(-5) == 0);
		CHECK(map.bin_of(15) == 0);
		CHECK(map.bin_of(16) == 1);
		CHECK(map.bin_of(26) == 2);
		CHECK(map.bin_of(99) == 2);
		CHECK(!map.find(15).has_value());
	}

	TEST_CASE("gbsa invariants on random groups") {
		std::mt19937_64 rng(3);
		for (int trial = 0; trial < 30; ++trial) {
			int nkeys = 1 + static_cast<int>(rng() % 3);
			std::vector<ValueCountStore> stores(nkeys);
			std::set<int64_t> domain;
			for (auto &s : stores) {
				int n = 1 + static_cast<int>(rng() % 40);
				for (int i = 0; i < n; ++i) {
					int64_t v = static_cast<int64_t>(rng() % 60);
					s.add(v, 1 + static_cast<int64_t>(rng() % 9));
					domain.insert(v);
				}
			}
			std::vector<const ValueCountStore *> ptrs;
			for (auto &s : stores) {
				ptrs.push_back(&s);
			}
			int k = 2 + static_cast<int>(rng() % 30);
			auto map = gbsa(0, ptrs, k);
			CHECK(map.num_bins() >= 1);
			CHECK(map.num_bins() <= k);
			CHECK(std::set<int64_t>(map.values().begin(), map.values().end()) == domain);
			CHECK(gbsa(0, ptrs, k) == map);
			std::set<int> used(map.bins().begin(), map.bins().end());
			CHECK(static_cast<int>(used.size()) == map.num_bins());
			for (auto &s : stores) {
				auto sum = summarize_bins(s, map);
				int64_t total = 0;
				for (size_t b = 0; b < sum.num_bins(); ++b) {
					total += sum.total[b];
					CHECK(sum.mfv[b] <= sum.total[b]);
					CHECK(sum.mfv[b] * sum.ndv[b] >= sum.total[b]);
				}
				CHECK(total == s.total());
			}
		}
	}

	TEST_CASE("gbsa with enough bins yields singletons") {
		auto a = store_of({{1, 8}, {2, 4}, {3, 3}, {6, 1}});
		auto b = store_of({{1, 6}, {2, 5}, {3, 5}, {5, 4}, {6, 4}});
		auto map = gbsa(0, {&a, &b}, 10);
		CHECK(map.num_bins() == 5);
		auto sa = summarize_bins(a, map);
		for (size_t i = 0; i < sa.num_bins(); ++i) {
			CHECK(sa.ndv[i] <= 1);
		}
	}

	TEST_CASE("strategy names") {
		CHECK(bin_strategy_from_string("gbsa") == BinStrategy::Gbsa);
		CHECK(bin_strategy_from_string("width") == BinStrategy::EqualWidth);
		CHECK_THROWS(bin_strategy_from_string("bogus"));
	}
}
