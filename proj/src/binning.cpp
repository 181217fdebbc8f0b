#include "fgcard/binning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

#include "fgcard/error.hpp"

namespace fgcard {

std::string_view to_string(BinStrategy strategy) {
	switch (strategy) {
	case BinStrategy::Gbsa:
		return "gbsa";
	case BinStrategy::EqualWidth:
		return "equal_width";
	case BinStrategy::EqualDepth:
		return "equal_depth";
	case BinStrategy::Single:
		return "single";
	}
	return "unknown";
}

BinStrategy bin_strategy_from_string(std::string_view name) {
	if (name == "gbsa") {
		return BinStrategy::Gbsa;
	}
	if (name == "equal_width" || name == "width") {
		return BinStrategy::EqualWidth;
	}
	if (name == "equal_depth" || name == "depth") {
		return BinStrategy::EqualDepth;
	}
	if (name == "single") {
		return BinStrategy::Single;
	}
	throw std::invalid_argument("unknown binning strategy '" + std::string(name) + "'");
}

int BinMap::bin_of(int64_t value) const {
	if (values_.empty()) {
		return 0;
	}
	auto it = std::lower_bound(values_.begin(), values_.end(), value);
	if (it != values_.end() && *it == value) {
		return bins_[it - values_.begin()];
	}
	if (it == values_.begin()) {
		return bins_.front();
	}
	if (it == values_.end()) {
		return bins_.back();
	}
	auto hi = it - values_.begin();
	auto lo = hi - 1;
	// unsigned distance avoids overflow at the int64 extremes
	auto dist_lo = static_cast<uint64_t>(value) - static_cast<uint64_t>(values_[lo]);
	auto dist_hi = static_cast<uint64_t>(values_[hi]) - static_cast<uint64_t>(value);
	return dist_lo <= dist_hi ? bins_[lo] : bins_[hi];
}

std::optional<int> BinMap::find(int64_t value) const {
	auto it = std::lower_bound(values_.begin(), values_.end(), value);
	if (it != values_.end() && *it == value) {
		return bins_[it - values_.begin()];
	}
	return std::nullopt;
}

BinMap BinMap::from_assignment(int group_id, BinStrategy strategy, std::vector<std::pair<int64_t, int>> assignment) {
	BinMap map;
	map.group_id = group_id;
	map.strategy = strategy;
	std::sort(assignment.begin(), assignment.end());
	std::set<int> labels;
	for (auto &[v, b] : assignment) {
		labels.insert(b);
	}
	std::map<int, int> renumber;
	for (int label : labels) {
		renumber.emplace(label, static_cast<int>(renumber.size()));
	}
	map.values_.reserve(assignment.size());
	map.bins_.reserve(assignment.size());
	for (size_t i = 0; i < assignment.size(); ++i) {
		if (i > 0 && assignment[i].first == assignment[i - 1].first) {
			throw std::invalid_argument("value assigned to two bins");
		}
		map.values_.push_back(assignment[i].first);
		map.bins_.push_back(renumber[assignment[i].second]);
	}
	map.num_bins_ = std::max<int>(1, static_cast<int>(renumber.size()));
	return map;
}

BinMap BinMap::from_arrays(int group_id, BinStrategy strategy, int num_bins, std::vector<int64_t> values,
                           std::vector<int32_t> bins) {
	if (values.size() != bins.size() || num_bins < 1 || !std::is_sorted(values.begin(), values.end())) {
		throw DataError("inconsistent bin map arrays");
	}
	for (auto b : bins) {
		if (b < 0 || b >= num_bins) {
			throw DataError("bin index out of range");
		}
	}
	BinMap map;
	map.group_id = group_id;
	map.strategy = strategy;
	map.num_bins_ = num_bins;
	map.values_ = std::move(values);
	map.bins_ = std::move(bins);
	return map;
}

namespace {

//! Running moments of the non-zero counts of a run of values.
struct Moments {
	__int128 sum = 0;
	__int128 sum_sq = 0;
	int64_t nonzero = 0;

	void add(int64_t c) {
		if (c != 0) {
			sum += c;
			sum_sq += static_cast<__int128>(c) * c;
			++nonzero;
		}
	}
	Moments operator-(const Moments &o) const {
		return Moments {sum - o.sum, sum_sq - o.sum_sq, nonzero - o.nonzero};
	}
	double variance() const {
		if (nonzero < 2) {
			return 0.0;
		}
		// m*S2 - S1^2 is exact; only the final division rounds
		__int128 numer = static_cast<__int128>(nonzero) * sum_sq - sum * sum;
		return static_cast<double>(numer) / (static_cast<double>(nonzero) * static_cast<double>(nonzero));
	}
};

std::vector<Moments> prefix_moments(std::span<const int64_t> counts) {
	std::vector<Moments> prefix(counts.size() + 1);
	for (size_t i = 0; i < counts.size(); ++i) {
		prefix[i + 1] = prefix[i];
		prefix[i + 1].add(counts[i]);
	}
	return prefix;
}

size_t best_cut(const std::vector<Moments> &prefix, size_t lo, size_t hi) {
	size_t best = lo + 1;
	double best_cost = 0;
	__int128 best_balance = 0;
	for (size_t t = lo + 1; t < hi; ++t) {
		auto left = prefix[t] - prefix[lo];
		auto right = prefix[hi] - prefix[t];
		double cost = left.variance() + right.variance();
		__int128 balance = left.sum > right.sum ? left.sum - right.sum : right.sum - left.sum;
		if (t == lo + 1 || cost < best_cost || (cost == best_cost && balance < best_balance)) {
			best = t;
			best_cost = cost;
			best_balance = balance;
		}
	}
	return best;
}

std::vector<int64_t> union_domain(const std::vector<const ValueCountStore *> &stores) {
	std::vector<int64_t> domain;
	for (auto *s : stores) {
		for (auto &[v, c] : s->counts()) {
			domain.push_back(v);
		}
	}
	std::sort(domain.begin(), domain.end());
	domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
	return domain;
}

//! Member indices by decreasing domain size; stable, so equal sizes keep the caller's (sorted key) order.
std::vector<size_t> keys_by_domain_size(const std::vector<const ValueCountStore *> &stores) {
	std::vector<size_t> order(stores.size());
	std::iota(order.begin(), order.end(), size_t {0});
	std::stable_sort(order.begin(), order.end(),
	                 [&](size_t a, size_t b) { return stores[a]->ndv() > stores[b]->ndv(); });
	return order;
}

BinMap from_value_lists(int group_id, BinStrategy strategy, const std::vector<std::vector<int64_t>> &bins) {
	std::vector<std::pair<int64_t, int>> assignment;
	for (size_t b = 0; b < bins.size(); ++b) {
		for (auto v : bins[b]) {
			assignment.emplace_back(v, static_cast<int>(b));
		}
	}
	return BinMap::from_assignment(group_id, strategy, std::move(assignment));
}

} // namespace

double count_variance(std::span<const int64_t> counts) {
	Moments m;
	for (auto c : counts) {
		m.add(c);
	}
	return m.variance();
}

std::map<int, int> allocate_bin_budget(const std::map<int, int64_t> &group_workload_counts, int total_budget) {
	if (total_budget < static_cast<int>(group_workload_counts.size())) {
		throw std::invalid_argument("bin budget " + std::to_string(total_budget) + " is smaller than the number of groups");
	}
	std::map<int, int> out;
	if (group_workload_counts.empty()) {
		return out;
	}
	std::map<int, int64_t> counts = group_workload_counts;
	int64_t sum = 0;
	for (auto &[g, n] : counts) {
		if (n < 0) {
			throw std::invalid_argument("negative workload count");
		}
		sum += n;
	}
	if (sum == 0) {
		for (auto &[g, n] : counts) {
			n = 1;
		}
		sum = static_cast<int64_t>(counts.size());
	}
	int assigned = 0;
	for (auto &[g, n] : counts) {
		double raw = static_cast<double>(total_budget) * static_cast<double>(n) / static_cast<double>(sum);
		int k = std::max(1, static_cast<int>(std::llround(raw)));
		out[g] = k;
		assigned += k;
	}
	std::vector<int> by_use;
	for (auto &[g, n] : counts) {
		by_use.push_back(g);
	}
	// most used first, ties by smaller group id
	std::stable_sort(by_use.begin(), by_use.end(), [&](int a, int b) { return counts[a] > counts[b]; });
	int residual = total_budget - assigned;
	for (size_t i = 0; residual > 0; i = (i + 1) % by_use.size()) {
		++out[by_use[i]];
		--residual;
	}
	while (residual < 0) {
		bool progressed = false;
		for (auto it = by_use.rbegin(); it != by_use.rend() && residual < 0; ++it) {
			if (out[*it] > 1) {
				--out[*it];
				++residual;
				progressed = true;
			}
		}
		if (!progressed) {
			break;
		}
	}
	return out;
}

size_t min_variance_dichotomy(std::span<const int64_t> sorted_counts) {
	if (sorted_counts.size() < 2) {
		throw std::invalid_argument("cannot split a bin with fewer than two values");
	}
	auto prefix = prefix_moments(sorted_counts);
	return best_cut(prefix, 0, sorted_counts.size());
}

std::vector<std::vector<int64_t>> min_variance_bins(std::vector<ValueCount> value_counts, int k) {
	if (k < 1) {
		throw std::invalid_argument("bin count must be at least 1");
	}
	std::sort(value_counts.begin(), value_counts.end(), [](const ValueCount &a, const ValueCount &b) {
		return a.count != b.count ? a.count < b.count : a.value < b.value;
	});
	std::vector<int64_t> counts;
	counts.reserve(value_counts.size());
	for (auto &vc : value_counts) {
		counts.push_back(vc.count);
	}
	auto prefix = prefix_moments(counts);

	struct Range {
		size_t lo, hi;
	};
	std::vector<Range> ranges {{0, value_counts.size()}};
	if (value_counts.empty()) {
		return {{}};
	}
	struct Candidate {
		double variance;
		__int128 mass;
		size_t size;
		size_t index;
		bool operator<(const Candidate &o) const {
			// priority_queue pops the largest: highest variance, then heaviest, then widest, then lowest index
			if (variance != o.variance) {
				return variance < o.variance;
			}
			if (mass != o.mass) {
				return mass < o.mass;
			}
			if (size != o.size) {
				return size < o.size;
			}
			return index > o.index;
		}
	};
	auto candidate = [&](size_t idx) {
		auto m = prefix[ranges[idx].hi] - prefix[ranges[idx].lo];
		return Candidate {m.variance(), m.sum, ranges[idx].hi - ranges[idx].lo, idx};
	};
	std::priority_queue<Candidate> heap;
	heap.push(candidate(0));
	while (static_cast<int>(ranges.size()) < k && !heap.empty()) {
		auto top = heap.top();
		heap.pop();
		if (top.size < 2) {
			continue;
		}
		auto [lo, hi] = ranges[top.index];
		size_t cut = best_cut(prefix, lo, hi);
		ranges[top.index] = Range {lo, cut};
		ranges.push_back(Range {cut, hi});
		heap.push(candidate(top.index));
		heap.push(candidate(ranges.size() - 1));
	}
	std::vector<std::vector<int64_t>> bins;
	bins.reserve(ranges.size());
	for (auto &r : ranges) {
		std::vector<int64_t> values;
		for (size_t i = r.lo; i < r.hi; ++i) {
			values.push_back(value_counts[i].value);
		}
		bins.push_back(std::move(values));
	}
	return bins;
}

BinMap gbsa(int group_id, const std::vector<const ValueCountStore *> &member_stores, int k) {
	if (k < 2) {
		throw std::invalid_argument("GBSA needs at least two bins; use the single strategy");
	}
	if (member_stores.empty()) {
		throw std::invalid_argument("GBSA needs at least one member key");
	}
	auto order = keys_by_domain_size(member_stores);
	auto domain = union_domain(member_stores);

	auto &first = *member_stores[order[0]];
	std::vector<ValueCount> first_counts;
	first_counts.reserve(domain.size());
	for (auto v : domain) {
		first_counts.push_back(ValueCount {v, first.count(v)});
	}
	auto bins = min_variance_bins(std::move(first_counts), std::max(1, k / 2));

	int remain = k / 2;
	for (size_t j = 1; j < order.size(); ++j) {
		int splits = remain / 2;
		if (splits < 1) {
			break;
		}
		auto &store = *member_stores[order[j]];
		std::vector<double> variance(bins.size());
		for (size_t b = 0; b < bins.size(); ++b) {
			std::vector<int64_t> counts;
			counts.reserve(bins[b].size());
			for (auto v : bins[b]) {
				counts.push_back(store.count(v));
			}
			variance[b] = count_variance(counts);
		}
		std::vector<size_t> by_variance(bins.size());
		std::iota(by_variance.begin(), by_variance.end(), size_t {0});
		std::stable_sort(by_variance.begin(), by_variance.end(),
		                 [&](size_t a, size_t b) { return variance[a] > variance[b]; });
		int done = 0;
		for (size_t p : by_variance) {
			if (done >= splits) {
				break;
			}
			if (bins[p].size() < 2) {
				continue;
			}
			std::vector<ValueCount> members;
			members.reserve(bins[p].size());
			for (auto v : bins[p]) {
				members.push_back(ValueCount {v, store.count(v)});
			}
			std::sort(members.begin(), members.end(), [](const ValueCount &a, const ValueCount &b) {
				return a.count != b.count ? a.count < b.count : a.value < b.value;
			});
			std::vector<int64_t> counts;
			counts.reserve(members.size());
			for (auto &m : members) {
				counts.push_back(m.count);
			}
			size_t cut = min_variance_dichotomy(counts);
			std::vector<int64_t> left, right;
			for (size_t i = 0; i < members.size(); ++i) {
				(i < cut ? left : right).push_back(members[i].value);
			}
			bins[p] = std::move(left);
			bins.push_back(std::move(right));
			++done;
		}
		remain /= 2;
	}
	return from_value_lists(group_id, BinStrategy::Gbsa, bins);
}

BinMap equal_width_bins(int group_id, const std::vector<const ValueCountStore *> &member_stores, int k) {
	if (k < 1) {
		throw std::invalid_argument("bin count must be at least 1");
	}
	auto domain = union_domain(member_stores);
	std::vector<std::pair<int64_t, int>> assignment;
	if (domain.empty() || domain.front() == domain.back() || k == 1) {
		for (auto v : domain) {
			assignment.emplace_back(v, 0);
		}
		auto map = BinMap::from_assignment(group_id, BinStrategy::EqualWidth, std::move(assignment));
		return map;
	}
	__int128 lo = domain.front();
	__int128 span = static_cast<__int128>(domain.back()) - lo + 1;
	for (auto v : domain) {
		auto b = static_cast<int>((static_cast<__int128>(v) - lo) * k / span);
		assignment.emplace_back(v, std::min(b, k - 1));
	}
	return BinMap::from_assignment(group_id, BinStrategy::EqualWidth, std::move(assignment));
}

BinMap equal_depth_bins(int group_id, const std::vector<const ValueCountStore *> &member_stores, int k) {
	if (k < 1) {
		throw std::invalid_argument("bin count must be at least 1");
	}
	auto domain = union_domain(member_stores);
	std::vector<std::pair<int64_t, int>> assignment;
	if (member_stores.empty() || domain.size() < 2 || k == 1) {
		for (auto v : domain) {
			assignment.emplace_back(v, 0);
		}
		return BinMap::from_assignment(group_id, BinStrategy::EqualDepth, std::move(assignment));
	}
	auto &largest = *member_stores[keys_by_domain_size(member_stores).front()];
	__int128 total = largest.total();
	__int128 cumulative = 0;
	for (auto v : domain) {
		int b = total == 0 ? 0 : static_cast<int>(cumulative * k / total);
		assignment.emplace_back(v, std::min(b, k - 1));
		cumulative += largest.count(v);
	}
	return BinMap::from_assignment(group_id, BinStrategy::EqualDepth, std::move(assignment));
}

BinMap single_bin(int group_id, const std::vector<const ValueCountStore *> &member_stores) {
	std::vector<std::pair<int64_t, int>> assignment;
	for (auto v : union_domain(member_stores)) {
		assignment.emplace_back(v, 0);
	}
	return BinMap::from_assignment(group_id, BinStrategy::Single, std::move(assignment));
}

BinMap build_bins(BinStrategy strategy, int group_id, const std::vector<const ValueCountStore *> &member_stores,
                  int k) {
	switch (strategy) {
	case BinStrategy::Gbsa:
		return k < 2 ? single_bin(group_id, member_stores) : gbsa(group_id, member_stores, k);
	case BinStrategy::EqualWidth:
		return equal_width_bins(group_id, member_stores, k);
	case BinStrategy::EqualDepth:
		return equal_depth_bins(group_id, member_stores, k);
	case BinStrategy::Single:
		return single_bin(group_id, member_stores);
	}
	throw std::invalid_argument("unknown binning strategy");
}

KeyBinSummary summarize_bins(const ValueCountStore &store, const BinMap &binmap) {
	KeyBinSummary s;
	auto k = static_cast<size_t>(binmap.num_bins());
	s.total.assign(k, 0);
	s.mfv.assign(k, 0);
	s.ndv.assign(k, 0);
	for (auto &[v, c] : store.counts()) {
		auto b = static_cast<size_t>(binmap.bin_of(v));
		s.total[b] += c;
		s.mfv[b] = std::max(s.mfv[b], c);
		s.ndv[b] += 1;
	}
	return s;
}

void apply_update(ValueCountStore &store, KeyBinSummary &summary, const BinMap &binmap, const KeyDelta &delta) {
	if (delta.empty()) {
		return;
	}
	std::map<int64_t, int64_t> net;
	for (auto v : delta.inserted) {
		++net[v];
	}
	for (auto v : delta.deleted) {
		--net[v];
	}
	for (auto &[v, d] : net) {
		if (store.count(v) + d < 0) {
			throw DataError("deleting value " + std::to_string(v) + " more often than it occurs");
		}
	}
	for (auto &[v, d] : net) {
		if (d != 0) {
			store.add(v, d);
		}
	}
	summary = summarize_bins(store, binmap);
}

} // namespace fgcard
