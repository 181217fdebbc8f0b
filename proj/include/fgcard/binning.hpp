#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fgcard/catalog.hpp"
#include "fgcard/table.hpp"

namespace fgcard {

enum class BinStrategy { Gbsa, EqualWidth, EqualDepth, Single };

std::string_view to_string(BinStrategy strategy);
BinStrategy bin_strategy_from_string(std::string_view name);

//! Explicit value -> bin assignment shared by every key of one equivalence group. A value maps to the same bin
//! index for every member key.
class BinMap {
public:
	int group_id = 0;
	BinStrategy strategy = BinStrategy::Single;

	//! Number of bins; indices are contiguous in [0, num_bins).
	int num_bins() const {
		return num_bins_;
	}
	//! Sorted domain values and their bins (parallel arrays).
	const std::vector<int64_t> &values() const {
		return values_;
	}
	const std::vector<int32_t> &bins() const {
		return bins_;
	}

	//! Bin of a value. Values outside the trained domain go to the bin of the nearest known value (ties go to the
	//! smaller value).
	int bin_of(int64_t value) const;
	std::optional<int> find(int64_t value) const;

	//! Builds a map from (value, raw bin label) pairs; labels are renumbered to contiguous indices preserving
	//! their relative order.
	static BinMap from_assignment(int group_id, BinStrategy strategy, std::vector<std::pair<int64_t, int>> assignment);
	//! Rebuilds from already contiguous arrays (deserialization).
	static BinMap from_arrays(int group_id, BinStrategy strategy, int num_bins, std::vector<int64_t> values,
	                          std::vector<int32_t> bins);

	bool operator==(const BinMap &) const = default;

private:
	int num_bins_ = 1;
	std::vector<int64_t> values_;
	std::vector<int32_t> bins_;
};

//! Per-bin statistics of one join key under a BinMap.
struct KeyBinSummary {
	std::vector<int64_t> total; //!< rows whose key falls in the bin
	std::vector<int64_t> mfv;   //!< count of the most frequent single value in the bin (V*)
	std::vector<int64_t> ndv;   //!< distinct values in the bin

	size_t num_bins() const {
		return total.size();
	}
	bool operator==(const KeyBinSummary &) const = default;
};

struct ValueCount {
	int64_t value;
	int64_t count;
};

//! Population variance of the non-zero counts (0 when fewer than two).
double count_variance(std::span<const int64_t> counts);

//! Per-group bin budgets: k_i = max(1, round(K * n_i / sum n)) with the rounding residual given to (or taken from)
//! the most (least) used groups. All-zero counts split K evenly.
std::map<int, int> allocate_bin_budget(const std::map<int, int64_t> &group_workload_counts, int total_budget);

//! Minimum-variance binning of one key: values sorted by count (ties by value), then the highest-variance bin is
//! repeatedly split at its best two-way cut until k bins exist or nothing can be split. Returns bins as value
//! lists in creation order.
std::vector<std::vector<int64_t>> min_variance_bins(std::vector<ValueCount> value_counts, int k);

//! Best two-way split of a bin whose values are ordered by `counts` (ascending, ties by value): minimizes the sum
//! of the two sides' count variances, ties broken by total-mass balance then by the leftmost cut. Returns the
//! number of values that go to the left part (in [1, n-1]); n must be >= 2.
size_t min_variance_dichotomy(std::span<const int64_t> sorted_counts);

//! Greedy bin selection over all member keys of a group (k >= 2).
BinMap gbsa(int group_id, const std::vector<const ValueCountStore *> &member_stores, int k);
BinMap equal_width_bins(int group_id, const std::vector<const ValueCountStore *> &member_stores, int k);
BinMap equal_depth_bins(int group_id, const std::vector<const ValueCountStore *> &member_stores, int k);
BinMap single_bin(int group_id, const std::vector<const ValueCountStore *> &member_stores);

//! Dispatches on strategy. GBSA with k < 2 degrades to a single bin.
BinMap build_bins(BinStrategy strategy, int group_id, const std::vector<const ValueCountStore *> &member_stores,
                  int k);

KeyBinSummary summarize_bins(const ValueCountStore &store, const BinMap &binmap);

//! Inserted and deleted key values of one join key (nulls already dropped).
struct KeyDelta {
	std::vector<int64_t> inserted;
	std::vector<int64_t> deleted;
	bool empty() const {
		return inserted.empty() && deleted.empty();
	}
};

//! Applies a delta to an exact store and recomputes the summary under the frozen bin map. Throws DataError (and
//! leaves both untouched) if a deletion would drive a count below zero.
void apply_update(ValueCountStore &store, KeyBinSummary &summary, const BinMap &binmap, const KeyDelta &delta);

} // namespace fgcard
