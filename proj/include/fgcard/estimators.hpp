#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fgcard/binning.hpp"
#include "fgcard/predicate.hpp"
#include "fgcard/table.hpp"

namespace fgcard {

enum class EstimatorKind { TrueScan, Sample, ChowLiu };

std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(std::string_view name);

//! Which most-frequent-value counts a distribution reports. Conditioned counts are additionally capped by the
//! filtered per-value maximum the estimator observes; unconditioned counts come straight from the bin summary.
enum class MfvMode { Conditioned, Unconditioned };

//! One requested join key of a table with its bin map and (optional) full-table bin summary.
struct KeyStats {
	std::string column;
	const BinMap *bins = nullptr;
	const KeyBinSummary *summary = nullptr;
};

//! Largest number of cells a single distribution tensor may hold.
inline constexpr size_t MAX_TENSOR_CELLS = size_t {1} << 23;

//! P(keys in bins | filter) * |filter| over the requested keys, plus per-key per-bin MFV bounds.
struct BinDistribution {
	std::vector<std::string> keys;
	//! Bins of each key plus one trailing null state.
	std::vector<int> dims;
	//! Row-major over dims (first key outermost); summing every cell gives filtered_total for exact estimators.
	std::vector<double> mass;
	//! Per key, per state; the null state has 0.
	std::vector<std::vector<double>> mfv;
	double filtered_total = 0.0;

	double mass_sum() const;
};

//! Exact distribution of the filtered table.
BinDistribution truescan_distribution(const Table &table, const Predicate *filter, std::span<const KeyStats> keys,
                                      MfvMode mode = MfvMode::Conditioned);
//! Exact number of rows passing the filter.
int64_t count_filtered(const Table &table, const Predicate *filter);

struct Sample {
	double rate = 1.0;
	uint64_t seed = 0;
	//! Row count of the table the sample represents.
	uint64_t source_rows = 0;
	Table rows;
};

//! round(rate * rows) rows drawn without replacement. Throws std::invalid_argument unless 0 < rate <= 1.
Sample build_sample(const Table &table, double rate, uint64_t seed);
//! Sample counts scaled by 1/rate.
BinDistribution sample_distribution(const Sample &sample, const Predicate *filter, std::span<const KeyStats> keys,
                                    MfvMode mode = MfvMode::Conditioned);
//! Redraws the sample so it is again a uniform sample of the updated table (the table after the delta).
void update_sample(Sample &sample, const Table &inserted, const Table &deleted, uint64_t seed);

//! Mutual information in nats of two discrete columns (state ids >= 0) from their empirical joint.
double mutual_information(std::span<const int> x, std::span<const int> y);

//! One node of a Chow-Liu tree: a binned join key or a discretized filter attribute. The last state is null.
struct ChowLiuNode {
	std::string column;
	bool is_key = false;
	ColumnKind kind = ColumnKind::Integer;
	int states = 1;
	//! Attribute nodes: distinct observed values (one column named `column`, trailing null row when nulls occur),
	//! their counts and categories.
	Table values;
	std::vector<int64_t> value_counts;
	std::vector<int32_t> value_category;
	//! Numeric attributes: inclusive upper bound of each category.
	std::vector<double> upper_bounds;
	//! Categorical attributes: value -> category (values outside it go to the last non-null category).
	std::map<std::string, int> string_category;
};

//! Maximum number of categories (null included) of a discretized filter attribute.
inline constexpr int MAX_ATTRIBUTE_STATES = 64;

struct ChowLiuModel {
	std::vector<ChowLiuNode> nodes;
	//! Tree parent of each node (-1 for roots).
	std::vector<int> parent;
	//! Per node, per state row counts.
	std::vector<std::vector<int64_t>> node_counts;
	//! Per non-root node: parent_state * states + state -> row count.
	std::vector<std::vector<int64_t>> edge_counts;
	int64_t rows = 0;
	double total_mi = 0.0;

	int node_index(std::string_view column) const;
	std::vector<std::pair<int, int>> edges() const;
	//! Add-one smoothed P(state) for roots, P(state | parent state) otherwise; rows indexed by parent state.
	std::vector<double> cpt(int node) const;
	//! State of a row value for node `n` of `table`.
	int state_of(int n, const Table &table, size_t row, const BinMap *bins) const;
	int state_of(int n, const Column &column, size_t row, const BinMap *bins) const;
};

//! Fits the maximum-MI spanning tree (Kruskal, ties by edge name) over the keys and the filter attributes.
//! Empty `filter_columns` selects every integer, float and categorical non-key column.
ChowLiuModel fit_chowliu(const Table &table, std::span<const KeyStats> keys,
                         const std::vector<std::string> &filter_columns = {});

//! Sum over all states of the other nodes of P(x) * prod evidence, as a dense tensor over `query_nodes` (null
//! states included). `evidence[n]` empty means no evidence on node n. `normalizer` receives the full sum.
std::vector<double> chowliu_joint(const ChowLiuModel &model, const std::vector<int> &query_nodes,
                                  const std::vector<std::vector<double>> &evidence, double *normalizer = nullptr);

//! Conjunct-wise split of a filter into the part the model can represent and the rest.
struct ChowLiuEvidence {
	std::vector<std::vector<double>> weights; //!< per node, empty when unconstrained
	bool complete = true;                     //!< every conjunct is represented
};
ChowLiuEvidence chowliu_evidence(const ChowLiuModel &model, const Predicate *filter);

//! Key distribution from the tree. |filter| comes from the model when the filter is fully representable and from
//! `fallback` otherwise (EstimationError if that is needed but missing).
BinDistribution chowliu_distribution(const ChowLiuModel &model, const Sample *fallback, const Predicate *filter,
                                     std::span<const KeyStats> keys);
//! Updates the sufficient statistics with the delta rows; tree structure and discretization stay fixed.
void update_chowliu(ChowLiuModel &model, const Table &inserted, const Table &deleted,
                    const std::map<std::string, const BinMap *> &key_bins);

//! Fitted single-table estimator of one table.
struct TableEstimator {
	EstimatorKind kind = EstimatorKind::TrueScan;
	//! Full table (truescan).
	std::optional<Table> table;
	//! Sample (sample estimator, Chow-Liu fallback).
	std::optional<Sample> sample;
	std::optional<ChowLiuModel> chowliu;

	BinDistribution distribution(const Predicate *filter, std::span<const KeyStats> keys,
	                             MfvMode mode = MfvMode::Conditioned) const;
};

struct EstimatorConfig {
	EstimatorKind kind = EstimatorKind::ChowLiu;
	double rate = 0.01;
	uint64_t seed = 42;
};

TableEstimator fit_estimator(const Table &table, std::span<const KeyStats> keys, const EstimatorConfig &config);
void update_estimator(TableEstimator &estimator, const Table &inserted, const Table &deleted,
                      const std::map<std::string, const BinMap *> &key_bins, uint64_t seed);

} // namespace fgcard
