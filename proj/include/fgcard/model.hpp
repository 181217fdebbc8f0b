#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fgcard/binning.hpp"
#include "fgcard/catalog.hpp"
#include "fgcard/estimators.hpp"
#include "fgcard/query.hpp"
#include "fgcard/table.hpp"

namespace fgcard {

inline constexpr int DEFAULT_BINS_PER_GROUP = 100;

struct RunConfig {
	//! Total bin budget K; unset means DEFAULT_BINS_PER_GROUP per group.
	std::optional<int> total_bins;
	//! Per catalog group k, applied after budget allocation.
	std::map<int, int> group_overrides;
	BinStrategy strategy = BinStrategy::Gbsa;
	EstimatorKind estimator = EstimatorKind::ChowLiu;
	double rate = 0.01;
	uint64_t seed = 42;
	size_t subplan_cap = DEFAULT_SUBPLAN_CAP;
	//! Catalog group -> number of workload queries touching it. Empty means an even split.
	std::map<int, int64_t> workload_group_counts;

	bool operator==(const RunConfig &) const = default;
};

//! Number of queries referencing each catalog group (every group of the catalog appears, possibly with 0).
std::map<int, int64_t> workload_group_counts(const std::vector<QueryIR> &queries, const Catalog &catalog);

//! Trained statistics: bins, exact key stores and summaries, and one fitted estimator per table.
struct Model {
	Catalog catalog;
	RunConfig config;
	std::map<int, BinMap> bins; //!< catalog group -> bins
	std::map<KeyRef, ValueCountStore> stores;
	std::map<KeyRef, KeyBinSummary> summaries;
	std::map<std::string, TableEstimator> estimators;
	//! Free-form provenance (data digests, creation time).
	std::map<std::string, std::string> provenance;

	const BinMap &bin_map(const KeyRef &key) const;
	const KeyBinSummary &summary(const KeyRef &key) const;
	const TableEstimator &estimator(const std::string &table) const;
	std::vector<KeyStats> key_stats(const std::string &table, const std::vector<std::string> &columns) const;
	BinDistribution distribution(const std::string &table, const Predicate *filter,
	                             const std::vector<std::string> &keys, MfvMode mode = MfvMode::Conditioned) const;
	//! Sum of bins over all groups.
	int bin_budget() const;
};

//! Offline phase: budget, bins, summaries and estimators.
Model train(const Database &db, const RunConfig &config);

struct TableDelta {
	Table inserted;
	Table deleted;
};

//! Name of the optional marker column of a delta CSV: "insert" (or empty) and "delete".
inline constexpr std::string_view DELTA_MARKER_COLUMN = "_op";

//! Reads `<table>.csv` delta files from `dir` (tables without a file are skipped). Rows whose marker column says
//! "delete" become deletions, every other row an insertion. Throws DataError on unknown tables or markers.
std::map<std::string, TableDelta> load_deltas(const Catalog &catalog, const std::filesystem::path &dir);

//! Order-sensitive FNV digest of a table's rows, as 16 hex digits.
std::string data_digest(const Table &table);

//! Applies row deltas with the bins frozen. All-or-nothing: throws DataError and leaves the model unchanged if a
//! deleted row does not exist.
void update(Model &model, const std::map<std::string, TableDelta> &deltas);

//! Classic baseline: product of filtered table sizes divided by max(NDV) of each join condition.
double selinger_estimate(const QueryIR &query, const Catalog &catalog, const std::map<std::string, double> &selectivities,
                         const std::map<KeyRef, uint64_t> &ndv);

} // namespace fgcard
