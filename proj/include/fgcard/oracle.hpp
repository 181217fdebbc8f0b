#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fgcard/factorgraph.hpp"
#include "fgcard/model.hpp"
#include "fgcard/query.hpp"
#include "fgcard/table.hpp"
#include "json.hpp"

namespace fgcard {

//! Upper limit on intermediate groups held by the exact counter.
inline constexpr size_t ORACLE_MAX_GROUPS = size_t {1} << 25;

//! Exact COUNT(*) of the filtered equi-join. Aggregates per join-key value instead of materializing tuples.
//! Throws DataError on overflow or when ORACLE_MAX_GROUPS is exceeded.
uint64_t exact_cardinality(const QueryIR &query, const Database &db);
//! Nested-loop reference of exact_cardinality for small inputs.
uint64_t nested_loop_cardinality(const QueryIR &query, const Database &db);

struct SyntheticKey {
	std::string name;
	uint64_t domain = 100;
	double skew = 0.0;   //!< Zipf exponent; 0 is uniform
	bool unique = false; //!< row number + 1 (primary key)
	double null_fraction = 0.0;
};

struct SyntheticAttribute {
	std::string name;
	ColumnKind kind = ColumnKind::Integer;
	uint64_t domain = 100;
	//! Key column this attribute follows, with the probability of copying it (mod domain).
	std::string correlated_with;
	double correlation = 0.0;
	double null_fraction = 0.0;
};

struct SyntheticTable {
	std::string name;
	uint64_t rows = 1000;
	std::vector<SyntheticKey> keys;
	std::vector<SyntheticAttribute> attributes;
};

struct SyntheticSpec {
	uint64_t seed = 1;
	std::vector<SyntheticTable> tables;
	std::vector<std::string> joins; //!< "T.a=U.b"

	static SyntheticSpec from_json(const nlohmann::json &doc);
	nlohmann::json to_json() const;
};

//! Schema descriptor of the generated database.
nlohmann::json synthetic_schema(const SyntheticSpec &spec);
//! Deterministic for a given spec (seed included).
Database generate_db(const SyntheticSpec &spec);
//! Writes schema.json and one CSV per table.
void write_database(const Database &db, const std::filesystem::path &dir);

//! Star: a fact table F(id, d0..d{n-1}, x) referencing dimension tables Di(id, a); foreign keys follow Zipf(skew).
SyntheticSpec star_spec(int dimensions, uint64_t fact_rows, uint64_t dim_rows, double skew, uint64_t seed);
//! Chain T0 <- T1 <- ... : Ti(id, prev, a) with Ti.prev = T{i-1}.id.
SyntheticSpec chain_spec(int tables, uint64_t rows, double skew, uint64_t seed);

enum class QueryTemplate { Chain, Star, SelfJoin, Cyclic, Any };

struct WorkloadSpec {
	size_t queries = 100;
	int min_aliases = 2;
	int max_aliases = 4;
	QueryTemplate shape = QueryTemplate::Any;
	double filter_probability = 0.5;
	uint64_t seed = 1;
};

//! Random valid queries over the catalog's join relations with filters drawn from the data.
std::vector<QueryIR> generate_workload(const Database &db, const WorkloadSpec &spec);

struct QueryOutcome {
	double estimate = 0.0;
	uint64_t truth = 0;
	double ratio = 0.0; //!< estimate / truth, or estimate + 1 when truth is 0
	bool zero_truth = false;
	bool failed = false;
	std::string error;
	double wall_ms = 0.0;
};

struct ErrorMetrics {
	std::vector<QueryOutcome> outcomes;
	double p50 = 0.0, p95 = 0.0, p99 = 0.0;
	double under_fraction = 0.0; //!< share of estimates below the truth
	size_t zero_truth = 0;
	size_t failed = 0;
	double mean_ms = 0.0;

	nlohmann::json to_json() const;
	std::string table() const;
};

//! Nearest-rank percentile (p in (0, 100]) of an unsorted sample.
double nearest_rank(std::vector<double> values, double p);
//! Aggregates outcomes; zero-truth and failed queries are excluded from the percentiles.
ErrorMetrics summarize_outcomes(std::vector<QueryOutcome> outcomes);

//! Exact count of each query, or nullopt where the oracle fails (its message goes to `errors` when given).
std::vector<std::optional<uint64_t>> exact_cardinalities(const std::vector<QueryIR> &queries, const Database &db,
                                                         std::vector<std::string> *errors = nullptr);

using QueryEstimator = std::function<EstimateReport(const QueryIR &)>;
//! Compares `estimator` against precomputed truths; queries without a truth count as failed.
ErrorMetrics evaluate_estimates(const std::vector<QueryIR> &queries, const std::vector<std::optional<uint64_t>> &truths,
                                const QueryEstimator &estimator);

//! Estimates every query (with `options`) and compares it to exact_cardinality.
ErrorMetrics evaluate_workload(const Model &model, const std::vector<QueryIR> &queries, const Database &db,
                               const EstimateOptions &options = {});

} // namespace fgcard
