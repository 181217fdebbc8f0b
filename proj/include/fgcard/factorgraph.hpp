#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fgcard/estimators.hpp"
#include "fgcard/model.hpp"
#include "fgcard/query.hpp"
#include "json.hpp"

namespace fgcard {

//! Per-bin rule used when a variable is eliminated.
enum class BinRule {
	Bound,   //!< min_f(mass_f / V*_f) * prod_f V*_f
	Uniform, //!< prod_f mass_f * min_f ndv_f / prod_f ndv_f
};

//! Where factor masses come from.
enum class MassSource {
	Conditional, //!< estimator distribution under the alias filter
	Independent, //!< unfiltered key distribution times filter selectivity
};

enum class JoinHistMode { Classic, WithBound, WithConditional };

std::string_view to_string(JoinHistMode mode);
JoinHistMode joinhist_mode_from_string(std::string_view name);

struct EstimateOptions {
	MfvMode mfv = MfvMode::Conditioned;
	BinRule rule = BinRule::Bound;
	MassSource mass = MassSource::Conditional;
	//! Attach the factor graph dump to the report.
	bool explain = false;
};

//! Dense factor over variables. Each dimension holds the variable's bins followed by a null state; null states
//! never take part in a join.
struct Factor {
	std::vector<int> vars; //!< ascending labels
	std::vector<int> dims;
	std::vector<double> mass; //!< row-major, first variable outermost
	//! Per variable, per state: the most-frequent-value bound (Bound rule) or distinct values (Uniform rule).
	std::vector<std::vector<double>> mfv;
	uint64_t aliases = 0; //!< provenance bitmask

	size_t cells() const {
		return mass.size();
	}
	double total() const;
	int position(int var) const; //!< -1 when absent
	nlohmann::json to_json(size_t max_cells = 4096) const;
};

//! Joins factors on `pivot` with the per-bin rule, applied for every configuration of the other variables (other
//! shared variables must agree on their bin). With `keep_pivot` the pivot stays as a dimension, otherwise it is
//! summed out. Throws EstimationError when shared variables disagree on their bin count.
Factor join_factors(std::span<const Factor *const> factors, int pivot, bool keep_pivot, BinRule rule = BinRule::Bound);
//! join_factors with the pivot summed out (m >= 2).
Factor eliminate_variable(std::span<const Factor *const> factors, int var, BinRule rule = BinRule::Bound);
//! Plain marginalization of one variable; the null state is skipped unless `include_null`.
Factor sum_out(const Factor &factor, int var, bool include_null);
//! Renames variables; variables mapped to the same label become one dimension (the diagonal, null state empty).
Factor relabel(const Factor &factor, const std::vector<int> &labels);

struct FactorNode {
	std::string alias;
	std::string table;
	std::vector<std::string> key_columns;
	std::vector<int> key_vars; //!< variable of each key column
	double filtered_total = 0.0;
	Factor factor;
};

struct VariableNode {
	int id = 0;
	int catalog_group = 0;
	std::vector<ColumnRef> keys;
	int bins = 0;
};

struct FactorGraph {
	JoinGraph graph;
	std::vector<FactorNode> factors; //!< one per alias, alias order
	std::vector<VariableNode> variables;

	nlohmann::json to_json() const;
};

FactorGraph build_factor_graph(const QueryIR &query, const JoinGraph &graph, const Model &model,
                               const EstimateOptions &options = {});
//! Fewest incident factors first (degrees updated as factors merge), ties by ascending variable id.
std::vector<int> elimination_order(const FactorGraph &graph);
//! Eliminates every variable and multiplies the remaining scalars.
double evaluate_factor_graph(const FactorGraph &graph, BinRule rule = BinRule::Bound);

struct EstimateReport {
	std::string subplan; //!< comma-separated aliases
	std::vector<std::string> aliases;
	double estimate = 0.0;
	double wall_ms = 0.0;
	std::string estimator;
	int bin_budget = 0;
	std::optional<nlohmann::json> explain;

	nlohmann::json to_json() const;
};

EstimateReport estimate(const QueryIR &query, const Model &model, const EstimateOptions &options = {});

struct ProgressiveResult {
	std::vector<SubPlan> plans;
	std::vector<EstimateReport> reports; //!< parallel to plans
	bool truncated = false;
	double wall_ms = 0.0;
};

//! Estimates every connected sub-plan bottom-up. Each sub-plan S joins the cached factor of S minus v with the
//! base factor of v, where v is the highest alias whose removal keeps S connected.
ProgressiveResult progressive_estimate(const QueryIR &query, const Model &model, size_t cap = DEFAULT_SUBPLAN_CAP,
                                       const EstimateOptions &options = {});
//! The progressive value of one sub-plan recomputed from scratch along the same decomposition, without caching.
double fresh_subplan_estimate(const QueryIR &query, const Model &model, uint64_t mask,
                              const EstimateOptions &options = {});

//! Join-histogram baseline variants. Throws EstimationError on cyclic queries.
EstimateReport joinhist_estimate(const QueryIR &query, const Model &model, JoinHistMode mode);

} // namespace fgcard
